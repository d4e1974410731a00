use std::collections::HashSet;

use proptest::prelude::*;
use trajgnn::datapipe::{
    double_ema, generate_synthetic, scenes_from_csv, scenes_to_csv, split_dataset, window_extract,
    Source, SynthConfig, WINDOW_SAMPLES,
};

fn synthetic_windows(recordings: u32) -> Vec<trajgnn::datapipe::PredictionWindow> {
    let cfg = SynthConfig {
        seed: 3,
        recordings,
        duration_s: 60.0,
        vehicles: 12,
        ..SynthConfig::default()
    };
    window_extract(&generate_synthetic(&cfg).unwrap(), 5).unwrap()
}

#[test]
fn scene_files_round_trip() {
    let w = synthetic_windows(2);
    assert!(!w.is_empty());
    let text = scenes_to_csv(&w);
    let back = scenes_from_csv(text.as_bytes()).unwrap();
    assert_eq!(back, w);
    assert_eq!(scenes_to_csv(&back), text);
}

#[test]
fn windows_hold_complete_histories() {
    for w in synthetic_windows(2) {
        assert!(!w.is_empty());
        for v in &w.vehicles {
            assert_eq!(v.history().count(), 5);
            let present = v.samples.iter().filter(|s| s.is_some()).count();
            if v.loss_mask {
                assert_eq!(present, WINDOW_SAMPLES);
            } else {
                assert!((5..WINDOW_SAMPLES).contains(&present));
            }
        }
    }
}

#[test]
fn split_partitions_by_recording() {
    let w = synthetic_windows(10);
    let s = split_dataset(&w, Source::Highd).unwrap();
    assert_eq!(s.train.len() + s.val.len() + s.test.len(), w.len());
    let ids = |part: &[trajgnn::datapipe::PredictionWindow]| -> HashSet<String> {
        part.iter().map(|w| w.id.to_string()).collect()
    };
    let (a, b, c) = (ids(&s.train), ids(&s.val), ids(&s.test));
    assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
    let recs = |part: &[trajgnn::datapipe::PredictionWindow]| -> HashSet<u32> {
        part.iter().map(|w| w.id.recording_id).collect()
    };
    assert_eq!(recs(&s.train).len(), 8);
    assert_eq!(recs(&s.val).len(), 1);
    assert_eq!(recs(&s.test).len(), 1);
    assert!(recs(&s.train).is_disjoint(&recs(&s.test)));
}

#[test]
fn extraction_is_deterministic() {
    assert_eq!(
        scenes_to_csv(&synthetic_windows(2)),
        scenes_to_csv(&synthetic_windows(2))
    );
}

proptest! {
    #[test]
    fn smoothing_stays_within_range(values in proptest::collection::vec(-50.0..50.0f64, 1..200), alpha in 0.01..1.0f64) {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for s in double_ema(&values, alpha) {
            prop_assert!(s >= lo - 1e-9 && s <= hi + 1e-9);
        }
    }

    #[test]
    fn constant_tracks_are_unchanged(c in -100.0..100.0f64, n in 1usize..100, alpha in 0.01..1.0f64) {
        for s in double_ema(&vec![c; n], alpha) {
            prop_assert!((s - c).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }
}
