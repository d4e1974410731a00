use trajgnn::classical::CvmPredictor;
use trajgnn::datapipe::{
    generate_synthetic, split_dataset, window_extract, PredictionWindow, Sample, Source,
    SynthConfig, SynthMode, WindowId, WindowVehicle,
};
use trajgnn::exp::*;
use trajgnn::models::ModelConfig;
use trajgnn::scenegraph::Strategy;

fn straight_window() -> PredictionWindow {
    let samples = std::array::from_fn(|k| {
        Some(Sample {
            x: 10.0 * k as f64,
            y: 1.85,
            vx: 10.0,
            vy: 0.0,
            lane_id: 1,
        })
    });
    let v = WindowVehicle {
        vehicle_id: 7,
        samples,
        loss_mask: true,
    };
    PredictionWindow::new(
        WindowId {
            recording_id: 1,
            t0: 5,
        },
        vec![v],
    )
    .unwrap()
}

/// Truth shifted sideways by `offset(step)` metres.
struct Shifted(fn(usize) -> f64);

impl Predictor for Shifted {
    fn name(&self) -> String {
        "shifted".into()
    }

    fn predict_window(&self, w: &PredictionWindow) -> trajgnn::Result<Vec<Trajectory>> {
        Ok(w.vehicles
            .iter()
            .map(|v| {
                std::array::from_fn(|k| {
                    let s = v.samples[5 + k].as_ref().unwrap();
                    [s.x, s.y + (self.0)(k)]
                })
            })
            .collect())
    }
}

#[test]
fn metric_examples() {
    let w = [straight_window()];
    let exact = evaluate_displacement(&Shifted(|_| 0.0), &w).unwrap();
    assert_eq!(
        (exact.mean_displacement, exact.final_displacement),
        (0.0, 0.0)
    );
    let one = evaluate_displacement(&Shifted(|_| 1.0), &w).unwrap();
    assert_eq!((one.mean_displacement, one.final_displacement), (1.0, 1.0));
    let ramp = evaluate_displacement(&Shifted(|k| (k + 1) as f64), &w).unwrap();
    assert_eq!(
        (ramp.mean_displacement, ramp.final_displacement),
        (3.0, 5.0)
    );
    for (k, d) in ramp.per_step.iter().enumerate() {
        assert!((d - (k + 1) as f64).abs() < 1e-12);
    }
    assert_eq!(ramp.count, 1);
}

#[test]
fn metrics_need_scored_vehicles() {
    let mut w = straight_window();
    w.vehicles[0].loss_mask = false;
    assert!(displacement_metrics(&[w], &[vec![[[0.0; 2]; 5]]]).is_err());
    assert!(displacement_metrics(&[straight_window()], &[]).is_err());
}

#[test]
fn mean_std_examples() {
    let (m, s) = mean_std(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((s - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(mean_std(&[4.5]), (4.5, 0.0));
}

#[test]
fn cvm_is_exact_on_constant_velocity_traffic() {
    let cfg = SynthConfig {
        mode: SynthMode::ConstantVelocity,
        recordings: 1,
        duration_s: 40.0,
        ..SynthConfig::default()
    };
    let w = window_extract(&generate_synthetic(&cfg).unwrap(), 5).unwrap();
    let m = evaluate_displacement(&CvmPredictor, &w).unwrap();
    assert!(m.mean_displacement < 1e-9, "{}", m.mean_displacement);
}

fn small_data() -> (Vec<PredictionWindow>, Vec<PredictionWindow>) {
    let cfg = SynthConfig {
        recordings: 2,
        duration_s: 40.0,
        vehicles: 10,
        ..SynthConfig::default()
    };
    let w = window_extract(&generate_synthetic(&cfg).unwrap(), 5).unwrap();
    let (a, b) = w.split_at(w.len() / 2);
    (a.to_vec(), b.to_vec())
}

fn tiny(kind: ModelConfig, strategy: Strategy) -> TrainConfig {
    let mut c = TrainConfig::new(kind.with_hidden_dim(16), strategy, 3);
    c.max_epochs = 3;
    c
}

#[test]
fn training_is_deterministic() {
    let (train_w, val_w) = small_data();
    let cfg = tiny(ModelConfig::gat(), Strategy::NeighbourConnection);
    let a = train(&train_w, &val_w, &cfg).unwrap();
    let b = train(&train_w, &val_w, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.history, b.history);
    assert_eq!(a.history.len(), 3);
    let c = train(&train_w, &val_w, &TrainConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn restores_best_validation_epoch() {
    let (train_w, val_w) = small_data();
    let mut cfg = tiny(ModelConfig::ff(), Strategy::SelfConnections);
    cfg.max_epochs = 6;
    let out = train(&train_w, &val_w, &cfg).unwrap();
    let best = out
        .history
        .iter()
        .map(|h| h.val_mean_displacement)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.history[out.best_epoch - 1].val_mean_displacement, best);
    let now = evaluate_displacement(&out.model, &val_w)
        .unwrap()
        .mean_displacement;
    assert!((now - best).abs() < 1e-12);
}

#[test]
fn patience_stops_training() {
    let (train_w, val_w) = small_data();
    let mut cfg = tiny(ModelConfig::ff(), Strategy::SelfConnections);
    cfg.adam.learning_rate = 0.0;
    cfg.max_epochs = 20;
    cfg.patience = Some(2);
    let out = train(&train_w, &val_w, &cfg).unwrap();
    assert!(out.stopped_early);
    assert_eq!(out.history.len(), 3);
    assert_eq!(out.best_epoch, 1);
}

#[test]
fn overfits_ten_windows() {
    let cfg = SynthConfig {
        recordings: 1,
        duration_s: 60.0,
        vehicles: 10,
        ..SynthConfig::default()
    };
    let w = window_extract(&generate_synthetic(&cfg).unwrap(), 5).unwrap();
    let few = &w[..10];
    let mut cfg = TrainConfig::new(ModelConfig::ff(), Strategy::SelfConnections, 0);
    cfg.patience = None;
    cfg.max_epochs = 500;
    let out = train(few, few, &cfg).unwrap();
    let last = out.history.last().unwrap().train_loss;
    let min = out
        .history
        .iter()
        .map(|h| h.train_loss)
        .fold(f64::INFINITY, f64::min);
    assert!(min < 1e-3, "min loss {min}, last {last}");
}

#[test]
fn ablation_grid_has_thirteen_rows() {
    let grid = ablation_grid(&ModelConfig::gat());
    assert_eq!(grid.len(), 13);
    assert_eq!(
        grid.iter()
            .filter(|e| e.variant == "connection-strategy")
            .count(),
        4
    );
    let capped: Vec<_> = grid.iter().filter(|e| e.max_seeds.is_some()).collect();
    assert_eq!(capped.len(), 1);
    assert_eq!(capped[0].strategy, Strategy::AllConnections);
}

#[test]
fn report_rows_and_summary_are_stable() {
    let mut rows = Vec::new();
    for e in ablation_grid(&ModelConfig::gat()) {
        for seed in 0..10u64 {
            rows.push(RunRow {
                model: e.model.kind.name().into(),
                variant: e.variant.clone(),
                strategy: e.strategy.name().into(),
                seed,
                mean_displ: 1.0 + seed as f64 / 8.0,
                final_displ: 2.5,
            });
        }
    }
    let report = RunReport { rows };
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path()).unwrap();
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    let rows_csv = read("rows.csv");
    assert_eq!(
        String::from_utf8(rows_csv.clone()).unwrap().lines().count(),
        131
    );
    let (summary, svg) = (read("summary.csv"), read("summary.svg"));
    emit_report(&report, dir.path()).unwrap();
    assert_eq!(read("rows.csv"), rows_csv);
    assert_eq!(read("summary.csv"), summary);
    assert_eq!(read("summary.svg"), svg);
    assert!(emit_report(&RunReport { rows: vec![] }, dir.path()).is_err());
}

#[test]
fn multi_seed_rows_follow_seed_order() {
    let cfg = SynthConfig {
        recordings: 3,
        duration_s: 30.0,
        vehicles: 8,
        ..SynthConfig::default()
    };
    let w = window_extract(&generate_synthetic(&cfg).unwrap(), 5).unwrap();
    let split = split_dataset(&w, Source::Synthetic).unwrap();
    let mut t = tiny(ModelConfig::ff(), Strategy::SelfConnections);
    t.max_epochs = 1;
    let r = run_multi_seed(&split, &t, &[5, 2]).unwrap();
    assert_eq!(
        r.rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![5, 2]
    );
    assert!(r
        .rows
        .iter()
        .all(|r| r.strategy == "none" && r.model == "ff"));
    assert!(run_multi_seed(&split, &t, &[]).is_err());
}
