use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajgnn::models::{
    gat_layer, gcn_layer, prepare_graph, GatHeadParams, GatLayerParams, GatOptions, GcnLayerParams,
    GcnMode, HeadMerge, Model, ATTENTION_SLOPE,
};
use trajgnn::numkern::{finite_diff_check, glorot_init, Activation, ParamStore, Tape, Tensor};
use trajgnn::scenegraph::{
    gcn_normalization, inverse_distance_weights, relative_position_edge_features, InteractionGraph,
    NormMode, SceneFrame, Strategy, VehicleState,
};

use super::{all_configs, random_features, random_frame};

/// Worst finite-difference relative gradient error over every model variant
/// and strategy on random scenes of two to six vehicles.
pub fn gradient_suite() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for config in all_configs(8) {
        for strategy in Strategy::ALL {
            let n = rng.gen_range(2..=6);
            let frame = random_frame(&mut rng, n);
            let mut model = Model::new(config, strategy, rng.gen()).unwrap();
            let graph = model.prepare_graph(&frame).unwrap();
            let x = random_features(&mut rng, n, 20);
            // Targets a small offset away from the current output keep the
            // loss near 1e-5, so rounding in the central difference stays
            // far below the 1e-8 floor of the relative error.
            let mut target = model.predict(&x, &graph).unwrap();
            for t in target.data_mut() {
                *t += rng.gen_range(0.005..0.01) * if rng.gen() { 1.0 } else { -1.0 };
            }
            let probe = model.clone();
            let err = finite_diff_check(model.params_mut(), 1e-5, |tape, store| {
                let out = probe.forward_with(store, tape, &x, &graph)?;
                tape.mse(out, &target)
            })
            .unwrap();
            worst = worst.max(err);
        }
    }
    worst
}

type Dense = Vec<Vec<f64>>;

fn to_dense(t: &Tensor) -> Dense {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

fn mm(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            for j in 0..m {
                out[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    out
}

fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn relu(a: &Dense) -> Dense {
    a.iter()
        .map(|r| r.iter().map(|x| x.max(0.0)).collect())
        .collect()
}

fn max_diff(a: &Dense, b: &Tensor) -> f64 {
    let mut m: f64 = 0.0;
    for (i, r) in a.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            m = m.max((x - b.get(i, j)).abs());
        }
    }
    m
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize, loops: bool) -> Vec<(usize, usize)> {
    let p = rng.gen_range(0.1..0.9);
    let mut e = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if (s != d || loops) && rng.gen_bool(p) {
                e.push((s, d));
            }
        }
    }
    e
}

fn distance(a: &VehicleState, b: &VehicleState) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn run_gcn(
    h: &Tensor,
    g: &InteractionGraph,
    store: &ParamStore,
    p: &GcnLayerParams,
    mode: GcnMode,
) -> Tensor {
    let mut tape = Tape::new();
    let x = tape.constant(h.clone());
    let out = gcn_layer(&mut tape, store, x, g, p, mode, Activation::Relu).unwrap();
    tape.value(out).clone()
}

/// Largest deviation of `gcn_layer` from a dense-matrix computation over
/// `trials` random five-node graphs.
pub fn gcn_dense_oracle(trials: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let n = 5;
        let frame = random_frame(&mut rng, n);
        let st = frame.states();
        let edges = random_edges(&mut rng, n, true);
        let weighted = trial % 2 == 0;
        let adapted = trial % 4 >= 2;
        let mut g = InteractionGraph::new(frame.vehicle_ids(), &edges).unwrap();
        if weighted {
            g = inverse_distance_weights(&g, &frame).unwrap();
        }
        let mode = if adapted {
            NormMode::AdaptedNoSelfLoops
        } else {
            NormMode::BaseWithSelfLoops
        };
        let g = gcn_normalization(&g, mode);

        // dense adjacency a[i][j] for edge j -> i
        let mut a = vec![vec![0.0; n]; n];
        for &(s, d) in &edges {
            a[d][s] = if weighted && s != d {
                1.0 / distance(&st[s], &st[d]).max(1.0)
            } else {
                1.0
            };
        }
        for (i, row) in a.iter_mut().enumerate() {
            if adapted {
                row[i] = 0.0;
            } else if row[i] == 0.0 {
                row[i] = 1.0;
            }
        }
        let d_in: Vec<f64> = (0..n).map(|i| a[i].iter().sum()).collect();
        let d_out: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[i][j]).sum()).collect();
        let c: Dense = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if a[i][j] == 0.0 {
                            0.0
                        } else {
                            a[i][j] / (d_in[i] * d_out[j]).sqrt()
                        }
                    })
                    .collect()
            })
            .collect();

        let (f_in, f_out) = (rng.gen_range(1..7), rng.gen_range(1..7));
        let h = random_features(&mut rng, n, f_in);
        let mut store = ParamStore::new();
        let w = store.add("w", glorot_init(f_in, f_out, trial).unwrap());
        let w_s =
            adapted.then(|| store.add("w_s", glorot_init(f_in, f_out, trial + 1000).unwrap()));
        let p = GcnLayerParams { w, w_s };
        let gcn_mode = if adapted {
            GcnMode::Adapted
        } else {
            GcnMode::Base
        };
        let got = run_gcn(&h, &g, &store, &p, gcn_mode);

        let hd = to_dense(&h);
        let mut pre = mm(&c, &mm(&hd, &to_dense(&store.get(w).value)));
        if let Some(ws) = w_s {
            pre = add(&pre, &mm(&hd, &to_dense(&store.get(ws).value)));
        }
        worst = worst.max(max_diff(&relu(&pre), &got));
    }
    worst
}

/// As [`gcn_dense_oracle`] for `gat_layer` with one, two or four heads.
pub fn gat_dense_oracle(trials: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let n = 5;
        let frame = random_frame(&mut rng, n);
        let st = frame.states();
        let edges = random_edges(&mut rng, n, trial % 3 == 0);
        let use_edge = trial % 2 == 0;
        let residual = trial % 4 < 2;
        let heads = [1, 2, 4][(trial % 3) as usize];
        let g = relative_position_edge_features(
            &InteractionGraph::new(frame.vehicle_ids(), &edges).unwrap(),
            &frame,
        )
        .unwrap();

        let (f_in, d) = (rng.gen_range(1..7), rng.gen_range(1..5));
        let h = random_features(&mut rng, n, f_in);
        let mut store = ParamStore::new();
        let att_len = 2 * d + if use_edge { 2 } else { 0 };
        let head_params: Vec<GatHeadParams> = (0..heads)
            .map(|k| GatHeadParams {
                w: store.add(
                    format!("w{k}"),
                    glorot_init(f_in, d, trial * 10 + k as u64).unwrap(),
                ),
                attention: store.add(
                    format!("a{k}"),
                    glorot_init(att_len, 1, trial * 10 + 5 + k as u64).unwrap(),
                ),
            })
            .collect();
        let w_s =
            residual.then(|| store.add("w_s", glorot_init(f_in, heads * d, trial + 7).unwrap()));
        let p = GatLayerParams {
            heads: head_params.clone(),
            w_s,
        };
        let opts = GatOptions {
            use_edge_features: use_edge,
            merge: HeadMerge::Concat,
            activation: Activation::Relu,
        };
        let mut tape = Tape::new();
        let x = tape.constant(h.clone());
        let out = gat_layer(&mut tape, &store, x, &g, &p, opts).unwrap();
        let got = tape.value(out).clone();

        let hd = to_dense(&h);
        let mut merged = vec![Vec::new(); n];
        for hp in &head_params {
            let hw = mm(&hd, &to_dense(&store.get(hp.w).value));
            let a = store.get(hp.attention).value.data().to_vec();
            for i in 0..n {
                let senders: Vec<usize> = edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect();
                let logits: Vec<f64> = senders
                    .iter()
                    .map(|&j| {
                        let mut z: f64 =
                            (0..d).map(|k| a[k] * hw[i][k] + a[d + k] * hw[j][k]).sum();
                        if use_edge {
                            z += a[2 * d] * (st[j].x - st[i].x) / 100.0
                                + a[2 * d + 1] * (st[j].y - st[i].y) / 100.0;
                        }
                        if z < 0.0 {
                            ATTENTION_SLOPE * z
                        } else {
                            z
                        }
                    })
                    .collect();
                let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ex: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
                let total: f64 = ex.iter().sum();
                let mut acc = vec![0.0; d];
                for (&j, e) in senders.iter().zip(&ex) {
                    for k in 0..d {
                        acc[k] += e / total * hw[j][k];
                    }
                }
                merged[i].extend(acc);
            }
        }
        if let Some(ws) = w_s {
            merged = add(&merged, &mm(&hd, &to_dense(&store.get(ws).value)));
        }
        worst = worst.max(max_diff(&relu(&merged), &got));
    }
    worst
}

/// The same scene with vehicle ids reassigned so that node order changes.
fn relabel(frame: &SceneFrame, ids: &[i64]) -> SceneFrame {
    let states = frame
        .states()
        .iter()
        .zip(ids)
        .map(|(s, &id)| VehicleState::new(id, s.x, s.y, s.vx, s.vy, s.lane_id))
        .collect();
    SceneFrame::new(0.0, states).unwrap()
}

/// Largest change of any prediction when the vehicles of a random scene are
/// relabelled so that node order changes.
pub fn equivariance(trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let configs = all_configs(16);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let n = rng.gen_range(2..=8);
        let frame = random_frame(&mut rng, n);
        let cfg = configs[trial % configs.len()];
        let strategy = Strategy::ALL[trial % 4];
        let model = Model::new(cfg, strategy, trial as u64).unwrap();
        let x = random_features(&mut rng, n, 20);
        let out = model
            .predict(&x, &prepare_graph(&cfg, strategy, &frame).unwrap())
            .unwrap();

        let mut ids: Vec<i64> = (0..n as i64).map(|k| 100 + 7 * k).collect();
        ids.shuffle(&mut rng);
        let moved = relabel(&frame, &ids);
        // original row k now sits at the rank of its new id
        let pos: Vec<usize> = ids.iter().map(|id| moved.index_of(*id).unwrap()).collect();
        let mut xp = Tensor::zeros(&[n, 20]);
        for k in 0..n {
            xp.row_mut(pos[k]).copy_from_slice(x.row(k));
        }
        let outp = model
            .predict(&xp, &prepare_graph(&cfg, strategy, &moved).unwrap())
            .unwrap();
        for k in 0..n {
            for (a, b) in out.row(k).iter().zip(outp.row(pos[k])) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

fn two_hop(g: &InteractionGraph, i: usize) -> Vec<bool> {
    let mut reach = vec![false; g.num_nodes()];
    reach[i] = true;
    for _ in 0..2 {
        let cur = reach.clone();
        for (s, d) in g.edges() {
            if cur[d] {
                reach[s] = true;
            }
        }
    }
    reach
}

/// Largest change of a node's prediction when features outside its two-hop
/// in-neighbourhood are perturbed, and the number of scenes where such
/// nodes existed.
pub fn locality(trials: usize) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let configs = all_configs(16);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let n = rng.gen_range(4..=10);
        let frame = random_frame(&mut rng, n);
        let cfg = configs[1 + trial % (configs.len() - 1)];
        let strategy = [Strategy::PrecedingConnection, Strategy::NeighbourConnection][trial % 2];
        let model = Model::new(cfg, strategy, trial as u64).unwrap();
        let g = prepare_graph(&cfg, strategy, &frame).unwrap();
        let x = random_features(&mut rng, n, 20);
        let out = model.predict(&x, &g).unwrap();
        let i = rng.gen_range(0..n);
        let reach = two_hop(&g, i);
        if reach.iter().all(|&r| r) {
            continue;
        }
        let mut xp = x.clone();
        for k in (0..n).filter(|&k| !reach[k]) {
            for v in xp.row_mut(k) {
                *v += rng.gen_range(-5.0..5.0);
            }
        }
        let outp = model.predict(&xp, &g).unwrap();
        worst = out
            .row(i)
            .iter()
            .zip(outp.row(i))
            .fold(worst, |m, (a, b)| m.max((a - b).abs()));
        checked += 1;
    }
    (worst, checked)
}

/// Largest change of a node's prediction under the Self strategy when every
/// other node's features are redrawn, over all model variants.
pub fn self_blindness() -> f64 {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (t, cfg) in all_configs(16).into_iter().enumerate() {
        let n = 6;
        let frame = random_frame(&mut rng, n);
        let model = Model::new(cfg, Strategy::SelfConnections, t as u64).unwrap();
        let g = prepare_graph(&cfg, Strategy::SelfConnections, &frame).unwrap();
        let x = random_features(&mut rng, n, 20);
        let out = model.predict(&x, &g).unwrap();
        let mut xp = random_features(&mut rng, n, 20);
        xp.row_mut(2).copy_from_slice(x.row(2));
        let outp = model.predict(&xp, &g).unwrap();
        worst = out
            .row(2)
            .iter()
            .zip(outp.row(2))
            .fold(worst, |m, (a, b)| m.max((a - b).abs()));
    }
    worst
}
