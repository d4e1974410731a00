use super::{
    InteractionGraph, SceneFrame, VehicleState, EDGE_FEATURE_SCALE, MIN_WEIGHT_DISTANCE_M,
};
use crate::{Error, Result};

/// How [`gcn_normalization`] treats self-loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Adds a unit self-loop to every node lacking one, then normalises.
    BaseWithSelfLoops,
    /// Drops self-loops; the ego node enters through residual weights.
    AdaptedNoSelfLoops,
}

fn node_states<'a>(g: &InteractionGraph, frame: &'a SceneFrame) -> Result<&'a [VehicleState]> {
    if g.node_ids() != frame.vehicle_ids().as_slice() {
        return Err(Error::invalid("graph was not built on this frame"));
    }
    Ok(frame.states())
}

/// Weights each edge by the inverse distance between its endpoints
/// (clamped below at one metre); self-loops get weight 1.
pub fn inverse_distance_weights(
    g: &InteractionGraph,
    frame: &SceneFrame,
) -> Result<InteractionGraph> {
    let states = node_states(g, frame)?;
    let w = g
        .edges()
        .map(|(s, d)| {
            if s == d {
                1.0
            } else {
                1.0 / states[s].distance_to(&states[d]).max(MIN_WEIGHT_DISTANCE_M)
            }
        })
        .collect();
    let mut out = g.clone();
    out.set_edge_weight(w);
    Ok(out)
}

/// Symmetric degree normalisation for directed graphs:
/// `coeff(j→i) = w / sqrt(d_in(i) · d_out(j))` with weighted degrees.
pub fn gcn_normalization(g: &InteractionGraph, mode: NormMode) -> InteractionGraph {
    let mut out = g.clone();
    match mode {
        NormMode::BaseWithSelfLoops => {
            let mut has_loop = vec![false; g.num_nodes()];
            for (s, d) in g.edges() {
                if s == d {
                    has_loop[s] = true;
                }
            }
            for (i, _) in has_loop.iter().enumerate().filter(|(_, &h)| !h) {
                out.push_edge(i, i, 1.0);
            }
        }
        NormMode::AdaptedNoSelfLoops => out.retain_edges(|s, d| s != d),
    }
    let n = out.num_nodes();
    let mut d_in = vec![0.0; n];
    let mut d_out = vec![0.0; n];
    for ((s, d), w) in out.edges().zip(out.edge_weight()) {
        d_in[d] += w;
        d_out[s] += w;
    }
    let coeff = out
        .edges()
        .zip(out.edge_weight())
        .map(|((s, d), w)| {
            w / (d_in[d].max(f64::MIN_POSITIVE) * d_out[s].max(f64::MIN_POSITIVE)).sqrt()
        })
        .collect();
    out.set_norm_coeff(coeff);
    out
}

/// Scaled relative position of the sender seen from the receiver,
/// `((x_j − x_i), (y_j − y_i)) / 100` for edge `j → i`.
pub fn relative_position_edge_features(
    g: &InteractionGraph,
    frame: &SceneFrame,
) -> Result<InteractionGraph> {
    let states = node_states(g, frame)?;
    let f = g
        .edges()
        .map(|(s, d)| {
            [
                (states[s].x - states[d].x) * EDGE_FEATURE_SCALE,
                (states[s].y - states[d].y) * EDGE_FEATURE_SCALE,
            ]
        })
        .collect();
    let mut out = g.clone();
    out.set_edge_feature(f);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegraph::{build_graph, Strategy};

    fn frame(pos: &[(f64, f64)]) -> SceneFrame {
        let states = pos
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| VehicleState::new(i as i64, x, y, 0.0, 0.0, 1))
            .collect();
        SceneFrame::new(0.0, states).unwrap()
    }

    #[test]
    fn inverse_distance() {
        let f = frame(&[(0.0, 0.0), (10.0, 0.0), (10.3, 0.4)]);
        let g = InteractionGraph::new(f.vehicle_ids(), &[(0, 0), (1, 0), (2, 1)]).unwrap();
        let w = inverse_distance_weights(&g, &f).unwrap();
        assert_eq!(w.edge_weight()[0], 1.0);
        assert!((w.edge_weight()[1] - 0.1).abs() < 1e-15);
        // 0.5 m apart: clamped to 1 m
        assert_eq!(w.edge_weight()[2], 1.0);
    }

    #[test]
    fn normalization_cases() {
        let single = InteractionGraph::new(vec![7], &[]).unwrap();
        let n = gcn_normalization(&single, NormMode::BaseWithSelfLoops);
        assert_eq!(n.edges().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(n.norm_coeff().unwrap(), &[1.0]);

        let one = InteractionGraph::new(vec![1, 2], &[(1, 0)]).unwrap();
        assert_eq!(
            gcn_normalization(&one, NormMode::AdaptedNoSelfLoops)
                .norm_coeff()
                .unwrap(),
            &[1.0]
        );

        let two = InteractionGraph::new(vec![1, 2, 3], &[(1, 0), (2, 0)]).unwrap();
        let c = gcn_normalization(&two, NormMode::AdaptedNoSelfLoops);
        let r = 1.0 / 2f64.sqrt();
        assert!(c
            .norm_coeff()
            .unwrap()
            .iter()
            .all(|v| (v - r).abs() < 1e-15));
    }

    #[test]
    fn adapted_mode_drops_loops_base_keeps_one() {
        let g = InteractionGraph::new(vec![1, 2], &[(0, 0), (1, 0)]).unwrap();
        let a = gcn_normalization(&g, NormMode::AdaptedNoSelfLoops);
        assert_eq!(a.self_loop_count(), 0);
        let b = gcn_normalization(&g, NormMode::BaseWithSelfLoops);
        assert_eq!(b.self_loop_count(), 2);
        assert_eq!(b.num_edges(), 3);
    }

    #[test]
    fn edge_features() {
        let f = frame(&[(50.0, 0.0), (80.0, 0.0)]);
        let g = InteractionGraph::new(f.vehicle_ids(), &[(1, 0), (0, 1), (0, 0)]).unwrap();
        let g = relative_position_edge_features(&g, &f).unwrap();
        let e = g.edge_feature().unwrap();
        assert!((e[0][0] - 0.3).abs() < 1e-15 && e[0][1] == 0.0);
        assert_eq!(e[1], [-e[0][0], -e[0][1]]);
        assert_eq!(e[2], [0.0, 0.0]);
    }

    #[test]
    fn graph_must_match_frame() {
        let f = frame(&[(0.0, 0.0), (5.0, 0.0)]);
        let other = frame(&[(0.0, 0.0)]);
        let g = build_graph(&f, Strategy::AllConnections).unwrap();
        assert!(inverse_distance_weights(&g, &other).is_err());
    }
}
