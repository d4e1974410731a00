use std::collections::HashSet;

use crate::{Error, Result};

/// Directed interaction graph with per-edge attributes.
///
/// Edge `e` leads from node `src[e]` to node `dst[e]`. `edge_feature` and
/// `norm_coeff` are filled in by the functions in this module as a model
/// requires them.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    node_ids: Vec<i64>,
    src: Vec<usize>,
    dst: Vec<usize>,
    edge_weight: Vec<f64>,
    edge_feature: Option<Vec<[f64; 2]>>,
    norm_coeff: Option<Vec<f64>>,
}

impl InteractionGraph {
    /// Unit-weighted graph over `node_ids` with the given `(src, dst)` edges.
    pub fn new(node_ids: Vec<i64>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = node_ids.len();
        let mut seen = HashSet::with_capacity(edges.len());
        for &(s, d) in edges {
            if s >= n || d >= n {
                return Err(Error::invalid(format!("edge ({s}, {d}) outside {n} nodes")));
            }
            if !seen.insert((s, d)) {
                return Err(Error::invalid(format!("duplicate edge ({s}, {d})")));
            }
        }
        Ok(InteractionGraph {
            node_ids,
            src: edges.iter().map(|e| e.0).collect(),
            dst: edges.iter().map(|e| e.1).collect(),
            edge_weight: vec![1.0; edges.len()],
            edge_feature: None,
            norm_coeff: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn node_ids(&self) -> &[i64] {
        &self.node_ids
    }

    pub fn sources(&self) -> &[usize] {
        &self.src
    }

    pub fn targets(&self) -> &[usize] {
        &self.dst
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.src.iter().copied().zip(self.dst.iter().copied())
    }

    pub fn edge_weight(&self) -> &[f64] {
        &self.edge_weight
    }

    pub fn edge_feature(&self) -> Option<&[[f64; 2]]> {
        self.edge_feature.as_deref()
    }

    pub fn norm_coeff(&self) -> Option<&[f64]> {
        self.norm_coeff.as_deref()
    }

    pub fn find_edge(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges().position(|e| e == (src, dst))
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges().filter(|(s, d)| s == d).count()
    }

    /// Distinct in-neighbours of node `i` (sources of edges ending at `i`).
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges().filter(|e| e.1 == i).map(|e| e.0).collect()
    }

    pub(crate) fn set_edge_weight(&mut self, w: Vec<f64>) {
        debug_assert_eq!(w.len(), self.num_edges());
        self.edge_weight = w;
    }

    pub(crate) fn set_edge_feature(&mut self, f: Vec<[f64; 2]>) {
        debug_assert_eq!(f.len(), self.num_edges());
        self.edge_feature = Some(f);
    }

    pub(crate) fn set_norm_coeff(&mut self, c: Vec<f64>) {
        debug_assert_eq!(c.len(), self.num_edges());
        self.norm_coeff = Some(c);
    }

    /// Keeps edges for which `keep(src, dst)` holds, with their attributes.
    pub(crate) fn retain_edges(&mut self, keep: impl Fn(usize, usize) -> bool) {
        let mask: Vec<bool> = self.edges().map(|(s, d)| keep(s, d)).collect();
        fn filter<T: Copy>(v: &[T], mask: &[bool]) -> Vec<T> {
            v.iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(x, _)| *x)
                .collect()
        }
        self.src = filter(&self.src, &mask);
        self.dst = filter(&self.dst, &mask);
        self.edge_weight = filter(&self.edge_weight, &mask);
        self.edge_feature = self.edge_feature.as_ref().map(|f| filter(f, &mask));
        self.norm_coeff = self.norm_coeff.as_ref().map(|c| filter(c, &mask));
    }

    /// Appends an edge with the given weight; features of a new edge are
    /// `(0, 0)` and any normalisation is invalidated.
    pub(crate) fn push_edge(&mut self, src: usize, dst: usize, weight: f64) {
        self.src.push(src);
        self.dst.push(dst);
        self.edge_weight.push(weight);
        if let Some(f) = &mut self.edge_feature {
            f.push([0.0, 0.0]);
        }
        self.norm_coeff = None;
    }

    /// Block-diagonal union: node indices of later graphs are offset, no
    /// edges cross between parts. Attributes must be present on all parts or
    /// on none.
    pub fn disjoint_union<'a>(
        parts: impl IntoIterator<Item = &'a InteractionGraph>,
    ) -> Result<Self> {
        let parts: Vec<&InteractionGraph> = parts.into_iter().collect();
        let with_feat = parts.iter().filter(|g| g.edge_feature.is_some()).count();
        let with_norm = parts.iter().filter(|g| g.norm_coeff.is_some()).count();
        if (with_feat != 0 && with_feat != parts.len())
            || (with_norm != 0 && with_norm != parts.len())
        {
            return Err(Error::invalid(
                "disjoint_union over graphs with differing attributes",
            ));
        }
        let mut out = InteractionGraph {
            node_ids: Vec::new(),
            src: Vec::new(),
            dst: Vec::new(),
            edge_weight: Vec::new(),
            edge_feature: (with_feat > 0).then(Vec::new),
            norm_coeff: (with_norm > 0).then(Vec::new),
        };
        for g in parts {
            let offset = out.node_ids.len();
            out.node_ids.extend_from_slice(&g.node_ids);
            out.src.extend(g.src.iter().map(|s| s + offset));
            out.dst.extend(g.dst.iter().map(|d| d + offset));
            out.edge_weight.extend_from_slice(&g.edge_weight);
            if let (Some(o), Some(f)) = (&mut out.edge_feature, &g.edge_feature) {
                o.extend_from_slice(f);
            }
            if let (Some(o), Some(c)) = (&mut out.norm_coeff, &g.norm_coeff) {
                o.extend_from_slice(c);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(InteractionGraph::new(vec![1, 2], &[(0, 1), (0, 1)]).is_err());
        assert!(InteractionGraph::new(vec![1, 2], &[(0, 2)]).is_err());
    }

    #[test]
    fn union_offsets_indices() {
        let a = InteractionGraph::new(vec![1, 2], &[(1, 0)]).unwrap();
        let b = InteractionGraph::new(vec![7, 8, 9], &[(0, 2), (2, 1)]).unwrap();
        let u = InteractionGraph::disjoint_union([&a, &b]).unwrap();
        assert_eq!(u.num_nodes(), 5);
        assert_eq!(u.edges().collect::<Vec<_>>(), vec![(1, 0), (2, 4), (4, 3)]);
    }
}
