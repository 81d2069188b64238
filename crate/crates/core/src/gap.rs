//! Signed complementary gaps.
//!
//! The boundary edges that cross the target logical are moved onto a separate
//! "variable" node. Matching with that node off forces an even number of
//! crossings, matching with it fired forces an odd number; the two weights are
//! the best corrections in the two logical classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{decode_with_weights, GraphEdge, MatchingGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub shot: usize,
    /// `+g` when the decoder was right, `-g` otherwise (natural-log units).
    pub signed_gap: f64,
    pub gap_db: f64,
    pub decoder_correct: bool,
    pub w_min: f64,
    pub w_comp: f64,
}

/// Graph with the variable node inserted at index `num_detectors`; the fixed
/// boundary moves to `num_detectors + 1`. Edge ids are unchanged, so weight
/// overlays for the original graph apply directly.
#[derive(Debug, Clone)]
pub struct GapGraph {
    augmented: MatchingGraph,
    variable: usize,
    target: u64,
}

impl GapGraph {
    /// `target` is the observable bit mask of the logical being tracked.
    ///
    /// Interior edges may carry the target bit too. Multiplying the logical by
    /// stabilizers moves it onto the boundary: a potential `f` on detectors
    /// with `f(u) ^ f(v)` equal to the interior edge's bit is found by search,
    /// and boundary edges are split on `bit ^ f(u)`. The class of any
    /// correction then differs from its number of variable-node crossings by a
    /// constant fixed by the defects, so the two runs land in opposite classes.
    pub fn new(graph: &MatchingGraph, target: u64) -> Result<Self> {
        let nd = graph.num_detectors();
        let old_boundary = graph.boundary();
        let bit = |e: &GraphEdge| e.observables & target != 0;
        let mut potential: Vec<Option<bool>> = vec![None; nd];
        for root in 0..nd {
            if potential[root].is_some() {
                continue;
            }
            potential[root] = Some(false);
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                let fu = potential[u].unwrap();
                for &(v, id) in graph.neighbors(u) {
                    if v == old_boundary {
                        continue;
                    }
                    let fv = fu ^ bit(&graph.edges()[id]);
                    match potential[v] {
                        None => {
                            potential[v] = Some(fv);
                            stack.push(v);
                        }
                        Some(f) if f != fv => {
                            return Err(Error::InvalidCircuit(format!(
                                "interior cycle through detectors {u} and {v} flips the target logical"
                            )));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        let mut crossings = 0;
        let edges: Vec<GraphEdge> = graph
            .edges()
            .iter()
            .map(|e| {
                let mut out = e.clone();
                if e.u == old_boundary {
                    std::mem::swap(&mut out.u, &mut out.v);
                }
                if out.v == old_boundary {
                    if bit(e) ^ potential[out.u].unwrap() {
                        out.v = nd;
                        crossings += 1;
                    } else {
                        out.v = nd + 1;
                    }
                }
                out
            })
            .collect();
        if crossings == 0 {
            return Err(Error::InvalidCircuit("no boundary edge crosses the target logical".into()));
        }
        Ok(GapGraph { augmented: MatchingGraph::new(nd + 1, edges)?, variable: nd, target })
    }

    pub fn graph(&self) -> &MatchingGraph {
        &self.augmented
    }

    /// Weights of the best correction with the variable node off and fired:
    /// `(W_off, W_on)`, each with its predicted target bit.
    pub fn class_weights(&self, weights: &[f64], defects: &[usize]) -> Result<((f64, bool), (f64, bool))> {
        let off = decode_with_weights(&self.augmented, weights, defects)?;
        let mut fired = defects.to_vec();
        fired.push(self.variable);
        let on = decode_with_weights(&self.augmented, weights, &fired)?;
        Ok(((off.weight, off.observables & self.target != 0), (on.weight, on.observables & self.target != 0)))
    }
}

/// Signed gap for one shot. The sign follows the class of `W_min`; on an
/// exact tie either class is optimal and `decoder_flip`, the decoder's own
/// prediction of the target bit, decides, so the count of negative gaps equals
/// the decoder's failure count.
pub fn complementary_gap(
    gap_graph: &GapGraph,
    weights: &[f64],
    defects: &[usize],
    decoder_flip: bool,
    true_flip: bool,
    shot: usize,
) -> Result<GapRecord> {
    let ((w_off, c_off), (w_on, c_on)) = gap_graph.class_weights(weights, defects)?;
    let ((w_min, c_min), w_comp) = if w_off <= w_on { ((w_off, c_off), w_on) } else { ((w_on, c_on), w_off) };
    let g = w_comp - w_min;
    let tie = g <= TIE_TOLERANCE * w_comp.abs().max(1.0);
    let predicted = if tie { decoder_flip } else { c_min };
    let decoder_correct = predicted == true_flip;
    let signed_gap = if decoder_correct { g } else { -g };
    Ok(GapRecord { shot, signed_gap, gap_db: gap_to_db_reduced(signed_gap), decoder_correct, w_min, w_comp })
}

const TIE_TOLERANCE: f64 = 1e-9;

/// `g` divided by one dB, where 1 dB = `-ln(p / (1 - p)) * 10 / w` on a
/// reference edge with probability `p` and weight `w`.
pub fn gap_to_db(g: f64, p: f64, w: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidProbability(p));
    }
    let unit = -(p / (1.0 - p)).ln() * 10.0 / w;
    Ok(g / unit)
}

/// With `w = ln((1 - p) / p)` the unit is exactly 10 weight units.
pub fn gap_to_db_reduced(g: f64) -> f64 {
    g / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{mwpm_decode, weight_from_probability};

    fn strip() -> MatchingGraph {
        // Left boundary -(L)- 0 - 1 - 2 - right boundary; crossing the left
        // boundary flips the logical.
        let mk = |u, v, w: f64, obs| GraphEdge { u, v, weight: w, probability: 0.1, observables: obs, faults: vec![] };
        MatchingGraph::new(3, vec![mk(0, 3, 1.0, 1), mk(0, 1, 1.0, 0), mk(1, 2, 1.0, 0), mk(2, 3, 1.0, 0)]).unwrap()
    }

    #[test]
    fn zero_noise_gap_is_the_shortest_logical() {
        let g = strip();
        let gg = GapGraph::new(&g, 1).unwrap();
        let r = complementary_gap(&gg, &g.weights(), &[], false, false, 0).unwrap();
        assert_eq!(r.signed_gap, 4.0);
        assert!(r.decoder_correct);
    }

    #[test]
    fn symmetric_instance_has_zero_gap() {
        let g = strip();
        let gg = GapGraph::new(&g, 1).unwrap();
        // Defect 1 sits two steps from either side.
        let r = complementary_gap(&gg, &g.weights(), &[1], false, false, 0).unwrap();
        assert_eq!(r.signed_gap, 0.0);
    }

    #[test]
    fn w_min_equals_plain_matching() {
        let g = strip();
        let gg = GapGraph::new(&g, 1).unwrap();
        for defects in [vec![0], vec![2], vec![0, 1], vec![0, 2], vec![0, 1, 2]] {
            let plain = mwpm_decode(&g, &defects).unwrap();
            let r = complementary_gap(&gg, &g.weights(), &defects, plain.observables & 1 == 1, false, 0).unwrap();
            assert!((r.w_min - plain.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn db_conversion() {
        assert_eq!(gap_to_db_reduced(10.0), 1.0);
        assert_eq!(gap_to_db_reduced(0.0), 0.0);
        for p in [0.001, 0.01, 0.2, 0.49] {
            let w = weight_from_probability(p);
            let a = gap_to_db(7.3, p, w).unwrap();
            assert!((a - gap_to_db_reduced(7.3)).abs() < 1e-12);
        }
        assert!(gap_to_db(1.0, 0.5, 0.0).is_err());
    }
}
