//! Two-pass correlated matching.
//!
//! The CSS variant decodes one error type, then lowers (or raises) the weights
//! of the other type's edges on the qubits it just corrected, using the
//! conditional probability that a Y error left the second component behind.
//! The circuit-level variant does the same on a DEM graph, with conditionals
//! taken from decomposed hyperedges.

use serde::{Deserialize, Serialize};

use crate::code::{StabilizerCode, StabilizerType};
use crate::error::{Error, Result};
use crate::matching::{decode_with_weights, weight_from_probability, DecodeOutcome, GraphEdge, MatchingGraph};
use crate::noise::NoiseParams;
use crate::pauli::{Pauli, PauliString};

/// Smallest distance kept between a conditional probability and 0 or 1.
pub const P_C_EPSILON: f64 = 1e-12;

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(P_C_EPSILON, 1.0 - P_C_EPSILON)
}

/// Conditional probabilities of the second component of a Y error under the
/// code-capacity channel with `p_x = p_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalTable {
    /// `P(X component | Z component) = p_y / (p_y + p_z) = 1 / (1 + 2 eta)`.
    pub p_x_given_z: f64,
    /// `P(Z component | X component) = p_y / (p_x + p_y) = 1 / 2`.
    pub p_z_given_x: f64,
}

impl ConditionalTable {
    pub fn new(eta: f64) -> Self {
        let p_x_given_z = if eta.is_infinite() { 0.0 } else { 1.0 / (1.0 + 2.0 * eta) };
        ConditionalTable { p_x_given_z, p_z_given_x: 0.5 }
    }
}

/// Which error type is decoded first: `Xz` decodes X errors (Z syndromes)
/// first, `Zx` decodes Z errors (X syndromes) first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CssOrder {
    Xz,
    Zx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CssCorrelatedConfig {
    pub order: CssOrder,
    pub eta: f64,
}

/// Matching graph of one error type on the checks that detect it: one edge per
/// data qubit (parallel edges kept), edge id equal to the qubit index.
///
/// `detected` is the Pauli component the graph corrects; its checks are the
/// stabilizers of the other type. `observable` is the bit to flip when the
/// edge's qubit lies on the logical that this error type anticommutes with.
pub fn css_error_graph(code: &StabilizerCode, detected: Pauli, p: f64, observable: u64) -> Result<MatchingGraph> {
    let checks = match detected {
        Pauli::Z => StabilizerType::X,
        Pauli::X => StabilizerType::Z,
        _ => return Err(Error::InvalidCode("css error graphs are built for X or Z".into())),
    };
    let logical = code.logical(checks);
    let stabs = code.stabilizers(checks);
    let boundary = stabs.len();
    let mut edges = Vec::with_capacity(code.num_qubits());
    for q in 0..code.num_qubits() {
        let single = PauliString::new(vec![(q, detected)]);
        let hit: Vec<usize> = stabs.iter().enumerate().filter(|(_, s)| s.anticommutes(&single)).map(|(i, _)| i).collect();
        let (u, v) = match hit[..] {
            [a] => (a, boundary),
            [a, b] => (a, b),
            _ => return Err(Error::InvalidCode(format!("qubit {q} is in {} checks of one type", hit.len()))),
        };
        let obs = if logical.anticommutes(&single) { observable } else { 0 };
        edges.push(GraphEdge { u, v, weight: weight_from_probability(p), probability: p, observables: obs, faults: Vec::new() });
    }
    MatchingGraph::new(boundary, edges)
}

/// CSS two-pass decoder on a code-capacity model. Detector layout follows
/// [`crate::dem::code_capacity_signature`]: X-check syndromes first, then
/// Z-check syndromes; observable bit 0 is `Z_L`, bit 1 is `X_L`.
#[derive(Debug, Clone)]
pub struct CssCorrelatedDecoder {
    /// Z errors on X checks.
    z_graph: MatchingGraph,
    /// X errors on Z checks.
    x_graph: MatchingGraph,
    cfg: CssCorrelatedConfig,
    table: ConditionalTable,
    num_x_checks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CssOutcome {
    pub first: DecodeOutcome,
    pub second: DecodeOutcome,
    /// Qubits corrected by X and by Z components.
    pub x_correction: Vec<usize>,
    pub z_correction: Vec<usize>,
    pub observables: u64,
}

impl CssCorrelatedDecoder {
    pub fn new(code: &StabilizerCode, params: NoiseParams, cfg: CssCorrelatedConfig) -> Result<Self> {
        if !code.is_css() {
            return Err(Error::RequiresCss { decoder: format!("css-{:?}", cfg.order).to_lowercase() });
        }
        let (px, py, pz) = params.marginals();
        let z_graph = css_error_graph(code, Pauli::Z, clamp_probability(py + pz).min(0.5), 2)?;
        let x_graph = css_error_graph(code, Pauli::X, clamp_probability(px + py).min(0.5), 1)?;
        Ok(CssCorrelatedDecoder { z_graph, x_graph, cfg, table: ConditionalTable::new(cfg.eta), num_x_checks: code.x_stabilizers.len() })
    }

    pub fn table(&self) -> ConditionalTable {
        self.table
    }

    /// Splits a full defect list into (X-check, Z-check) local indices.
    pub fn split_defects(&self, defects: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let sx = defects.iter().copied().filter(|&d| d < self.num_x_checks).collect();
        let sz = defects.iter().copied().filter(|&d| d >= self.num_x_checks).map(|d| d - self.num_x_checks).collect();
        (sx, sz)
    }

    pub fn decode(&self, defects: &[usize]) -> Result<CssOutcome> {
        let (sx, sz) = self.split_defects(defects);
        self.decode_syndromes(&sx, &sz, true)
    }

    /// `correlated = false` skips the reweighting (independent X/Z matching).
    pub fn decode_syndromes(&self, syndrome_x: &[usize], syndrome_z: &[usize], correlated: bool) -> Result<CssOutcome> {
        let (g1, s1, g2, s2, p_c) = match self.cfg.order {
            CssOrder::Zx => (&self.z_graph, syndrome_x, &self.x_graph, syndrome_z, self.table.p_x_given_z),
            CssOrder::Xz => (&self.x_graph, syndrome_z, &self.z_graph, syndrome_x, self.table.p_z_given_x),
        };
        let first = decode_with_weights(g1, &g1.weights(), s1)?;
        let mut weights = g2.weights();
        if correlated {
            let w = weight_from_probability(clamp_probability(p_c));
            for &q in &first.matched_edges {
                weights[q] = w;
            }
        }
        let second = decode_with_weights(g2, &weights, s2)?;
        let (x_correction, z_correction) = match self.cfg.order {
            CssOrder::Zx => (second.matched_edges.clone(), first.matched_edges.clone()),
            CssOrder::Xz => (first.matched_edges.clone(), second.matched_edges.clone()),
        };
        let observables = first.observables ^ second.observables;
        Ok(CssOutcome { first, second, x_correction, z_correction, observables })
    }
}

/// Free-function form of [`CssCorrelatedDecoder::decode_syndromes`].
pub fn css_correlated_decode(
    code: &StabilizerCode,
    params: NoiseParams,
    syndrome_x: &[usize],
    syndrome_z: &[usize],
    cfg: CssCorrelatedConfig,
) -> Result<CssOutcome> {
    CssCorrelatedDecoder::new(code, params, cfg)?.decode_syndromes(syndrome_x, syndrome_z, true)
}

/// Pass-2 weights: every sibling of a pass-1 matched edge gets
/// `ln((1 - p_c) / p_c)` with the largest applicable `p_c`. Matched edges
/// themselves keep their weights.
pub fn conditional_weights(graph: &MatchingGraph, first: &DecodeOutcome) -> Vec<f64> {
    let mut best: Vec<f64> = vec![f64::NAN; graph.edges().len()];
    for &e in &first.matched_edges {
        for &(sib, pc) in graph.correlations(e) {
            if best[sib].is_nan() || pc > best[sib] {
                best[sib] = pc;
            }
        }
    }
    graph
        .weights()
        .into_iter()
        .zip(best)
        .map(|(w, pc)| if pc.is_nan() { w } else { weight_from_probability(clamp_probability(pc)) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitCorrelatedOutcome {
    pub first: DecodeOutcome,
    pub second: DecodeOutcome,
    pub weights: Vec<f64>,
}

/// Hyperedge-informed two-pass decoding on a DEM graph built by
/// [`crate::dem::to_matching_graph`]; the prediction is `second.observables`.
pub fn circuit_correlated_decode(graph: &MatchingGraph, defects: &[usize]) -> Result<CircuitCorrelatedOutcome> {
    let first = decode_with_weights(graph, &graph.weights(), defects)?;
    let weights = conditional_weights(graph, &first);
    let second = decode_with_weights(graph, &weights, defects)?;
    Ok(CircuitCorrelatedOutcome { first, second, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code, Deformation};
    use crate::dem::{code_capacity_signature, decompose_hyperedges, DetectorErrorModel, ErrorMechanism};

    #[test]
    fn conditional_table_values() {
        let t = ConditionalTable::new(0.5);
        assert_eq!((t.p_x_given_z, t.p_z_given_x), (0.5, 0.5));
        let t = ConditionalTable::new(5.0);
        assert!((t.p_x_given_z - 1.0 / 11.0).abs() < 1e-15);
        assert_eq!(ConditionalTable::new(f64::INFINITY).p_x_given_z, 0.0);
    }

    #[test]
    fn rejects_deformed_codes() {
        let code = build_code(3, 2, Deformation::ZxxzSquare).unwrap();
        let cfg = CssCorrelatedConfig { order: CssOrder::Zx, eta: 1.0 };
        let err = CssCorrelatedDecoder::new(&code, NoiseParams::new(0.1, 1.0).unwrap(), cfg).unwrap_err();
        assert!(matches!(err, Error::RequiresCss { .. }));
    }

    #[test]
    fn single_bulk_y_error_is_corrected_both_ways() {
        let code = build_code(5, 2, Deformation::Css).unwrap();
        let params = NoiseParams::new(0.05, 0.5).unwrap();
        let q = 2 * 5 + 2;
        let x = code_capacity_signature(&code, q, Pauli::Y);
        for order in [CssOrder::Zx, CssOrder::Xz] {
            let dec = CssCorrelatedDecoder::new(&code, params, CssCorrelatedConfig { order, eta: 0.5 }).unwrap();
            let defects: Vec<usize> = x.detectors.iter().map(|&d| d as usize).collect();
            let (sx, sz) = dec.split_defects(&defects);
            let corr = dec.decode_syndromes(&sx, &sz, true).unwrap();
            let ind = dec.decode_syndromes(&sx, &sz, false).unwrap();
            assert_eq!(corr.x_correction, vec![q]);
            assert_eq!(corr.z_correction, vec![q]);
            assert_eq!(corr.observables, 0);
            assert_eq!(ind.observables, 0);
            // With p_c = 1/2 the second pass pays nothing for the qubit the
            // first pass already blamed.
            assert!(corr.second.weight < ind.second.weight);
            assert_eq!(corr.second.weight, 0.0);
        }
    }

    #[test]
    fn circuit_decoder_without_hyperedges_repeats_pass_one() {
        let mk = |p, dets: Vec<u32>, obs| ErrorMechanism { probability: p, detectors: dets, observables: obs };
        let dem = DetectorErrorModel {
            mechanisms: vec![mk(0.1, vec![0], 1), mk(0.05, vec![0, 1], 0), mk(0.1, vec![1, 2], 0), mk(0.2, vec![2], 0)],
            num_detectors: 3,
            num_observables: 1,
            families: vec![],
        };
        let graph = crate::dem::to_matching_graph(&decompose_hyperedges(&dem).unwrap()).unwrap();
        for defects in [vec![0], vec![0, 1], vec![1, 2], vec![0, 2]] {
            let out = circuit_correlated_decode(&graph, &defects).unwrap();
            assert_eq!(out.first, out.second);
        }
    }

    #[test]
    fn certain_sibling_is_clamped_and_always_taken() {
        // Hyperedge {0, 1, 2, 3} = {0, 1} ^ {2, 3}; it is the only source of
        // edge {0, 1}, so P(h) / P({0,1}) = 1 and the sibling becomes
        // strongly negative.
        let mk = |p, dets: Vec<u32>, obs| ErrorMechanism { probability: p, detectors: dets, observables: obs };
        let dem = DetectorErrorModel {
            mechanisms: vec![
                mk(0.01, vec![0, 1, 2, 3], 1),
                mk(1e-300, vec![0, 1], 0),
                mk(0.01, vec![2, 3], 1),
                mk(0.2, vec![2], 0),
                mk(0.2, vec![3], 0),
                mk(0.001, vec![0], 0),
                mk(0.001, vec![1], 0),
            ],
            num_detectors: 4,
            num_observables: 1,
            families: vec![],
        };
        let graph = crate::dem::to_matching_graph(&decompose_hyperedges(&dem).unwrap()).unwrap();
        let e01 = graph.find_edge(0, 1).unwrap();
        let e23 = graph.find_edge(2, 3).unwrap();
        let pc = graph.correlations(e01).iter().find(|c| c.0 == e23).unwrap().1;
        assert_eq!(pc, 1.0 - P_C_EPSILON);
        let out = circuit_correlated_decode(&graph, &[0, 1]).unwrap();
        assert_eq!(out.first.matched_edges, vec![e01]);
        assert!(out.second.matched_edges.contains(&e23));
        assert!(out.weights[e23] < -20.0);
    }
}
