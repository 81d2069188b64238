//! Oracles shared by the integration tests.
#![allow(dead_code)]

use compass_core::code::Deformation;
use compass_core::matching::{GraphEdge, MatchingGraph};
use compass_core::stats::{PointLabel, RatePoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize, density: f64) -> MatchingGraph {
    let boundary = nodes;
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..=nodes {
            // The chain (including the last node's boundary edge) keeps every
            // instance feasible.
            if rng.random::<f64>() < density || v == u + 1 {
                let weight = if rng.random::<f64>() < 0.1 { rng.random_range(0..4) as f64 } else { rng.random::<f64>() * 5.0 };
                let observables = rng.random_range(0..2u64);
                edges.push(GraphEdge { u, v: v.min(boundary), weight, probability: 0.1, observables, faults: vec![] });
            }
        }
    }
    MatchingGraph::new(nodes, edges).unwrap()
}

/// Floyd-Warshall over detectors plus boundary, never routing through the boundary.
pub fn all_pairs(g: &MatchingGraph, w: &[f64]) -> Vec<Vec<f64>> {
    let n = g.num_detectors() + 1;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (id, e) in g.edges().iter().enumerate() {
        let c = w[id].min(d[e.u][e.v]);
        d[e.u][e.v] = c;
        d[e.v][e.u] = c;
    }
    for k in 0..n - 1 {
        for i in 0..n {
            for j in 0..n {
                let c = d[i][k] + d[k][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    d
}

/// Minimum over all pairings of defects among themselves or to the boundary.
pub fn brute_force(d: &[Vec<f64>], defects: &[usize], boundary: usize) -> f64 {
    let k = defects.len();
    let mut best = vec![f64::INFINITY; 1 << k];
    best[0] = 0.0;
    for mask in 1usize..1 << k {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = best[rest] + d[defects[i]][boundary];
        for j in i + 1..k {
            if rest >> j & 1 == 1 {
                b = b.min(best[rest & !(1 << j)] + d[defects[i]][defects[j]]);
            }
        }
        best[mask] = b;
    }
    best[(1 << k) - 1]
}

pub fn random_defects(rng: &mut ChaCha8Rng, nodes: usize, max: usize) -> Vec<usize> {
    let count = rng.random_range(0..=max.min(nodes));
    let mut all: Vec<usize> = (0..nodes).collect();
    for i in 0..count {
        let j = rng.random_range(i..nodes);
        all.swap(i, j);
    }
    let mut out = all[..count].to_vec();
    out.sort_unstable();
    out
}

pub struct Truth {
    pub p_th: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Truth {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Truth {
            p_th: rng.random_range(0.05..0.15),
            nu: rng.random_range(1.0..1.8),
            a: rng.random_range(0.08..0.15),
            b: rng.random_range(0.8..2.0),
            c: rng.random_range(-1.0..1.0),
        }
    }

    pub fn rate(&self, d: usize, p: f64) -> f64 {
        let x = (p - self.p_th) * (d as f64).powf(1.0 / self.nu);
        self.a + self.b * x + self.c * x * x
    }
}

pub fn point(d: usize, p: f64, shots: u64, failures: u64) -> RatePoint {
    let label = PointLabel { d, ell: 2, deformation: Deformation::Css, eta: 1.0, p, decoder: "mwpm".into() };
    RatePoint::from_counts(label, shots, failures).unwrap()
}

/// Thirteen p-values whose outermost points sit at the rate window's edge for
/// d = 7, the way a scan is zoomed onto a crossing.
pub fn grid(t: &Truth) -> Vec<f64> {
    let delta = 0.3 * t.a / (t.b * 7f64.powf(1.0 / t.nu)) / 6.0;
    (-6..=6).map(|k| t.p_th + delta * k as f64).collect()
}
