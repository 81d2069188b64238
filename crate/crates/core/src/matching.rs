//! Detector graphs with a virtual boundary and exact minimum-weight perfect
//! matching decoding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blossom::max_weight_matching;
use crate::error::{Error, Result};

/// `ln((1 - p) / p)`.
pub fn weight_from_probability(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub u: usize,
    /// Equal to the graph's boundary index for boundary edges.
    pub v: usize,
    pub weight: f64,
    pub probability: f64,
    pub observables: u64,
    /// Ids of the hyperedges this edge is a component of.
    pub faults: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingGraph {
    num_detectors: usize,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Per edge: `(other edge, p_c)` pairs giving the conditional probability
    /// of the other edge having fired when this one did.
    correlations: Vec<Vec<(usize, f64)>>,
}

impl MatchingGraph {
    pub fn new(num_detectors: usize, edges: Vec<GraphEdge>) -> Result<Self> {
        let boundary = num_detectors;
        let mut adjacency = vec![Vec::new(); num_detectors + 1];
        for (id, e) in edges.iter().enumerate() {
            if e.u == e.v || e.u > boundary || e.v > boundary {
                return Err(Error::InvalidCircuit(format!("bad graph edge ({}, {})", e.u, e.v)));
            }
            if !e.weight.is_finite() {
                return Err(Error::InvalidProbability(e.probability));
            }
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        let correlations = vec![Vec::new(); edges.len()];
        Ok(MatchingGraph { num_detectors, edges, adjacency, correlations })
    }

    /// Builds an edge from a probability; `v = None` is the boundary.
    pub fn edge(&self, u: usize, v: Option<usize>, p: f64, observables: u64) -> GraphEdge {
        GraphEdge { u, v: v.unwrap_or(self.boundary()), weight: weight_from_probability(p), probability: p, observables, faults: Vec::new() }
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn boundary(&self) -> usize {
        self.num_detectors
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn correlations(&self, edge: usize) -> &[(usize, f64)] {
        &self.correlations[edge]
    }

    pub fn set_correlations(&mut self, correlations: Vec<Vec<(usize, f64)>>) {
        assert_eq!(correlations.len(), self.edges.len());
        self.correlations = correlations;
    }

    /// Edge joining `u` and `v` (either order), if any.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency.get(u)?.iter().find(|&&(w, _)| w == v).map(|&(_, id)| id)
    }

    /// Graphviz rendering; the boundary is drawn as a box.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph matching {\n");
        let _ = writeln!(s, "  B [shape=box, label=\"boundary\"];");
        for (id, e) in self.edges.iter().enumerate() {
            let name = |n: usize| if n == self.boundary() { "B".to_string() } else { format!("D{n}") };
            let obs = if e.observables != 0 { format!(" L{:b}", e.observables) } else { String::new() };
            let _ = writeln!(s, "  {} -- {} [label=\"e{id} w={:.3}{obs}\"];", name(e.u), name(e.v), e.weight);
        }
        s.push_str("}\n");
        s
    }
}

/// Copy of `graph` with each listed edge's weight set to `ln((1 - p_c) / p_c)`.
pub fn reweight_edges(graph: &MatchingGraph, edge_ids: &[usize], p_c: f64) -> Result<MatchingGraph> {
    if !(p_c > 0.0 && p_c < 1.0) {
        return Err(Error::InvalidProbability(p_c));
    }
    let mut out = graph.clone();
    let w = weight_from_probability(p_c);
    for &id in edge_ids {
        out.edges[id].weight = w;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Edge ids of the correction (paths XOR-ed together), sorted.
    pub matched_edges: Vec<usize>,
    /// Defect pairs; `None` partner means matched to the boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: f64,
    pub observables: u64,
}

impl DecodeOutcome {
    fn empty() -> Self {
        DecodeOutcome { matched_edges: Vec::new(), pairs: Vec::new(), weight: 0.0, observables: 0 }
    }
}

pub fn mwpm_decode(graph: &MatchingGraph, defects: &[usize]) -> Result<DecodeOutcome> {
    decode_with_weights(graph, &graph.weights(), defects)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths that never pass through the boundary node
/// (unless it is the source). Stops once the frontier exceeds `cutoff`.
struct Dijkstra {
    dist: Vec<f64>,
    pred: Vec<usize>,
    touched: Vec<usize>,
}

impl Dijkstra {
    fn new(nodes: usize) -> Self {
        Dijkstra { dist: vec![f64::INFINITY; nodes], pred: vec![usize::MAX; nodes], touched: Vec::new() }
    }

    fn reset(&mut self) {
        for &n in &self.touched {
            self.dist[n] = f64::INFINITY;
            self.pred[n] = usize::MAX;
        }
        self.touched.clear();
    }

    fn run(&mut self, graph: &MatchingGraph, weights: &[f64], source: usize, cutoff: f64) {
        self.reset();
        let boundary = graph.boundary();
        let mut heap = BinaryHeap::new();
        self.dist[source] = 0.0;
        self.touched.push(source);
        heap.push(Item(0.0, source));
        while let Some(Item(d, u)) = heap.pop() {
            if d > self.dist[u] || d > cutoff {
                continue;
            }
            if u == boundary && u != source {
                continue;
            }
            for &(v, id) in graph.neighbors(u) {
                let nd = d + weights[id];
                if nd < self.dist[v] {
                    if self.dist[v].is_infinite() {
                        self.touched.push(v);
                    }
                    self.dist[v] = nd;
                    self.pred[v] = id;
                    heap.push(Item(nd, v));
                }
            }
        }
    }

    /// Edge ids on the path from the source to `target`.
    fn path(&self, graph: &MatchingGraph, mut target: usize, out: &mut Vec<usize>) {
        while self.pred[target] != usize::MAX {
            let id = self.pred[target];
            out.push(id);
            let e = &graph.edges[id];
            target = if e.u == target { e.v } else { e.u };
        }
    }
}

/// Minimum-weight matching of `defects` with per-edge `weights` overriding the
/// graph's own. Negative weights are handled by pre-applying those edges and
/// matching the toggled defect set with absolute weights.
pub fn decode_with_weights(graph: &MatchingGraph, weights: &[f64], defects: &[usize]) -> Result<DecodeOutcome> {
    let nd = graph.num_detectors();
    let boundary = graph.boundary();
    let mut parity = vec![false; nd];
    for &d in defects {
        if d >= nd {
            return Err(Error::InvalidCircuit(format!("defect {d} outside graph with {nd} detectors")));
        }
        parity[d] ^= true;
    }
    let mut offset = 0.0;
    let mut base_obs = 0u64;
    let mut flipped = Vec::new();
    let abs: Vec<f64>;
    let weights = if weights.iter().any(|&w| w < 0.0) {
        for (id, &w) in weights.iter().enumerate() {
            if w < 0.0 {
                let e = &graph.edges[id];
                for n in [e.u, e.v] {
                    if n != boundary {
                        parity[n] ^= true;
                    }
                }
                offset += w;
                base_obs ^= e.observables;
                flipped.push(id);
            }
        }
        abs = weights.iter().map(|w| w.abs()).collect();
        &abs
    } else {
        weights
    };
    let defects: Vec<usize> = (0..nd).filter(|&i| parity[i]).collect();
    let mut out = if defects.is_empty() { DecodeOutcome::empty() } else { match_defects(graph, weights, &defects)? };

    if !flipped.is_empty() {
        out.weight += offset;
        out.observables ^= base_obs;
        let mut set: Vec<usize> = out.matched_edges.clone();
        set.extend(flipped);
        set.sort_unstable();
        out.matched_edges = xor_dedup(set);
    }
    Ok(out)
}

fn xor_dedup(sorted: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(sorted.len());
    for id in sorted {
        if out.last() == Some(&id) {
            out.pop();
        } else {
            out.push(id);
        }
    }
    out
}

fn match_defects(graph: &MatchingGraph, weights: &[f64], defects: &[usize]) -> Result<DecodeOutcome> {
    let k = defects.len();
    let nodes = graph.num_detectors() + 1;
    let mut from_boundary = Dijkstra::new(nodes);
    from_boundary.run(graph, weights, graph.boundary(), f64::INFINITY);
    let db: Vec<f64> = defects.iter().map(|&d| from_boundary.dist[d]).collect();
    let max_db = db.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);

    // Pair distances (and the predecessor trees needed to expand paths).
    let mut trees = Vec::with_capacity(k);
    let mut pair_edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut searcher = Dijkstra::new(nodes);
    for i in 0..k {
        let cutoff = if db[i].is_finite() && db.iter().all(|d| d.is_finite()) { db[i] + max_db } else { f64::INFINITY };
        searcher.run(graph, weights, defects[i], cutoff);
        for j in i + 1..k {
            let dij = searcher.dist[defects[j]];
            if dij.is_finite() && !(dij >= db[i] + db[j]) {
                pair_edges.push((i, j, dij));
            }
        }
        let tree: Vec<(usize, usize)> = searcher.touched.iter().map(|&n| (n, searcher.pred[n])).collect();
        trees.push(tree);
    }

    // Derived graph: defects 0..k, boundary copies k..2k.
    let mut derived: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * pair_edges.len() + k);
    for &(i, j, w) in &pair_edges {
        derived.push((i, j, w));
        derived.push((k + i, k + j, 0.0));
    }
    for (i, &d) in db.iter().enumerate() {
        if d.is_finite() {
            derived.push((i, k + i, d));
        }
    }

    // Solve each connected component separately.
    let mut comp = UnionFind::new(2 * k);
    for &(a, b, _) in &derived {
        comp.union(a, b);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..2 * k {
        groups.entry(comp.find(v)).or_default().push(v);
    }
    let mut mate = vec![usize::MAX; 2 * k];
    for members in groups.values() {
        let mut local = vec![usize::MAX; 2 * k];
        for (li, &v) in members.iter().enumerate() {
            local[v] = li;
        }
        let edges: Vec<(usize, usize, f64)> =
            derived.iter().filter(|e| local[e.0] != usize::MAX).map(|&(a, b, w)| (local[a], local[b], w)).collect();
        let kmax = edges.iter().map(|e| e.2).fold(0.0, f64::max) + 1.0;
        let flipped: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b, w)| (a, b, kmax - w)).collect();
        let m = max_weight_matching(members.len(), &flipped, true);
        for (li, partner) in m.into_iter().enumerate() {
            match partner {
                Some(pj) => mate[members[li]] = members[pj],
                None => {
                    let v = members[li];
                    return Err(Error::UnmatchableDefects(defects[if v < k { v } else { v - k }]));
                }
            }
        }
    }

    let mut out = DecodeOutcome::empty();
    let mut path_edges = Vec::new();
    let mut pred = vec![usize::MAX; nodes];
    for i in 0..k {
        let j = mate[i];
        if j == k + i {
            out.weight += db[i];
            out.pairs.push((defects[i], None));
            from_boundary.path(graph, defects[i], &mut path_edges);
        } else if j > i && j < k {
            let (_, _, w) = pair_edges.iter().find(|e| e.0 == i && e.1 == j).copied().expect("matched pair has an edge");
            out.weight += w;
            out.pairs.push((defects[i], Some(defects[j])));
            for &(n, p) in &trees[i] {
                pred[n] = p;
            }
            let mut t = defects[j];
            while pred[t] != usize::MAX {
                let id = pred[t];
                path_edges.push(id);
                let e = &graph.edges[id];
                t = if e.u == t { e.v } else { e.u };
            }
            for &(n, _) in &trees[i] {
                pred[n] = usize::MAX;
            }
        }
    }
    path_edges.sort_unstable();
    out.matched_edges = xor_dedup(path_edges);
    for &id in &out.matched_edges {
        out.observables ^= graph.edges[id].observables;
    }
    Ok(out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph() -> MatchingGraph {
        // B - 0 - 1 - 2 - B with unit-ish weights.
        let mk = |u, v, w: f64| GraphEdge { u, v, weight: w, probability: 0.1, observables: 0, faults: vec![] };
        let mut e = vec![mk(0, 3, 1.2), mk(0, 1, 1.0), mk(1, 2, 1.0), mk(2, 3, 1.0)];
        e[0].observables = 1;
        MatchingGraph::new(3, e).unwrap()
    }

    #[test]
    fn empty_and_single_defects() {
        let g = line_graph();
        let out = mwpm_decode(&g, &[]).unwrap();
        assert_eq!(out, DecodeOutcome::empty());
        let out = mwpm_decode(&g, &[0]).unwrap();
        assert_eq!(out.matched_edges, vec![0]);
        assert!((out.weight - 1.2).abs() < 1e-12);
        assert_eq!(out.observables, 1);
        assert_eq!(out.pairs, vec![(0, None)]);
    }

    #[test]
    fn pairs_defects_through_the_bulk() {
        let g = line_graph();
        let out = mwpm_decode(&g, &[0, 2]).unwrap();
        assert_eq!(out.pairs, vec![(0, Some(2))]);
        assert_eq!(out.matched_edges, vec![1, 2]);
        assert!((out.weight - 2.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_defect_is_unmatchable() {
        let mk = |u, v| GraphEdge { u, v, weight: 1.0, probability: 0.1, observables: 0, faults: vec![] };
        let g = MatchingGraph::new(3, vec![mk(0, 1)]).unwrap();
        assert!(matches!(mwpm_decode(&g, &[2]), Err(Error::UnmatchableDefects(2))));
        assert!(matches!(mwpm_decode(&g, &[0]), Err(Error::UnmatchableDefects(_))));
    }

    #[test]
    fn reweighting_rejects_bad_probabilities_and_copies() {
        let g = line_graph();
        assert!(reweight_edges(&g, &[0], 0.0).is_err());
        assert!(reweight_edges(&g, &[0], 1.0).is_err());
        let r = reweight_edges(&g, &[0, 1], 0.5).unwrap();
        assert_eq!(r.edges()[0].weight, 0.0);
        assert_eq!(g.edges()[0].weight, 1.2);
    }

    #[test]
    fn negative_weights_are_pre_applied() {
        let g = line_graph();
        let mut w = g.weights();
        w[1] = -0.5;
        // With edge 1 "free", defects {0, 1} are explained by it alone.
        let out = decode_with_weights(&g, &w, &[0, 1]).unwrap();
        assert_eq!(out.matched_edges, vec![1]);
        assert!((out.weight + 0.5).abs() < 1e-12);
    }

    #[test]
    fn dot_dump_mentions_every_edge() {
        let dot = line_graph().to_dot();
        assert_eq!(dot.matches(" -- ").count(), 4);
    }
}
