//! Detector error models: extraction from circuits, merging, hyperedge
//! decomposition, a line-oriented text format, and conversion to matching graphs.
//!
//! Text format, one mechanism per line:
//!
//! ```text
//! error(0.001) D3 D7 L0
//! error(0.0004) D3 D7 ^ D12 D15 L0
//! ```
//!
//! `D<i>` is a detector, `L<k>` an observable; `^` separates the components of
//! a decomposed hyperedge. Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{fault_signatures, Circuit, Fault, FaultAction, Instruction, Signature};
use crate::code::{StabilizerCode, StabilizerType};
use crate::error::{Error, Result};
use crate::matching::{weight_from_probability, GraphEdge, MatchingGraph};
use crate::noise::{code_capacity_channel, NoiseParams, PauliTerm};
use crate::pauli::{Pauli, PauliString};
use crate::sim::{shot_rng, BitMatrix, ShotBatch};

/// Probability that an odd number of two independent events occurs.
pub fn xor_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMechanism {
    pub probability: f64,
    /// Sorted detector ids.
    pub detectors: Vec<u32>,
    /// Observable bit mask.
    pub observables: u64,
}

impl ErrorMechanism {
    fn signature(&self) -> (Vec<u32>, u64) {
        (self.detectors.clone(), self.observables)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorErrorModel {
    pub mechanisms: Vec<ErrorMechanism>,
    pub num_detectors: usize,
    pub num_observables: usize,
    /// Stabilizer family of each detector; empty when unknown.
    pub families: Vec<StabilizerType>,
}

/// Every elementary fault of the circuit with its probability: each
/// non-identity outcome of each noise location, and each readout flip.
pub fn enumerate_faults(circuit: &Circuit) -> Vec<(Fault, f64)> {
    let mut out = Vec::new();
    for (i, inst) in circuit.instructions.iter().enumerate() {
        match *inst {
            Instruction::Noise { targets, channel, .. } => {
                for &(term, p) in circuit.channels[channel].outcomes() {
                    out.push((Fault { after: i, action: FaultAction::Pauli { targets, term } }, p));
                }
            }
            Instruction::Measure { record, flip, .. } if flip > 0.0 => {
                out.push((Fault { after: i, action: FaultAction::RecordFlip(record) }, flip));
            }
            _ => {}
        }
    }
    out
}

/// Merges mechanisms with identical signatures (XOR probability) and drops
/// those that flip nothing or never happen. Output is sorted by signature.
pub fn merge_mechanisms(items: impl IntoIterator<Item = (Signature, f64)>) -> Result<Vec<ErrorMechanism>> {
    let mut merged: BTreeMap<(Vec<u32>, u64), f64> = BTreeMap::new();
    for (sig, p) in items {
        if (sig.detectors.is_empty() && sig.observables == 0) || p == 0.0 {
            continue;
        }
        let entry = merged.entry((sig.detectors, sig.observables)).or_insert(0.0);
        *entry = xor_probability(*entry, p);
    }
    merged
        .into_iter()
        .map(|((detectors, observables), probability)| {
            if probability > 0.5 {
                return Err(Error::ProbabilityTooLarge { detectors, probability });
            }
            Ok(ErrorMechanism { probability, detectors, observables })
        })
        .collect()
}

pub fn extract_dem(circuit: &Circuit) -> Result<DetectorErrorModel> {
    let faults = enumerate_faults(circuit);
    let sites: Vec<Fault> = faults.iter().map(|f| f.0).collect();
    let sigs = fault_signatures(circuit, &sites);
    let mechanisms = merge_mechanisms(sigs.into_iter().zip(faults.iter().map(|f| f.1)))?;
    Ok(DetectorErrorModel {
        mechanisms,
        num_detectors: circuit.num_detectors(),
        num_observables: circuit.num_observables(),
        families: circuit.detector_info().iter().map(|i| i.kind).collect(),
    })
}

/// Detector layout of a code-capacity model: X-family stabilizers first, then
/// Z-family. Observable bit 0 flips when the error anticommutes with the
/// deformed `Z_L`, bit 1 when it anticommutes with the deformed `X_L`.
pub fn code_capacity_signature(code: &StabilizerCode, qubit: usize, pauli: Pauli) -> Signature {
    let single = PauliString::new(vec![(qubit, pauli)]);
    let detectors = code.all_stabilizers().enumerate().filter(|(_, s)| s.anticommutes(&single)).map(|(i, _)| i as u32).collect();
    let mut observables = 0;
    if code.logical_z.anticommutes(&single) {
        observables |= 1;
    }
    if code.logical_x.anticommutes(&single) {
        observables |= 2;
    }
    Signature { detectors, observables }
}

/// DEM of independent single-qubit errors drawn from the code-capacity channel,
/// with perfect syndrome measurement.
pub fn code_capacity_dem(code: &StabilizerCode, params: NoiseParams) -> Result<DetectorErrorModel> {
    params.validate()?;
    let channel = code_capacity_channel(params);
    let mut items = Vec::new();
    for q in 0..code.num_qubits() {
        for &(term, p) in channel.outcomes() {
            items.push((code_capacity_signature(code, q, term.on(0)), p));
        }
    }
    let families = code.x_stabilizers.iter().map(|_| StabilizerType::X).chain(code.z_stabilizers.iter().map(|_| StabilizerType::Z)).collect();
    Ok(DetectorErrorModel { mechanisms: merge_mechanisms(items)?, num_detectors: code.num_stabilizers(), num_observables: 2, families })
}

/// Samples code-capacity errors directly on the data qubits. Shot `s` uses
/// stream `s` of `seed`, one channel draw per qubit in index order.
pub fn sample_code_capacity(code: &StabilizerCode, params: NoiseParams, shots: usize, seed: u64) -> ShotBatch {
    let channel = code_capacity_channel(params);
    let n = code.num_qubits();
    let table: Vec<[Signature; 3]> = (0..n)
        .map(|q| [Pauli::X, Pauli::Y, Pauli::Z].map(|p| code_capacity_signature(code, q, p)))
        .collect();
    let rows = crate::exec::map_indexed(shots, |s| {
        let mut rng = shot_rng(seed, s as u64);
        let mut dets = vec![false; code.num_stabilizers()];
        let mut obs = 0u64;
        for sigs in &table {
            if let Some(term) = channel.sample(&mut rng) {
                let k = match term.on(0) {
                    Pauli::X => 0,
                    Pauli::Y => 1,
                    _ => 2,
                };
                for &d in &sigs[k].detectors {
                    dets[d as usize] ^= true;
                }
                obs ^= sigs[k].observables;
            }
        }
        (dets, obs)
    });
    let mut batch = ShotBatch {
        detection_events: BitMatrix::zeros(shots, code.num_stabilizers()),
        observable_flips: BitMatrix::zeros(shots, 2),
    };
    for (s, (dets, obs)) in rows.into_iter().enumerate() {
        for (d, &v) in dets.iter().enumerate() {
            if v {
                batch.detection_events.set(s, d, true);
            }
        }
        for o in 0..2 {
            batch.observable_flips.set(s, o, obs >> o & 1 == 1);
        }
    }
    batch
}

/// Samples each mechanism independently and XORs the signatures.
pub fn sample_dem(dem: &DetectorErrorModel, shots: usize, seed: u64) -> ShotBatch {
    let mut batch = ShotBatch {
        detection_events: BitMatrix::zeros(shots, dem.num_detectors),
        observable_flips: BitMatrix::zeros(shots, dem.num_observables),
    };
    for s in 0..shots {
        let mut rng = shot_rng(seed, s as u64);
        for m in &dem.mechanisms {
            if rng.random::<f64>() < m.probability {
                for &d in &m.detectors {
                    let d = d as usize;
                    let v = batch.detection_events.get(s, d);
                    batch.detection_events.set(s, d, !v);
                }
                for o in 0..dem.num_observables {
                    if m.observables >> o & 1 == 1 {
                        let v = batch.observable_flips.get(s, o);
                        batch.observable_flips.set(s, o, !v);
                    }
                }
            }
        }
    }
    batch
}

/// Exact per-detector firing probability under independent mechanisms.
pub fn detector_marginals(dem: &DetectorErrorModel) -> Vec<f64> {
    let mut prod = vec![1.0; dem.num_detectors];
    for m in &dem.mechanisms {
        for &d in &m.detectors {
            prod[d as usize] *= 1.0 - 2.0 * m.probability;
        }
    }
    prod.into_iter().map(|x| (1.0 - x) / 2.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub mechanism: ErrorMechanism,
    /// Indices into [`DecomposedDem::edges`].
    pub components: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedDem {
    pub edges: Vec<ErrorMechanism>,
    pub hyperedges: Vec<Hyperedge>,
    pub num_detectors: usize,
    pub num_observables: usize,
}

fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Splits every mechanism that is not graphlike into existing graphlike
/// mechanisms whose signatures XOR to it. Graphlike means at most two
/// detectors, all of one stabilizer family when families are known, so a Y
/// error flipping one detector of each family splits into its X and Z parts.
/// Splits into two edges are preferred over three; ties go to the
/// lexicographically smallest list of component detector sets. A two-detector
/// mechanism spanning both families that cannot be split stays an edge.
pub fn decompose_hyperedges(dem: &DetectorErrorModel) -> Result<DecomposedDem> {
    let single_family = |m: &ErrorMechanism| {
        dem.families.is_empty() || m.detectors.windows(2).all(|w| dem.families[w[0] as usize] == dem.families[w[1] as usize])
    };
    let mut edges = Vec::new();
    let mut hyper = Vec::new();
    for m in &dem.mechanisms {
        if m.detectors.len() <= 2 && single_family(m) {
            edges.push(m.clone());
        } else {
            hyper.push(m.clone());
        }
    }
    let mut by_signature: HashMap<(Vec<u32>, u64), usize> = HashMap::new();
    let mut by_detector: HashMap<u32, Vec<usize>> = HashMap::new();
    for (id, e) in edges.iter().enumerate() {
        by_signature.insert(e.signature(), id);
        for &d in &e.detectors {
            by_detector.entry(d).or_default().push(id);
        }
    }

    let mut hyperedges = Vec::with_capacity(hyper.len());
    let mut leftover = Vec::new();
    for h in hyper {
        // Candidate components touch only detectors of the hyperedge.
        let mut cand: Vec<usize> = h
            .detectors
            .iter()
            .flat_map(|d| by_detector.get(d).into_iter().flatten().copied())
            .filter(|&id| edges[id].detectors.iter().all(|d| h.detectors.binary_search(d).is_ok()))
            .collect();
        cand.sort_unstable();
        cand.dedup();

        let key = |ids: &[usize]| {
            let mut sets: Vec<&Vec<u32>> = ids.iter().map(|&i| &edges[i].detectors).collect();
            sets.sort();
            sets.into_iter().cloned().collect::<Vec<_>>()
        };
        let mut best: Option<Vec<usize>> = None;
        let consider = |ids: Vec<usize>, best: &mut Option<Vec<usize>>| {
            if best.as_ref().is_none_or(|b| key(&ids) < key(b)) {
                *best = Some(ids);
            }
        };
        for &a in &cand {
            let rest = (sym_diff(&h.detectors, &edges[a].detectors), h.observables ^ edges[a].observables);
            if let Some(&b) = by_signature.get(&rest) {
                if a < b {
                    consider(vec![a, b], &mut best);
                }
            }
        }
        if best.is_none() {
            for (ia, &a) in cand.iter().enumerate() {
                let da = sym_diff(&h.detectors, &edges[a].detectors);
                for &b in &cand[ia + 1..] {
                    let rest = (sym_diff(&da, &edges[b].detectors), h.observables ^ edges[a].observables ^ edges[b].observables);
                    if let Some(&c) = by_signature.get(&rest) {
                        if b < c {
                            consider(vec![a, b, c], &mut best);
                        }
                    }
                }
            }
        }
        match best {
            Some(mut components) => {
                components.sort_by(|&a, &b| edges[a].detectors.cmp(&edges[b].detectors));
                hyperedges.push(Hyperedge { mechanism: h, components });
            }
            None if h.detectors.len() <= 2 => leftover.push(h),
            None => {
                return Err(Error::UndecomposableHyperedge { detectors: h.detectors, observables: h.observables });
            }
        }
    }
    edges.extend(leftover);
    Ok(DecomposedDem { edges, hyperedges, num_detectors: dem.num_detectors, num_observables: dem.num_observables })
}

const P_CLAMP: f64 = 1e-12;

/// One graph edge per distinct (endpoints, observables) among the decomposed
/// edges; each hyperedge's probability is XOR-merged into every component.
/// Edges with no detectors cannot be matched and are skipped. Also records, per
/// graph edge, the conditional probability `P(h) / P(e)` of each sibling
/// component of a shared hyperedge (the largest one when several apply).
pub fn to_matching_graph(ddem: &DecomposedDem) -> Result<MatchingGraph> {
    let boundary = ddem.num_detectors;
    let endpoints = |m: &ErrorMechanism| -> Option<(usize, usize)> {
        match m.detectors[..] {
            [a] => Some((a as usize, boundary)),
            [a, b] => Some((a as usize, b as usize)),
            _ => None,
        }
    };
    let mut index: BTreeMap<(usize, usize, u64), usize> = BTreeMap::new();
    let mut edges: Vec<GraphEdge> = Vec::new();
    let mut edge_of = vec![usize::MAX; ddem.edges.len()];
    for (id, m) in ddem.edges.iter().enumerate() {
        let Some((u, v)) = endpoints(m) else { continue };
        let key = (u, v, m.observables);
        let g = *index.entry(key).or_insert_with(|| {
            edges.push(GraphEdge { u, v, weight: 0.0, probability: 0.0, observables: m.observables, faults: Vec::new() });
            edges.len() - 1
        });
        edges[g].probability = xor_probability(edges[g].probability, m.probability);
        edge_of[id] = g;
    }
    for (hid, h) in ddem.hyperedges.iter().enumerate() {
        for &c in &h.components {
            let g = edge_of[c];
            if g == usize::MAX {
                continue;
            }
            edges[g].probability = xor_probability(edges[g].probability, h.mechanism.probability);
            if edges[g].faults.last() != Some(&hid) {
                edges[g].faults.push(hid);
            }
        }
    }
    for e in &mut edges {
        if e.probability > 0.5 {
            return Err(Error::ProbabilityTooLarge { detectors: vec![e.u as u32, e.v as u32], probability: e.probability });
        }
        e.weight = weight_from_probability(e.probability);
    }
    let mut correlations: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); edges.len()];
    for h in &ddem.hyperedges {
        let gs: Vec<usize> = h.components.iter().map(|&c| edge_of[c]).filter(|&g| g != usize::MAX).collect();
        for &a in &gs {
            for &b in &gs {
                if a != b {
                    let pc = (h.mechanism.probability / edges[a].probability).clamp(P_CLAMP, 1.0 - P_CLAMP);
                    let slot = correlations[a].entry(b).or_insert(0.0);
                    *slot = slot.max(pc);
                }
            }
        }
    }
    let mut graph = MatchingGraph::new(ddem.num_detectors, edges)?;
    graph.set_correlations(correlations.into_iter().map(|m| m.into_iter().collect()).collect());
    Ok(graph)
}

fn write_targets(s: &mut String, detectors: &[u32], observables: u64) {
    for d in detectors {
        let _ = write!(s, " D{d}");
    }
    for o in 0..64 {
        if observables >> o & 1 == 1 {
            let _ = write!(s, " L{o}");
        }
    }
}

/// Family lines `detector(0) D3` (X family) or `detector(1) D3` (Z family).
fn write_families(s: &mut String, families: &[StabilizerType]) {
    for (d, f) in families.iter().enumerate() {
        let _ = writeln!(s, "detector({}) D{d}", *f as u8);
    }
}

pub fn write_dem(dem: &DetectorErrorModel) -> String {
    let mut s = String::new();
    write_families(&mut s, &dem.families);
    for m in &dem.mechanisms {
        let _ = write!(s, "error({})", m.probability);
        write_targets(&mut s, &m.detectors, m.observables);
        s.push('\n');
    }
    s
}

/// Writes edges as plain lines and hyperedges with `^`-separated components.
pub fn write_decomposed(ddem: &DecomposedDem) -> String {
    let mut s = String::new();
    for m in &ddem.edges {
        let _ = write!(s, "error({})", m.probability);
        write_targets(&mut s, &m.detectors, m.observables);
        s.push('\n');
    }
    for h in &ddem.hyperedges {
        let _ = write!(s, "error({})", h.mechanism.probability);
        for (k, &c) in h.components.iter().enumerate() {
            if k > 0 {
                s.push_str(" ^");
            }
            write_targets(&mut s, &ddem.edges[c].detectors, ddem.edges[c].observables);
        }
        s.push('\n');
    }
    s
}

/// A parsed line: the mechanism and its component groups (one group when the
/// line has no `^`).
pub type ParsedMechanism = (ErrorMechanism, Vec<(Vec<u32>, u64)>);

pub fn parse_dem(text: &str) -> Result<Vec<ParsedMechanism>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("detector") {
            continue;
        }
        let bad = |msg: &str| Error::Parse(format!("line {}: {msg}: `{line}`", lineno + 1));
        let rest = line.strip_prefix("error(").ok_or_else(|| bad("expected `error(`"))?;
        let close = rest.find(')').ok_or_else(|| bad("unclosed probability"))?;
        let probability: f64 = rest[..close].trim().parse().map_err(|_| bad("bad probability"))?;
        let mut groups = vec![(Vec::new(), 0u64)];
        for tok in rest[close + 1..].split_whitespace() {
            if tok == "^" {
                groups.push((Vec::new(), 0));
            } else if let Some(d) = tok.strip_prefix('D') {
                groups.last_mut().unwrap().0.push(d.parse().map_err(|_| bad("bad detector"))?);
            } else if let Some(o) = tok.strip_prefix('L') {
                let o: u32 = o.parse().map_err(|_| bad("bad observable"))?;
                if o >= 64 {
                    return Err(bad("observable index too large"));
                }
                groups.last_mut().unwrap().1 ^= 1 << o;
            } else {
                return Err(bad("unknown target"));
            }
        }
        let mut detectors: Vec<u32> = Vec::new();
        let mut observables = 0;
        for g in &mut groups {
            g.0.sort_unstable();
            detectors = sym_diff(&detectors, &g.0);
            observables ^= g.1;
        }
        out.push((ErrorMechanism { probability, detectors, observables }, groups));
    }
    Ok(out)
}

/// Detector families declared by `detector(f) Di` lines; empty when none are.
pub fn parse_families(text: &str) -> Result<Vec<StabilizerType>> {
    let mut found: BTreeMap<usize, StabilizerType> = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| l.starts_with("detector")) {
        let bad = || Error::Parse(format!("bad detector line `{line}`"));
        let rest = line.strip_prefix("detector(").ok_or_else(bad)?;
        let (family, target) = rest.split_once(')').ok_or_else(bad)?;
        let family = match family.trim() {
            "0" => StabilizerType::X,
            "1" => StabilizerType::Z,
            _ => return Err(bad()),
        };
        let d: usize = target.trim().strip_prefix('D').and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        found.insert(d, family);
    }
    if found.keys().enumerate().any(|(i, &d)| i != d) {
        return Err(Error::Parse("detector family lines must cover 0..n".into()));
    }
    Ok(found.into_values().collect())
}

/// Convenience for tests and tools: a term label on the given targets.
pub fn describe_fault(circuit: &Circuit, fault: &Fault) -> String {
    match fault.action {
        FaultAction::Pauli { targets, term } => {
            let arity = if targets[0] == targets[1] { 1 } else { 2 };
            let label: String = (0..arity).map(|k| PauliTerm::on(&term, k).symbol()).collect();
            format!("{label} on {:?} after #{}", &targets[..arity], fault.after)
        }
        FaultAction::RecordFlip(r) => format!("flip of record {r} (of {})", circuit.num_records),
    }
}
