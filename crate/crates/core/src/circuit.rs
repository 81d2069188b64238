//! Serial syndrome-extraction memory circuits.
//!
//! Qubits `0..n` are data qubits; each stabilizer gets its own ancilla at
//! `n + s`, where `s` indexes X-family stabilizers first, then Z-family.

use serde::{Deserialize, Serialize};

use crate::code::{StabilizerCode, StabilizerType};
use crate::error::{Error, Result};
use crate::frame::{Frames, LANES};
use crate::noise::{code_capacity_channel, ChannelTable, NoiseParams, PauliDistribution, PauliTerm};
use crate::pauli::Pauli;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[serde(alias = "X")]
    X,
    #[serde(alias = "Z")]
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    pub fn stabilizer_type(self) -> StabilizerType {
        match self {
            Basis::X => StabilizerType::X,
            Basis::Z => StabilizerType::Z,
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Basis::X),
            "z" => Ok(Basis::Z),
            _ => Err(format!("unknown basis `{s}` (expected x or z)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Cnot,
    Cz,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Prep { qubits: Vec<usize>, basis: Basis },
    /// `control` is always the ancilla.
    Gate2 { kind: GateKind, control: usize, target: usize },
    H { qubit: usize },
    /// Draw from `channels[channel]`; bit `k` of a term acts on `targets[k]`.
    Noise { location: usize, targets: [usize; 2], channel: usize },
    /// `flip` is the classical readout-flip probability.
    Measure { qubit: usize, basis: Basis, record: usize, flip: f64 },
    Detector { id: usize, records: Vec<usize> },
    Observable { id: usize, records: Vec<usize> },
}

/// Where a detector sits: which stabilizer and which comparison round.
/// `round == rounds` marks the final data-reconstructed comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorInfo {
    pub kind: StabilizerType,
    pub stabilizer: usize,
    pub round: usize,
}

/// Noise attached to a memory circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitNoise {
    Noiseless,
    /// One code-capacity layer on the data before the first round; perfect
    /// gates and measurements.
    CodeCapacity(NoiseParams),
    /// HBD circuit-level noise.
    Circuit(ChannelTable),
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_data: usize,
    pub num_records: usize,
    pub instructions: Vec<Instruction>,
    pub channels: Vec<PauliDistribution>,
    pub basis: Basis,
    pub rounds: usize,
    detectors: Vec<Vec<usize>>,
    observables: Vec<Vec<usize>>,
    detector_info: Vec<DetectorInfo>,
    num_noise_locations: usize,
}

impl Circuit {
    pub fn detectors(&self) -> &[Vec<usize>] {
        &self.detectors
    }

    pub fn observables(&self) -> &[Vec<usize>] {
        &self.observables
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn detector_info(&self) -> &[DetectorInfo] {
        &self.detector_info
    }

    pub fn num_noise_locations(&self) -> usize {
        self.num_noise_locations
    }

    pub fn has_noise(&self) -> bool {
        self.instructions.iter().any(|i| match i {
            Instruction::Noise { channel, .. } => !self.channels[*channel].outcomes().is_empty(),
            Instruction::Measure { flip, .. } => *flip > 0.0,
            _ => false,
        })
    }

    pub fn count_measurements(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Measure { .. })).count()
    }
}

struct Builder {
    instructions: Vec<Instruction>,
    channels: Vec<PauliDistribution>,
    num_records: usize,
    num_locations: usize,
}

impl Builder {
    fn channel(&mut self, dist: &PauliDistribution) -> Option<usize> {
        if dist.outcomes().is_empty() {
            return None;
        }
        if let Some(i) = self.channels.iter().position(|c| c == dist) {
            return Some(i);
        }
        self.channels.push(dist.clone());
        Some(self.channels.len() - 1)
    }

    fn noise(&mut self, channel: Option<usize>, targets: [usize; 2]) {
        if let Some(channel) = channel {
            self.instructions.push(Instruction::Noise { location: self.num_locations, targets, channel });
            self.num_locations += 1;
        }
    }

    fn measure(&mut self, qubit: usize, basis: Basis, flip: f64) -> usize {
        let record = self.num_records;
        self.num_records += 1;
        self.instructions.push(Instruction::Measure { qubit, basis, record, flip });
        record
    }
}

/// Builds a `rounds`-round memory experiment in `basis`.
///
/// Data qubits are prepared in the product state fixed by the memory-basis
/// stabilizers: the memory basis on unmasked qubits and the opposite basis on
/// Hadamard-masked ones. Each round extracts every stabilizer with its own
/// ancilla (prep, H, controlled gates, H, measure), X family first.
pub fn build_memory_circuit(code: &StabilizerCode, basis: Basis, rounds: usize, noise: &CircuitNoise) -> Result<Circuit> {
    if rounds == 0 {
        return Err(Error::InvalidCircuit("rounds must be >= 1".into()));
    }
    let n = code.num_qubits();
    let kinds = [StabilizerType::X, StabilizerType::Z];
    let stabs: Vec<(StabilizerType, usize)> =
        kinds.iter().flat_map(|&k| (0..code.stabilizers(k).len()).map(move |i| (k, i))).collect();
    let m = stabs.len();
    let memory = basis.stabilizer_type();

    let mut b = Builder { instructions: Vec::new(), channels: Vec::new(), num_records: 0, num_locations: 0 };
    let (idle, h, cz, cnot, meas_flip, per_round) = match noise {
        CircuitNoise::Noiseless => (None, None, None, None, 0.0, false),
        CircuitNoise::CodeCapacity(params) => {
            params.validate()?;
            (b.channel(&code_capacity_channel(*params)), None, None, None, 0.0, false)
        }
        CircuitNoise::Circuit(t) => {
            if !(0.0..=0.5).contains(&t.meas_flip) {
                return Err(Error::InvalidNoise(format!("measurement flip {} outside [0, 0.5]", t.meas_flip)));
            }
            (b.channel(&t.idle), b.channel(&t.h), b.channel(&t.cz), b.channel(&t.cnot), t.meas_flip, true)
        }
    };

    let data_basis = |q: usize| if code.hadamard_mask.contains(&q) { basis.other() } else { basis };
    for bb in [Basis::Z, Basis::X] {
        let qubits: Vec<usize> = (0..n).filter(|&q| data_basis(q) == bb).collect();
        if !qubits.is_empty() {
            b.instructions.push(Instruction::Prep { qubits, basis: bb });
        }
    }

    let mut records = vec![vec![0usize; m]; rounds];
    for round in 0..rounds {
        if round == 0 || per_round {
            for q in 0..n {
                b.noise(idle, [q, q]);
            }
        }
        for (s, &(kind, index)) in stabs.iter().enumerate() {
            let anc = n + s;
            let stab = &code.stabilizers(kind)[index];
            b.instructions.push(Instruction::Prep { qubits: vec![anc], basis: Basis::Z });
            b.instructions.push(Instruction::H { qubit: anc });
            b.noise(h, [anc, anc]);
            for q in code.gate_order(kind, index) {
                let (gate, channel) = match stab.get(q) {
                    Pauli::X => (GateKind::Cnot, cnot),
                    Pauli::Z => (GateKind::Cz, cz),
                    p => return Err(Error::InvalidCircuit(format!("stabilizer acts as {p} on qubit {q}"))),
                };
                b.instructions.push(Instruction::Gate2 { kind: gate, control: anc, target: q });
                b.noise(channel, [anc, q]);
            }
            b.instructions.push(Instruction::H { qubit: anc });
            b.noise(h, [anc, anc]);
            records[round][s] = b.measure(anc, Basis::Z, meas_flip);
        }
    }
    let data_records: Vec<usize> = (0..n).map(|q| b.measure(q, data_basis(q), meas_flip)).collect();

    let mut detectors = Vec::new();
    let mut info = Vec::new();
    for (s, &(kind, index)) in stabs.iter().enumerate() {
        for round in 0..rounds {
            let recs = if round == 0 {
                if kind != memory {
                    continue;
                }
                vec![records[0][s]]
            } else {
                vec![records[round - 1][s], records[round][s]]
            };
            detectors.push(recs);
            info.push(DetectorInfo { kind, stabilizer: index, round });
        }
        if kind == memory {
            let mut recs = vec![records[rounds - 1][s]];
            recs.extend(code.stabilizers(kind)[index].qubits().map(|q| data_records[q]));
            detectors.push(recs);
            info.push(DetectorInfo { kind, stabilizer: index, round: rounds });
        }
    }
    // Order detectors by round, then stabilizer, so that ids grow with time.
    let mut order: Vec<usize> = (0..detectors.len()).collect();
    order.sort_by_key(|&i| (info[i].round, stab_position(&stabs, info[i])));
    let detectors: Vec<Vec<usize>> = order.iter().map(|&i| detectors[i].clone()).collect();
    let info: Vec<DetectorInfo> = order.iter().map(|&i| info[i]).collect();
    for (id, recs) in detectors.iter().enumerate() {
        b.instructions.push(Instruction::Detector { id, records: recs.clone() });
    }

    let logical = code.logical(memory);
    let obs: Vec<usize> = logical.qubits().map(|q| data_records[q]).collect();
    for &(q, p) in logical.support() {
        let expected = match data_basis(q) {
            Basis::Z => Pauli::Z,
            Basis::X => Pauli::X,
        };
        if p != expected {
            return Err(Error::InvalidCircuit(format!(
                "{basis:?}-memory logical acts as {p} on qubit {q}, which is measured in the {:?} basis",
                data_basis(q)
            )));
        }
    }
    b.instructions.push(Instruction::Observable { id: 0, records: obs.clone() });

    let circuit = Circuit {
        num_qubits: n + m,
        num_data: n,
        num_records: b.num_records,
        instructions: b.instructions,
        channels: b.channels,
        basis,
        rounds,
        detectors,
        observables: vec![obs],
        detector_info: info,
        num_noise_locations: b.num_locations,
    };
    check_deterministic(&circuit)?;
    Ok(circuit)
}

fn stab_position(stabs: &[(StabilizerType, usize)], info: DetectorInfo) -> usize {
    stabs.iter().position(|&(k, i)| k == info.kind && i == info.stabilizer).unwrap_or(usize::MAX)
}

/// Dry run in frame form: every Pauli that leaves a freshly prepared or
/// freshly measured qubit unchanged (its gauge) must leave every detector and
/// the observable untouched. Otherwise some detector depends on a random
/// measurement outcome.
fn check_deterministic(circuit: &Circuit) -> Result<()> {
    let mut gauges = Vec::new();
    for (i, inst) in circuit.instructions.iter().enumerate() {
        match inst {
            Instruction::Prep { qubits, basis } => {
                for &q in qubits {
                    gauges.push(Fault::pauli(i, q, *basis));
                }
            }
            Instruction::Measure { qubit, basis, .. } => gauges.push(Fault::pauli(i, *qubit, *basis)),
            _ => {}
        }
    }
    for (fault, sig) in gauges.iter().zip(fault_signatures(circuit, &gauges)) {
        if let Some(&det) = sig.detectors.first() {
            return Err(Error::NonDeterministicDetector(det as usize));
        }
        if sig.observables != 0 {
            return Err(Error::InvalidCircuit(format!("observable depends on gauge at instruction {}", fault.after)));
        }
    }
    Ok(())
}

/// A single fault inserted right after instruction `after`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub after: usize,
    pub action: FaultAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAction {
    Pauli { targets: [usize; 2], term: PauliTerm },
    RecordFlip(usize),
}

impl Fault {
    /// The single-qubit Pauli matching `basis` (Z for Z, X for X).
    pub fn pauli(after: usize, qubit: usize, basis: Basis) -> Fault {
        let p = match basis {
            Basis::Z => Pauli::Z,
            Basis::X => Pauli::X,
        };
        Fault { after, action: FaultAction::Pauli { targets: [qubit, qubit], term: PauliTerm::from_paulis(&[p]) } }
    }
}

/// Detector ids and observable mask flipped by a fault.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub detectors: Vec<u32>,
    pub observables: u64,
}

/// Noiseless propagation of each fault separately, 64 at a time.
pub fn fault_signatures(circuit: &Circuit, faults: &[Fault]) -> Vec<Signature> {
    let mut order: Vec<usize> = (0..faults.len()).collect();
    order.sort_by_key(|&i| faults[i].after);
    let chunks: Vec<&[usize]> = order.chunks(LANES).collect();
    let per_chunk = crate::exec::map_indexed(chunks.len(), |c| chunk_signatures(circuit, faults, chunks[c]));
    let mut out = vec![Signature::default(); faults.len()];
    for (chunk, sigs) in chunks.iter().zip(per_chunk) {
        for (&i, sig) in chunk.iter().zip(sigs) {
            out[i] = sig;
        }
    }
    out
}

fn chunk_signatures(circuit: &Circuit, faults: &[Fault], chunk: &[usize]) -> Vec<Signature> {
    let mut frames = Frames::for_circuit(circuit);
    let start = faults[chunk[0]].after;
    let mut next = 0;
    crate::frame::propagate(circuit, start, &mut frames, |i, _, fr| {
        while next < chunk.len() && faults[chunk[next]].after == i {
            let lane = 1u64 << next;
            match faults[chunk[next]].action {
                FaultAction::Pauli { targets, term } => fr.apply_term(&targets, term, lane),
                FaultAction::RecordFlip(r) => fr.records[r] ^= lane,
            }
            next += 1;
        }
    });
    let mut sigs = vec![Signature::default(); chunk.len()];
    for (d, word) in frames.detector_words(circuit).into_iter().enumerate() {
        for_each_bit(word, |lane| sigs[lane].detectors.push(d as u32));
    }
    for (o, word) in frames.observable_words(circuit).into_iter().enumerate() {
        for_each_bit(word, |lane| sigs[lane].observables |= 1 << o);
    }
    sigs
}

pub(crate) fn for_each_bit(mut word: u64, mut f: impl FnMut(usize)) {
    while word != 0 {
        f(word.trailing_zeros() as usize);
        word &= word - 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code, Deformation};
    use crate::noise::hbd_channels;

    #[test]
    fn measurement_counts_d3() {
        let code = build_code(3, 2, Deformation::Css).unwrap();
        let c = build_memory_circuit(&code, Basis::Z, 3, &CircuitNoise::Noiseless).unwrap();
        assert_eq!(c.count_measurements(), 3 * 8 + 9);
        // 4 Z detectors in round 0, 8 per later round, 4 final.
        assert_eq!(c.num_detectors(), 4 + 8 * 2 + 4);
        assert_eq!(c.num_observables(), 1);
    }

    #[test]
    fn all_codes_build_deterministic_circuits() {
        for d in [3, 5] {
            for ell in 2..=4 {
                for deformation in [Deformation::Css, Deformation::ZxxzSquare] {
                    let code = build_code(d, ell, deformation).unwrap();
                    for basis in [Basis::X, Basis::Z] {
                        let noise = CircuitNoise::Circuit(hbd_channels(NoiseParams::new(0.01, 2.0).unwrap()));
                        build_memory_circuit(&code, basis, 2, &noise).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_zero_rounds() {
        let code = build_code(3, 2, Deformation::Css).unwrap();
        assert!(build_memory_circuit(&code, Basis::Z, 0, &CircuitNoise::Noiseless).is_err());
    }

    #[test]
    fn dropping_a_gauge_makes_detectors_random() {
        // Preparing all data in the wrong basis makes the first-round
        // detectors depend on measurement randomness.
        let code = build_code(3, 2, Deformation::Css).unwrap();
        let mut c = build_memory_circuit(&code, Basis::Z, 2, &CircuitNoise::Noiseless).unwrap();
        for inst in &mut c.instructions {
            if let Instruction::Prep { qubits, basis } = inst {
                if qubits.len() > 1 {
                    *basis = Basis::X;
                }
            }
        }
        assert!(matches!(check_deterministic(&c), Err(Error::NonDeterministicDetector(_))));
    }
}
