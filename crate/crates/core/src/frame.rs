//! Bit-parallel Pauli-frame propagation.
//!
//! Every `u64` word holds 64 independent lanes. The sampler uses one lane per
//! shot; DEM extraction uses one lane per injected fault.

use crate::circuit::{Basis, Circuit, GateKind, Instruction};
use crate::noise::PauliTerm;

pub const LANES: usize = 64;

#[derive(Debug, Clone)]
pub struct Frames {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
    pub records: Vec<u64>,
}

impl Frames {
    pub fn new(num_qubits: usize, num_records: usize) -> Self {
        Frames { x: vec![0; num_qubits], z: vec![0; num_qubits], records: vec![0; num_records] }
    }

    pub fn for_circuit(circuit: &Circuit) -> Self {
        Frames::new(circuit.num_qubits, circuit.num_records)
    }

    pub fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
        self.records.fill(0);
    }

    /// XORs `term` into the lanes selected by `lanes` on the given targets.
    #[inline]
    pub fn apply_term(&mut self, targets: &[usize], term: PauliTerm, lanes: u64) {
        for (k, &q) in targets.iter().enumerate() {
            if term.x >> k & 1 == 1 {
                self.x[q] ^= lanes;
            }
            if term.z >> k & 1 == 1 {
                self.z[q] ^= lanes;
            }
        }
    }

    /// Conjugates the frame through the noiseless part of one instruction.
    #[inline]
    pub fn step(&mut self, inst: &Instruction) {
        match *inst {
            Instruction::Prep { ref qubits, .. } => {
                for &q in qubits {
                    self.x[q] = 0;
                    self.z[q] = 0;
                }
            }
            Instruction::Gate2 { kind: GateKind::Cnot, control, target } => {
                self.x[target] ^= self.x[control];
                self.z[control] ^= self.z[target];
            }
            Instruction::Gate2 { kind: GateKind::Cz, control, target } => {
                self.z[control] ^= self.x[target];
                self.z[target] ^= self.x[control];
            }
            Instruction::H { qubit } => std::mem::swap(&mut self.x[qubit], &mut self.z[qubit]),
            Instruction::Measure { qubit, basis, record, .. } => {
                self.records[record] = match basis {
                    Basis::Z => self.x[qubit],
                    Basis::X => self.z[qubit],
                };
            }
            Instruction::Noise { .. } | Instruction::Detector { .. } | Instruction::Observable { .. } => {}
        }
    }

    /// Parity of records for each detector, one word per detector.
    pub fn detector_words(&self, circuit: &Circuit) -> Vec<u64> {
        circuit.detectors().iter().map(|recs| self.parity(recs)).collect()
    }

    pub fn observable_words(&self, circuit: &Circuit) -> Vec<u64> {
        circuit.observables().iter().map(|recs| self.parity(recs)).collect()
    }

    fn parity(&self, records: &[usize]) -> u64 {
        records.iter().fold(0, |acc, &r| acc ^ self.records[r])
    }
}

/// Runs `circuit` from instruction `start`, calling `hook` after the noiseless
/// update of every instruction so callers can inject errors or measurement flips.
pub fn propagate<F>(circuit: &Circuit, start: usize, frames: &mut Frames, mut hook: F)
where
    F: FnMut(usize, &Instruction, &mut Frames),
{
    for (i, inst) in circuit.instructions.iter().enumerate().skip(start) {
        frames.step(inst);
        hook(i, inst, frames);
    }
}
