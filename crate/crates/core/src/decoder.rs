//! One noisy memory setup with every decoder it supports.

use serde::{Deserialize, Serialize};

use crate::circuit::{build_memory_circuit, Basis, Circuit, CircuitNoise};
use crate::code::{build_code, Deformation, StabilizerCode};
use crate::correlated::{circuit_correlated_decode, CssCorrelatedConfig, CssCorrelatedDecoder, CssOrder};
use crate::dem::{code_capacity_dem, decompose_hyperedges, extract_dem, sample_code_capacity, to_matching_graph, DetectorErrorModel};
use crate::error::{Error, Result};
use crate::gap::{complementary_gap, GapGraph, GapRecord};
use crate::matching::{mwpm_decode, MatchingGraph};
use crate::noise::{hbd_channels, NoiseParams};
use crate::sim::{simulate, ShotBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecoderKind {
    #[serde(rename = "mwpm")]
    Mwpm,
    #[serde(rename = "css-xz")]
    CssXz,
    #[serde(rename = "css-zx")]
    CssZx,
    #[serde(rename = "corr")]
    Corr,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Mwpm => "mwpm",
            DecoderKind::CssXz => "css-xz",
            DecoderKind::CssZx => "css-zx",
            DecoderKind::Corr => "corr",
        }
    }

    pub fn is_css(self) -> bool {
        matches!(self, DecoderKind::CssXz | DecoderKind::CssZx)
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mwpm" => Ok(DecoderKind::Mwpm),
            "css-xz" => Ok(DecoderKind::CssXz),
            "css-zx" => Ok(DecoderKind::CssZx),
            "corr" => Ok(DecoderKind::Corr),
            _ => Err(format!("unknown decoder `{s}` (expected mwpm, css-xz, css-zx or corr)")),
        }
    }
}

/// `CodeCapacity`: independent single-qubit errors, perfect syndromes.
/// `Hbd`: the circuit-level model with bias-preserving CZ gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseModel {
    #[serde(rename = "code_capacity", alias = "code-capacity")]
    CodeCapacity,
    #[serde(rename = "hbd", alias = "circuit")]
    Hbd,
}

impl std::str::FromStr for NoiseModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "code_capacity" => Ok(NoiseModel::CodeCapacity),
            "hbd" | "circuit" => Ok(NoiseModel::Hbd),
            _ => Err(format!("unknown noise model `{s}` (expected code_capacity or hbd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub d: usize,
    pub ell: usize,
    pub deformation: Deformation,
    pub model: NoiseModel,
    pub params: NoiseParams,
    pub basis: Basis,
    pub rounds: usize,
}

/// Built code, detector error model and decoding graphs for one setup.
///
/// Code-capacity detectors are the X-family then Z-family stabilizers, with
/// observable bit 0 for `Z_L` and bit 1 for `X_L`; a shot fails if either bit
/// is mispredicted. Circuit-level setups have the single memory observable.
pub struct Cell {
    pub spec: CellSpec,
    pub code: StabilizerCode,
    pub circuit: Option<Circuit>,
    pub dem: DetectorErrorModel,
    pub graph: MatchingGraph,
    css: Option<(CssCorrelatedDecoder, CssCorrelatedDecoder)>,
}

impl Cell {
    pub fn new(spec: CellSpec) -> Result<Self> {
        spec.params.validate()?;
        let code = build_code(spec.d, spec.ell, spec.deformation)?;
        let (circuit, dem) = match spec.model {
            NoiseModel::CodeCapacity => (None, code_capacity_dem(&code, spec.params)?),
            NoiseModel::Hbd => {
                let c = build_memory_circuit(&code, spec.basis, spec.rounds, &CircuitNoise::Circuit(hbd_channels(spec.params)))?;
                let dem = extract_dem(&c)?;
                (Some(c), dem)
            }
        };
        let graph = to_matching_graph(&decompose_hyperedges(&dem)?)?;
        let css = if spec.model == NoiseModel::CodeCapacity && code.is_css() {
            let mk = |order| CssCorrelatedDecoder::new(&code, spec.params, CssCorrelatedConfig { order, eta: spec.params.eta });
            Some((mk(CssOrder::Xz)?, mk(CssOrder::Zx)?))
        } else {
            None
        };
        Ok(Cell { spec, code, circuit, dem, graph, css })
    }

    pub fn supports(&self, kind: DecoderKind) -> bool {
        !kind.is_css() || self.css.is_some()
    }

    pub fn sample(&self, shots: usize, seed: u64) -> ShotBatch {
        match &self.circuit {
            Some(c) => simulate(c, shots, seed),
            None => sample_code_capacity(&self.code, self.spec.params, shots, seed),
        }
    }

    /// Observable bit of the memory-basis logical.
    pub fn target_mask(&self) -> u64 {
        match (self.spec.model, self.spec.basis) {
            (NoiseModel::Hbd, _) => 1,
            (NoiseModel::CodeCapacity, Basis::Z) => 1,
            (NoiseModel::CodeCapacity, Basis::X) => 2,
        }
    }

    pub fn predict(&self, kind: DecoderKind, defects: &[usize]) -> Result<u64> {
        match kind {
            DecoderKind::Mwpm => Ok(mwpm_decode(&self.graph, defects)?.observables),
            DecoderKind::Corr => Ok(circuit_correlated_decode(&self.graph, defects)?.second.observables),
            DecoderKind::CssXz | DecoderKind::CssZx => {
                let (xz, zx) = self.css.as_ref().ok_or_else(|| Error::RequiresCss { decoder: kind.name().into() })?;
                let dec = if kind == DecoderKind::CssXz { xz } else { zx };
                Ok(dec.decode(defects)?.observables)
            }
        }
    }

    /// Predictions for every shot, in shot order.
    pub fn predict_batch(&self, kind: DecoderKind, batch: &ShotBatch) -> Result<Vec<u64>> {
        if !self.supports(kind) {
            return Err(Error::RequiresCss { decoder: kind.name().into() });
        }
        crate::exec::map_indexed(batch.shots(), |s| self.predict(kind, &batch.defects(s))).into_iter().collect()
    }

    pub fn gap_graph(&self) -> Result<GapGraph> {
        GapGraph::new(&self.graph, self.target_mask())
    }

    /// Complementary gap of the memory logical for one shot. The correlated
    /// decoder's gap is measured on its pass-2 weights.
    pub fn gap(&self, gap_graph: &GapGraph, kind: DecoderKind, batch: &ShotBatch, shot: usize) -> Result<GapRecord> {
        let defects = batch.defects(shot);
        let target = self.target_mask();
        let truth = batch.observable_mask(shot) & target != 0;
        match kind {
            DecoderKind::Mwpm => {
                let flip = mwpm_decode(&self.graph, &defects)?.observables & target != 0;
                complementary_gap(gap_graph, &self.graph.weights(), &defects, flip, truth, shot)
            }
            DecoderKind::Corr => {
                let out = circuit_correlated_decode(&self.graph, &defects)?;
                let flip = out.second.observables & target != 0;
                complementary_gap(gap_graph, &out.weights, &defects, flip, truth, shot)
            }
            _ => Err(Error::InvalidCircuit(format!("gaps are computed for mwpm and corr, not {kind}"))),
        }
    }
}
