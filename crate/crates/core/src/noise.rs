//! Biased Pauli channels: the single-qubit code-capacity channel and the
//! hybrid biased-depolarizing (HBD) circuit-level table.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Physical error rate `p` and dephasing bias `eta = p_z / (p_x + p_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p: f64,
    #[serde(serialize_with = "ser_eta", deserialize_with = "de_eta")]
    pub eta: f64,
}

pub(crate) fn ser_eta<S: Serializer>(eta: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if eta.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*eta)
    }
}

pub(crate) fn de_eta<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Eta {
        Num(f64),
        Text(String),
    }
    match Eta::deserialize(d)? {
        Eta::Num(v) => Ok(v),
        Eta::Text(t) => parse_eta(&t).map_err(serde::de::Error::custom),
    }
}

/// Serde helpers for a list of biases where `"inf"` stands for infinity.
pub(crate) mod eta_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Eta(#[serde(serialize_with = "super::ser_eta", deserialize_with = "super::de_eta")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&e| Eta(e)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Eta>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

/// Text form of a bias: `inf` or the shortest decimal.
pub fn format_eta(eta: f64) -> String {
    if eta.is_infinite() {
        "inf".into()
    } else {
        format!("{eta}")
    }
}

/// Parses a bias value; accepts `inf`/`infinity` for the pure-dephasing limit.
pub fn parse_eta(text: &str) -> std::result::Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("invalid eta `{text}`: {e}")),
    }
}

impl NoiseParams {
    pub fn new(p: f64, eta: f64) -> Result<Self> {
        let params = NoiseParams { p, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p) {
            return Err(Error::InvalidNoise(format!("p = {} outside [0, 0.5]", self.p)));
        }
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(Error::InvalidNoise(format!("eta = {} must be >= 0", self.eta)));
        }
        Ok(())
    }

    /// `(p_x, p_y, p_z)` of the asymmetric channel with `p_x = p_y`.
    pub fn marginals(&self) -> (f64, f64, f64) {
        if self.eta.is_infinite() {
            return (0.0, 0.0, self.p);
        }
        let px = self.p / (2.0 * (1.0 + self.eta));
        let pz = self.eta * self.p / (1.0 + self.eta);
        (px, px, pz)
    }
}

/// A Pauli acting on one or two qubits; bit `k` of `x`/`z` refers to target `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliTerm {
    pub x: u8,
    pub z: u8,
}

impl PauliTerm {
    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut t = PauliTerm { x: 0, z: 0 };
        for (k, p) in paulis.iter().enumerate() {
            if p.has_x() {
                t.x |= 1 << k;
            }
            if p.has_z() {
                t.z |= 1 << k;
            }
        }
        t
    }

    pub fn on(&self, k: usize) -> Pauli {
        Pauli::from_bits(self.x >> k & 1 == 1, self.z >> k & 1 == 1)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }
}

/// A Pauli channel over `arity` qubits: the listed non-identity outcomes plus an
/// implicit identity remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDistribution {
    arity: usize,
    outcomes: Vec<(PauliTerm, f64)>,
    cumulative: Vec<f64>,
}

impl PauliDistribution {
    /// Zero-probability outcomes are dropped.
    pub fn new(arity: usize, outcomes: Vec<(PauliTerm, f64)>) -> Self {
        let outcomes: Vec<(PauliTerm, f64)> = outcomes.into_iter().filter(|&(t, p)| p > 0.0 && !t.is_identity()).collect();
        let mut acc = 0.0;
        let cumulative = outcomes
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        PauliDistribution { arity, outcomes, cumulative }
    }

    /// Uniform over all `4^arity - 1` non-identity Paulis with total mass `p`.
    pub fn depolarizing(arity: usize, p: f64) -> Self {
        let n = (1usize << (2 * arity)) - 1;
        let terms = all_terms(arity).into_iter().map(|t| (t, p / n as f64)).collect();
        PauliDistribution::new(arity, terms)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn outcomes(&self) -> &[(PauliTerm, f64)] {
        &self.outcomes
    }

    /// Total non-identity probability.
    pub fn error_probability(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn probability(&self, term: PauliTerm) -> f64 {
        self.outcomes.iter().filter(|(t, _)| *t == term).map(|(_, p)| p).sum()
    }

    /// Probability of a term written as a string such as `"IZ"` (target 0 first).
    pub fn probability_of(&self, label: &str) -> f64 {
        let paulis: Vec<Pauli> = label
            .chars()
            .map(|c| match c {
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => Pauli::I,
            })
            .collect();
        self.probability(PauliTerm::from_paulis(&paulis))
    }

    /// Draws from the channel with a single uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<PauliTerm> {
        if self.outcomes.is_empty() {
            return None;
        }
        let u: f64 = rng.random();
        if u >= self.error_probability() {
            return None;
        }
        let i = self.cumulative.partition_point(|&c| c <= u);
        Some(self.outcomes[i.min(self.outcomes.len() - 1)].0)
    }

    pub fn label(&self, term: PauliTerm) -> String {
        (0..self.arity).map(|k| term.on(k).symbol()).collect()
    }
}

impl fmt::Display for PauliDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.outcomes.iter().map(|&(t, p)| format!("{}:{p:.3e}", self.label(t))).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn all_terms(arity: usize) -> Vec<PauliTerm> {
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    match arity {
        1 => paulis[1..].iter().map(|&p| PauliTerm::from_paulis(&[p])).collect(),
        2 => paulis
            .iter()
            .flat_map(|&a| paulis.iter().map(move |&b| PauliTerm::from_paulis(&[a, b])))
            .filter(|t| !t.is_identity())
            .collect(),
        _ => panic!("only one- and two-qubit channels are supported"),
    }
}

/// Single-qubit asymmetric channel with `p_x = p_y = p / (2(1 + eta))`, `p_z = eta p / (1 + eta)`.
pub fn code_capacity_channel(params: NoiseParams) -> PauliDistribution {
    let (px, py, pz) = params.marginals();
    PauliDistribution::new(
        1,
        vec![
            (PauliTerm::from_paulis(&[Pauli::X]), px),
            (PauliTerm::from_paulis(&[Pauli::Y]), py),
            (PauliTerm::from_paulis(&[Pauli::Z]), pz),
        ],
    )
}

/// Per-location channels of the HBD circuit noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    pub cz: PauliDistribution,
    pub cnot: PauliDistribution,
    pub h: PauliDistribution,
    pub idle: PauliDistribution,
    pub meas_flip: f64,
}

/// CZ: biased two-qubit channel (IZ, ZI, ZZ share `eta p / (1 + eta)`, the other
/// twelve share `p / (1 + eta)`). CNOT and H: depolarizing. Idle: the
/// code-capacity channel. Measurement: classical flip with probability `p`.
pub fn hbd_channels(params: NoiseParams) -> ChannelTable {
    let p = params.p;
    let (dephasing, other) = if params.eta.is_infinite() {
        (p / 3.0, 0.0)
    } else {
        (params.eta * p / (3.0 * (1.0 + params.eta)), p / (12.0 * (1.0 + params.eta)))
    };
    let cz_terms = all_terms(2)
        .into_iter()
        .map(|t| {
            let pure_z = t.x == 0;
            (t, if pure_z { dephasing } else { other })
        })
        .collect();
    ChannelTable {
        cz: PauliDistribution::new(2, cz_terms),
        cnot: PauliDistribution::depolarizing(2, p),
        h: PauliDistribution::depolarizing(1, p),
        idle: code_capacity_channel(params),
        meas_flip: p,
    }
}

/// Draws one outcome of `dist`; `None` is the identity.
pub fn sample_pauli<R: Rng + ?Sized>(dist: &PauliDistribution, rng: &mut R) -> Option<PauliTerm> {
    dist.sample(rng)
}
