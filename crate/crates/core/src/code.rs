//! Elongated compass codes on a `d x d` lattice and their ZXXZ-square deformation.
//!
//! Qubits sit on lattice vertices `(row, col)`, indexed row-major from the top-left.
//! A cell `(r, c)` with `1 <= r, c <= d - 1` is the plaquette whose corners are
//! `(r-1, c-1)`, `(r-1, c)`, `(r, c-1)` and `(r, c)`. Cells with
//! `r - c ≡ 0 (mod ℓ)` carry weight-4 X stabilizers; the vertical ZZ gauge
//! operators between consecutive X cells of a cell row are merged into Z
//! stabilizers of weight `2ℓ` (shorter where the row meets the lattice edge);
//! horizontal XX gauges not adjacent to any X cell become weight-2 X stabilizers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{gf2_rank, Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeCoord {
    pub row: usize,
    pub col: usize,
}

impl LatticeCoord {
    pub fn new(row: usize, col: usize) -> Self {
        LatticeCoord { row, col }
    }

    pub fn index(self, d: usize) -> usize {
        debug_assert!(self.row < d && self.col < d);
        self.row * d + self.col
    }

    pub fn from_index(index: usize, d: usize) -> Self {
        LatticeCoord { row: index / d, col: index % d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    Css,
    #[serde(rename = "zxxz_square", alias = "zxxz")]
    ZxxzSquare,
}

impl std::str::FromStr for Deformation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "css" => Ok(Deformation::Css),
            "zxxz" | "zxxz_square" | "zxxz-square" => Ok(Deformation::ZxxzSquare),
            other => Err(Error::config("deformation", format!("unknown deformation `{other}`"))),
        }
    }
}

/// Which CSS generator family a stabilizer descends from. Deformation changes
/// the Paulis on masked qubits but keeps this label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabilizerType {
    X,
    Z,
}

impl StabilizerType {
    pub fn pauli(self) -> Pauli {
        match self {
            StabilizerType::X => Pauli::X,
            StabilizerType::Z => Pauli::Z,
        }
    }

    pub fn other(self) -> StabilizerType {
        match self {
            StabilizerType::X => StabilizerType::Z,
            StabilizerType::Z => StabilizerType::X,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerCode {
    pub distance: usize,
    pub elongation: usize,
    pub deformation: Deformation,
    pub x_stabilizers: Vec<PauliString>,
    pub z_stabilizers: Vec<PauliString>,
    pub logical_x: PauliString,
    pub logical_z: PauliString,
    pub hadamard_mask: BTreeSet<usize>,
}

fn is_x_cell(r: usize, c: usize, ell: usize) -> bool {
    (r as i64 - c as i64).rem_euclid(ell as i64) == 0
}

/// Builds the CSS elongated compass code of distance `d` and elongation `ell`.
pub fn build_elongated_compass(d: usize, ell: usize) -> Result<StabilizerCode> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidCode(format!("distance must be odd and >= 3, got {d}")));
    }
    if ell < 2 {
        return Err(Error::InvalidCode(format!("elongation must be >= 2, got {ell}")));
    }
    let q = |r: usize, c: usize| LatticeCoord::new(r, c).index(d);
    let cell_is_x = |r: usize, c: usize| (1..d).contains(&r) && (1..d).contains(&c) && is_x_cell(r, c, ell);

    let mut x_stabs = Vec::new();
    for r in 1..d {
        for c in 1..d {
            if cell_is_x(r, c) {
                x_stabs.push(PauliString::uniform(
                    [q(r - 1, c - 1), q(r - 1, c), q(r, c - 1), q(r, c)],
                    Pauli::X,
                ));
            }
        }
    }
    // Horizontal XX gauges on qubit row r sit between cell rows r and r + 1.
    for r in 0..d {
        for c in 1..d {
            if !cell_is_x(r, c) && !cell_is_x(r + 1, c) {
                x_stabs.push(PauliString::uniform([q(r, c - 1), q(r, c)], Pauli::X));
            }
        }
    }

    let mut z_stabs = Vec::new();
    for r in 1..d {
        let mut start = 0;
        let cuts = (1..d).filter(|&c| is_x_cell(r, c, ell)).chain(std::iter::once(d));
        for cut in cuts {
            if cut > start {
                let support = (start..cut).flat_map(|col| [q(r - 1, col), q(r, col)]);
                z_stabs.push(PauliString::uniform(support, Pauli::Z));
            }
            start = cut;
        }
    }

    // Anchor ordering: X stabilizers column-major, Z stabilizers row-major.
    let anchor = |s: &PauliString| {
        let coords: Vec<LatticeCoord> = s.qubits().map(|i| LatticeCoord::from_index(i, d)).collect();
        let row = coords.iter().map(|c| c.row).min().unwrap();
        let col = coords.iter().map(|c| c.col).min().unwrap();
        (row, col)
    };
    x_stabs.sort_by_key(|s| {
        let (r, c) = anchor(s);
        (c, r)
    });
    z_stabs.sort_by_key(|s| anchor(s));

    let logical_x = PauliString::uniform((0..d).map(|r| q(r, 0)), Pauli::X);
    let logical_z = PauliString::uniform((0..d).map(|c| q(0, c)), Pauli::Z);

    Ok(StabilizerCode {
        distance: d,
        elongation: ell,
        deformation: Deformation::Css,
        x_stabilizers: x_stabs,
        z_stabilizers: z_stabs,
        logical_x,
        logical_z,
        hadamard_mask: BTreeSet::new(),
    })
}

/// Applies Hadamards on the top-left and bottom-right corner of every weight-4
/// X plaquette, producing the ZXXZ-square deformed code. Supports and weights
/// are unchanged.
pub fn apply_deformation(code: &StabilizerCode) -> Result<StabilizerCode> {
    if code.deformation != Deformation::Css {
        return Err(Error::AlreadyDeformed);
    }
    let d = code.distance;
    let ell = code.elongation as i64;
    // Corners of X plaquettes lie on the diagonals r - c ≡ 0 (mod ℓ). Extending the
    // rule to the virtual plaquettes just outside the lattice also masks the two
    // off-diagonal corners, which makes the ℓ = 2 code exactly XZZX.
    let mask: BTreeSet<usize> = (0..d * d)
        .filter(|&q| {
            let c = LatticeCoord::from_index(q, d);
            (c.row as i64 - c.col as i64).rem_euclid(ell) == 0
        })
        .collect();
    let h = |q: usize| mask.contains(&q);
    Ok(StabilizerCode {
        distance: d,
        elongation: code.elongation,
        deformation: Deformation::ZxxzSquare,
        x_stabilizers: code.x_stabilizers.iter().map(|s| s.conjugate_by(h)).collect(),
        z_stabilizers: code.z_stabilizers.iter().map(|s| s.conjugate_by(h)).collect(),
        logical_x: code.logical_x.conjugate_by(h),
        logical_z: code.logical_z.conjugate_by(h),
        hadamard_mask: mask,
    })
}

/// Undoes the Hadamard mask, recovering the CSS parent code.
pub fn undeform(code: &StabilizerCode) -> StabilizerCode {
    let h = |q: usize| code.hadamard_mask.contains(&q);
    StabilizerCode {
        deformation: Deformation::Css,
        x_stabilizers: code.x_stabilizers.iter().map(|s| s.conjugate_by(h)).collect(),
        z_stabilizers: code.z_stabilizers.iter().map(|s| s.conjugate_by(h)).collect(),
        logical_x: code.logical_x.conjugate_by(h),
        logical_z: code.logical_z.conjugate_by(h),
        hadamard_mask: BTreeSet::new(),
        ..code.clone()
    }
}

pub fn build_code(d: usize, ell: usize, deformation: Deformation) -> Result<StabilizerCode> {
    let css = build_elongated_compass(d, ell)?;
    match deformation {
        Deformation::Css => Ok(css),
        Deformation::ZxxzSquare => apply_deformation(&css),
    }
}

/// `(X_L, Z_L)`: X_L is column 0 of X, Z_L is row 0 of Z, conjugated by the mask.
pub fn logical_operators(code: &StabilizerCode) -> (PauliString, PauliString) {
    (code.logical_x.clone(), code.logical_z.clone())
}

impl StabilizerCode {
    pub fn num_qubits(&self) -> usize {
        self.distance * self.distance
    }

    pub fn is_css(&self) -> bool {
        self.deformation == Deformation::Css
    }

    pub fn stabilizers(&self, kind: StabilizerType) -> &[PauliString] {
        match kind {
            StabilizerType::X => &self.x_stabilizers,
            StabilizerType::Z => &self.z_stabilizers,
        }
    }

    pub fn logical(&self, kind: StabilizerType) -> &PauliString {
        match kind {
            StabilizerType::X => &self.logical_x,
            StabilizerType::Z => &self.logical_z,
        }
    }

    pub fn all_stabilizers(&self) -> impl Iterator<Item = &PauliString> {
        self.x_stabilizers.iter().chain(&self.z_stabilizers)
    }

    pub fn num_stabilizers(&self) -> usize {
        self.x_stabilizers.len() + self.z_stabilizers.len()
    }

    pub fn coord(&self, qubit: usize) -> LatticeCoord {
        LatticeCoord::from_index(qubit, self.distance)
    }

    /// Number of independent stabilizer generators (GF(2) rank).
    pub fn independent_generators(&self) -> usize {
        let n = self.num_qubits();
        let words = (2 * n).div_ceil(64);
        let rows = self
            .all_stabilizers()
            .map(|s| {
                let mut row = vec![0u64; words];
                for &(q, p) in s.support() {
                    if p.has_x() {
                        row[q / 64] |= 1 << (q % 64);
                    }
                    if p.has_z() {
                        let b = n + q;
                        row[b / 64] |= 1 << (b % 64);
                    }
                }
                row
            })
            .collect();
        gf2_rank(rows)
    }

    /// Checks every commutation relation the code must satisfy.
    pub fn validate(&self) -> Result<()> {
        let stabs: Vec<&PauliString> = self.all_stabilizers().collect();
        for (i, a) in stabs.iter().enumerate() {
            for b in &stabs[i + 1..] {
                if a.anticommutes(b) {
                    return Err(Error::InvalidCode(format!("stabilizers {a} and {b} anticommute")));
                }
            }
            if a.anticommutes(&self.logical_x) || a.anticommutes(&self.logical_z) {
                return Err(Error::InvalidCode(format!("stabilizer {a} anticommutes with a logical")));
            }
        }
        if !self.logical_x.anticommutes(&self.logical_z) {
            return Err(Error::InvalidCode("logical operators commute".into()));
        }
        let n = self.num_qubits();
        if self.num_stabilizers() != n - 1 || self.independent_generators() != n - 1 {
            return Err(Error::InvalidCode(format!(
                "expected {} independent generators, found {} ({} listed)",
                n - 1,
                self.independent_generators(),
                self.num_stabilizers()
            )));
        }
        Ok(())
    }

    /// Data-qubit order used by the extraction circuit: X stabilizers are
    /// scanned row by row (left to right), Z stabilizers column by column
    /// (top then bottom), so hooks run perpendicular to the same-type logical.
    pub fn gate_order(&self, kind: StabilizerType, index: usize) -> Vec<usize> {
        let mut qubits: Vec<usize> = self.stabilizers(kind)[index].qubits().collect();
        let d = self.distance;
        match kind {
            StabilizerType::X => qubits.sort_by_key(|&q| (q / d, q % d)),
            StabilizerType::Z => qubits.sort_by_key(|&q| (q % d, q / d)),
        }
        qubits
    }
}

fn signature_table(code: &StabilizerCode) -> Vec<[u64; 3]> {
    // Per qubit, per Pauli (X, Y, Z): bit i for stabilizer i, then two logical bits.
    let stabs: Vec<&PauliString> = code.all_stabilizers().collect();
    let m = stabs.len();
    assert!(m + 2 <= 64, "signature table only supports small codes");
    (0..code.num_qubits())
        .map(|q| {
            let mut sig = [0u64; 3];
            for (k, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
                let single = PauliString::new(vec![(q, p)]);
                for (i, s) in stabs.iter().enumerate() {
                    if s.anticommutes(&single) {
                        sig[k] |= 1 << i;
                    }
                }
                if code.logical_x.anticommutes(&single) {
                    sig[k] |= 1 << m;
                }
                if code.logical_z.anticommutes(&single) {
                    sig[k] |= 1 << (m + 1);
                }
            }
            sig
        })
        .collect()
}

/// Exhaustive minimum weight over all nontrivial logical operators.
///
/// An operator is a nontrivial logical iff it commutes with every stabilizer
/// and anticommutes with X_L or Z_L. Only supported for `d <= 5`.
pub fn code_distance_check(code: &StabilizerCode) -> Result<usize> {
    if code.distance > 5 {
        return Err(Error::DistanceSearchTooLarge(code.distance));
    }
    let sigs = signature_table(code);
    let m = code.num_stabilizers();
    let stab_mask = (1u64 << m) - 1;

    fn search(sigs: &[[u64; 3]], start: usize, left: usize, acc: u64, stab_mask: u64) -> bool {
        if left == 0 {
            return acc & stab_mask == 0 && acc & !stab_mask != 0;
        }
        for q in start..=sigs.len() - left {
            for s in sigs[q] {
                if search(sigs, q + 1, left - 1, acc ^ s, stab_mask) {
                    return true;
                }
            }
        }
        false
    }

    for w in 1..=code.num_qubits() {
        if search(&sigs, 0, w, 0, stab_mask) {
            return Ok(w);
        }
    }
    unreachable!("the logical operators themselves are nontrivial logicals")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeDescription {
    pub num_qubits: usize,
    pub distance: usize,
    pub elongation: usize,
    pub deformation: Deformation,
    pub x_stabilizers: Vec<Vec<(usize, Pauli)>>,
    pub z_stabilizers: Vec<Vec<(usize, Pauli)>>,
    pub logical_x: Vec<(usize, Pauli)>,
    pub logical_z: Vec<(usize, Pauli)>,
    pub hadamard_mask: Vec<usize>,
}

pub fn describe(code: &StabilizerCode) -> CodeDescription {
    let pairs = |s: &PauliString| s.support().to_vec();
    CodeDescription {
        num_qubits: code.num_qubits(),
        distance: code.distance,
        elongation: code.elongation,
        deformation: code.deformation,
        x_stabilizers: code.x_stabilizers.iter().map(pairs).collect(),
        z_stabilizers: code.z_stabilizers.iter().map(pairs).collect(),
        logical_x: pairs(&code.logical_x),
        logical_z: pairs(&code.logical_z),
        hadamard_mask: code.hadamard_mask.iter().copied().collect(),
    }
}
