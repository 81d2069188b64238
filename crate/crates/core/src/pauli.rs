//! Single-qubit Paulis and sparse Pauli strings.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Conjugation by a Hadamard.
    pub fn hadamard(self) -> Pauli {
        match self {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
            p => p,
        }
    }

    pub fn anticommutes(self, other: Pauli) -> bool {
        (self.has_x() && other.has_z()) ^ (self.has_z() && other.has_x())
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A Pauli operator given by its non-identity support, sorted by qubit index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    support: Vec<(usize, Pauli)>,
}

impl PauliString {
    /// Builds a string from `(qubit, pauli)` pairs. Identities are dropped.
    ///
    /// Panics on duplicate qubits, which always indicates a construction bug.
    pub fn new(mut support: Vec<(usize, Pauli)>) -> Self {
        support.retain(|&(_, p)| p != Pauli::I);
        support.sort_unstable_by_key(|&(q, _)| q);
        for w in support.windows(2) {
            assert!(w[0].0 != w[1].0, "duplicate qubit {} in Pauli string", w[0].0);
        }
        PauliString { support }
    }

    pub fn uniform(qubits: impl IntoIterator<Item = usize>, pauli: Pauli) -> Self {
        PauliString::new(qubits.into_iter().map(|q| (q, pauli)).collect())
    }

    pub fn support(&self) -> &[(usize, Pauli)] {
        &self.support
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.support.iter().map(|&(q, _)| q)
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        match self.support.binary_search_by_key(&qubit, |&(q, _)| q) {
            Ok(i) => self.support[i].1,
            Err(_) => Pauli::I,
        }
    }

    /// Symplectic product: true when the two strings anticommute.
    pub fn anticommutes(&self, other: &PauliString) -> bool {
        let (mut i, mut j) = (0, 0);
        let mut parity = false;
        while i < self.support.len() && j < other.support.len() {
            let (qa, pa) = self.support[i];
            let (qb, pb) = other.support[j];
            match qa.cmp(&qb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    parity ^= pa.anticommutes(pb);
                    i += 1;
                    j += 1;
                }
            }
        }
        parity
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        !self.anticommutes(other)
    }

    /// Applies a Hadamard on every qubit for which `mask` returns true.
    pub fn conjugate_by(&self, mask: impl Fn(usize) -> bool) -> PauliString {
        PauliString {
            support: self
                .support
                .iter()
                .map(|&(q, p)| if mask(q) { (q, p.hadamard()) } else { (q, p) })
                .collect(),
        }
    }

    /// Dense `(x, z)` bit vectors over `n` qubits.
    pub fn to_symplectic(&self, n: usize) -> (Vec<bool>, Vec<bool>) {
        let mut x = vec![false; n];
        let mut z = vec![false; n];
        for &(q, p) in &self.support {
            x[q] = p.has_x();
            z[q] = p.has_z();
        }
        (x, z)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.support.iter().map(|(q, p)| format!("{p}{q}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Rank over GF(2) of a set of rows given as packed `u64` words.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let words = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..words * 64 {
        let (w, b) = (col / 64, 1u64 << (col % 64));
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & b != 0 {
                for (a, p) in row.iter_mut().zip(&pivot_row) {
                    *a ^= p;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_commutation_table() {
        use Pauli::*;
        for a in [I, X, Y, Z] {
            for b in [I, X, Y, Z] {
                let expected = a != I && b != I && a != b;
                assert_eq!(a.anticommutes(b), expected, "{a}{b}");
            }
        }
    }

    #[test]
    fn string_products() {
        let xx = PauliString::uniform([0, 1], Pauli::X);
        let zz = PauliString::uniform([0, 1], Pauli::Z);
        let zi = PauliString::uniform([0], Pauli::Z);
        assert!(xx.commutes(&zz));
        assert!(xx.anticommutes(&zi));
        assert_eq!(xx.conjugate_by(|q| q == 1).get(1), Pauli::Z);
    }

    #[test]
    #[should_panic]
    fn duplicate_qubit_panics() {
        PauliString::new(vec![(3, Pauli::X), (3, Pauli::Z)]);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![0b011], vec![0b110], vec![0b101]];
        assert_eq!(gf2_rank(rows), 2);
    }
}
