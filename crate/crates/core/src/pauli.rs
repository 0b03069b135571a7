//! Pauli strings indexed in base 4 (0 = I, 1 = X, 2 = Y, 3 = Z), qubit 0 being the
//! most significant digit.

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    pub fn from_char(ch: char) -> Result<Pauli> {
        match ch.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::UnknownLabel(ch.to_string())),
        }
    }

    pub fn as_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }

    /// (x, z) symplectic bits.
    fn bits(self) -> (u8, u8) {
        match self {
            Pauli::I => (0, 0),
            Pauli::X => (1, 0),
            Pauli::Y => (1, 1),
            Pauli::Z => (0, 1),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            Pauli::Y => ComplexMatrix::from_rows(&[&[ZERO, c(0.0, -1.0)], &[c(0.0, 1.0), ZERO]]),
            Pauli::Z => ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, c(-1.0, 0.0)]]),
        }
    }
}

/// Digit of qubit `q` in an `n`-qubit Pauli index.
pub fn digit(index: usize, q: usize, n: usize) -> Pauli {
    Pauli::from_index(index >> (2 * (n - 1 - q)))
}

/// Number of Pauli strings on `n` qubits.
pub fn count(n: usize) -> usize {
    1 << (2 * n)
}

pub fn label(index: usize, n: usize) -> String {
    (0..n).map(|q| digit(index, q, n).as_char()).collect()
}

pub fn parse_label(label: &str) -> Result<usize> {
    if label.is_empty() {
        return Err(Error::UnknownLabel(String::new()));
    }
    let mut idx = 0;
    for ch in label.chars() {
        idx = idx * 4 + Pauli::from_char(ch).map_err(|_| Error::UnknownLabel(label.into()))?.index();
    }
    Ok(idx)
}

pub fn string_matrix(index: usize, n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(1);
    for q in 0..n {
        m = m.kron(&digit(index, q, n).matrix());
    }
    m
}

/// Whether two Pauli strings commute.
pub fn commutes(a: usize, b: usize, n: usize) -> bool {
    let mut anti = 0u8;
    for q in 0..n {
        let (ax, az) = digit(a, q, n).bits();
        let (bx, bz) = digit(b, q, n).bits();
        anti ^= (ax & bz) ^ (az & bx);
    }
    anti == 0
}

/// Index of the product `P_a P_b` up to phase.
pub fn product(a: usize, b: usize, n: usize) -> usize {
    let mut out = 0;
    for q in 0..n {
        let (ax, az) = digit(a, q, n).bits();
        let (bx, bz) = digit(b, q, n).bits();
        let p = match (ax ^ bx, az ^ bz) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (1, 1) => Pauli::Y,
            _ => Pauli::Z,
        };
        out = out * 4 + p.index();
    }
    out
}

/// Whether the string only contains I and Z.
pub fn is_diagonal(index: usize, n: usize) -> bool {
    (0..n).all(|q| matches!(digit(index, q, n), Pauli::I | Pauli::Z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        for i in 0..count(3) {
            assert_eq!(parse_label(&label(i, 3)).unwrap(), i);
        }
        assert!(parse_label("XQ").is_err());
        assert_eq!(parse_label("ZZZ").unwrap(), 63);
    }

    #[test]
    fn commutation_matches_matrices() {
        let n = 2;
        for a in 0..count(n) {
            for b in 0..count(n) {
                let pa = string_matrix(a, n);
                let pb = string_matrix(b, n);
                let ab = &pa * &pb;
                let ba = &pb * &pa;
                let comm = ab.max_abs_diff(&ba) < 1e-14;
                assert_eq!(comm, commutes(a, b, n), "{} {}", label(a, n), label(b, n));
            }
        }
    }

    #[test]
    fn product_matches_up_to_phase() {
        let n = 2;
        for a in 0..count(n) {
            for b in 0..count(n) {
                let ab = &string_matrix(a, n) * &string_matrix(b, n);
                let p = string_matrix(product(a, b, n), n);
                let overlap = crate::linalg::trace_product(&p.adjoint(), &ab).norm();
                assert!((overlap - 4.0).abs() < 1e-12);
            }
        }
    }
}
