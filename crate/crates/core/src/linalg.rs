//! Dense complex matrices and density matrices for systems of a few qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so a register laid
//! out as `ctrl ⊗ anc ⊗ tar` has the control qubit at index 0.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance used at module boundaries.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a positive semidefinite matrix.
pub const PSD_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix literal");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix literal");
            data.extend(row.iter().map(|&x| c(x, 0.0)));
        }
        Self { rows: r, cols, data }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    /// Column vector from amplitudes.
    pub fn column(amplitudes: &[C64]) -> Self {
        Self { rows: amplitudes.len(), cols: 1, data: amplitudes.to_vec() }
    }

    /// `|a⟩⟨b|` for amplitude vectors `a`, `b`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                m.data[i * b.len() + j] = x * y.conj();
            }
        }
        m
    }

    /// `|i⟩⟨j|` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m.data[i * dim + j] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Number of qubits when the matrix is a square operator of power-of-two size.
    pub fn num_qubits(&self) -> Option<usize> {
        if self.is_square() && self.rows.is_power_of_two() {
            Some(self.rows.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m.data[col * self.rows + r] = self.data[r * self.cols + col].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m.data[col * self.rows + r] = self.data[r * self.cols + col];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for ar in 0..self.rows {
            for ac in 0..self.cols {
                let a = self.data[ar * self.cols + ac];
                if a == ZERO {
                    continue;
                }
                for br in 0..other.rows {
                    let row = ar * other.rows + br;
                    for bc in 0..other.cols {
                        m.data[row * cols + ac * other.cols + bc] = a * other.data[br * other.cols + bc];
                    }
                }
            }
        }
        m
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out = &mut m.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(m)
    }

    /// Largest absolute entrywise difference. Dimensions must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_abs_diff on mismatched shapes");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-abs entry of `M - M†`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for col in r..n {
                let d = (self.data[r * n + col] - self.data[col * n + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Max-abs entry of `U†U − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = &self.adjoint() * self;
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                out.data[r * m.ncols() + col] = m[(r, col)];
            }
        }
        out
    }

    /// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        // Symmetrize so the eigen solver sees an exactly Hermitian input.
        let sym = (self + &self.adjoint()).scale_real(0.5);
        let eig = sym.to_nalgebra().symmetric_eigen();
        let mut pairs: Vec<(f64, Vec<C64>)> = (0..self.rows)
            .map(|k| {
                let v = eig.eigenvectors.column(k).iter().copied().collect();
                (eig.eigenvalues[k], v)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(pairs.into_iter().unzip())
    }

    pub fn min_hermitian_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.hermitian_eigen()?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// Matrix exponential `exp(-i·H·t)` of a Hermitian `H` via its eigendecomposition.
    pub fn exp_i_hermitian(h: &Self, t: f64) -> Result<Self> {
        let (vals, vecs) = h.hermitian_eigen()?;
        let n = h.rows;
        let mut u = Self::zeros(n, n);
        for (lambda, v) in vals.iter().zip(&vecs) {
            let phase = C64::from_polar(1.0, -lambda * t);
            for r in 0..n {
                for col in 0..n {
                    u.data[r * n + col] += phase * v[r] * v[col].conj();
                }
            }
        }
        Ok(u)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + col]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product of two matrices.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Kronecker product of a sequence of matrices, left to right.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(ComplexMatrix::identity(1), |acc, m| acc.kron(m))
}

/// Partial trace of a square matrix over a register layout with arbitrary subsystem
/// dimensions, keeping `keep` (in layout order).
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "layout {dims:?} has dimension {total}, matrix is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Dimension("partial trace must keep a subsystem".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("invalid keep set {keep:?} for {} subsystems", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // Strides of each subsystem in the full index.
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |subs: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &s in subs.iter().rev() {
            off += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|i| offsets(keep, i)).collect();
    let traced_off: Vec<usize> = (0..traced_dim).map(|i| offsets(&traced, i)).collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (a, &ra) in kept_off.iter().enumerate() {
        for (b, &rb) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ra + t, rb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Basis-index offsets of the `2^k` local basis states of `qubits` inside an
/// `n`-qubit index, plus the list of "rest" indices with those bits cleared.
pub(crate) struct QubitSlots {
    pub offsets: Vec<usize>,
    pub rest: Vec<usize>,
}

impl QubitSlots {
    pub fn new(n: usize, qubits: &[usize]) -> Self {
        let k = qubits.len();
        let mut offsets = Vec::with_capacity(1 << k);
        for a in 0..(1usize << k) {
            let mut off = 0;
            for (i, &q) in qubits.iter().enumerate() {
                let bit = (a >> (k - 1 - i)) & 1;
                off |= bit << (n - 1 - q);
            }
            offsets.push(off);
        }
        let mask: usize = qubits.iter().map(|&q| 1usize << (n - 1 - q)).sum();
        let rest = (0..(1usize << n)).filter(|i| i & mask == 0).collect();
        Self { offsets, rest }
    }
}

fn check_qubits(n: usize, qubits: &[usize], op_dim: usize) -> Result<()> {
    if op_dim != 1 << qubits.len() {
        return Err(Error::Dimension(format!("operator of dimension {op_dim} applied to {} qubits", qubits.len())));
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n || qubits[..i].contains(&q) {
            return Err(Error::Dimension(format!("invalid target qubits {qubits:?} on a {n}-qubit register")));
        }
    }
    Ok(())
}

/// Validated density matrix on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps `matrix` after checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps `matrix` checking only its shape. Inner simulation loops use this;
    /// callers validate at module boundaries.
    pub fn new_unchecked(matrix: ComplexMatrix) -> Result<Self> {
        let num_qubits = matrix.num_qubits().ok_or_else(|| {
            Error::InvalidState(format!("{}x{} is not a square power-of-two matrix", matrix.rows(), matrix.cols()))
        })?;
        Ok(Self { num_qubits, matrix })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = self.matrix.min_hermitian_eigenvalue()?;
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("state vector norm² is {norm}")));
        }
        Self::new_unchecked(ComplexMatrix::outer(amplitudes, amplitudes))
    }

    /// `|b⟩⟨b|` for computational basis index `b`.
    pub fn basis(num_qubits: usize, b: usize) -> Self {
        let dim = 1 << num_qubits;
        Self { num_qubits, matrix: ComplexMatrix::unit(dim, b, b) }
    }

    pub fn zero_state(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self { num_qubits, matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { num_qubits: self.num_qubits + other.num_qubits, matrix: self.matrix.kron(&other.matrix) }
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let m = &self.matrix;
        let mut acc = 0.0;
        for r in 0..d {
            for col in 0..d {
                acc += (m[(r, col)] * m[(col, r)]).re;
            }
        }
        acc
    }

    /// Computational-basis populations.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Reduced state on the qubits in `keep` (in the order given).
    pub fn reduce_to_qubits(&self, keep: &[usize]) -> Result<Self> {
        let dims = vec![2; self.num_qubits];
        let m = partial_trace_matrix(&self.matrix, &dims, keep)?;
        Self::new_unchecked(m)
    }

    /// Applies `U ρ U†` with `U` acting on `qubits`.
    pub fn apply_unitary(&mut self, u: &ComplexMatrix, qubits: &[usize]) -> Result<()> {
        check_qubits(self.num_qubits, qubits, u.rows())?;
        let slots = QubitSlots::new(self.num_qubits, qubits);
        self.apply_unitary_slots(u, &slots);
        Ok(())
    }

    pub(crate) fn apply_unitary_slots(&mut self, u: &ComplexMatrix, slots: &QubitSlots) {
        let d = self.dim();
        let k = slots.offsets.len();
        let data = self.matrix.data_mut();
        let mut buf = vec![ZERO; k];
        // Left multiplication: columns are independent.
        for col in 0..d {
            for &r0 in &slots.rest {
                for (a, off) in slots.offsets.iter().enumerate() {
                    buf[a] = data[(r0 + off) * d + col];
                }
                for (a, off) in slots.offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (b, x) in buf.iter().enumerate() {
                        acc += u[(a, b)] * x;
                    }
                    data[(r0 + off) * d + col] = acc;
                }
            }
        }
        // Right multiplication by U†.
        for row in 0..d {
            let base = row * d;
            for &c0 in &slots.rest {
                for (b, off) in slots.offsets.iter().enumerate() {
                    buf[b] = data[base + c0 + off];
                }
                for (a, off) in slots.offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (b, x) in buf.iter().enumerate() {
                        acc += x * u[(a, b)].conj();
                    }
                    data[base + c0 + off] = acc;
                }
            }
        }
    }

    /// Applies a column-stacking superoperator acting on `qubits`.
    pub fn apply_superoperator(&mut self, s: &ComplexMatrix, qubits: &[usize]) -> Result<()> {
        let local = 1usize << qubits.len();
        if s.rows() != local * local || !s.is_square() {
            return Err(Error::Dimension(format!(
                "superoperator {}x{} does not act on {} qubits",
                s.rows(),
                s.cols(),
                qubits.len()
            )));
        }
        check_qubits(self.num_qubits, qubits, local)?;
        let slots = QubitSlots::new(self.num_qubits, qubits);
        self.apply_superoperator_slots(s, &slots);
        Ok(())
    }

    pub(crate) fn apply_superoperator_slots(&mut self, s: &ComplexMatrix, slots: &QubitSlots) {
        let d = self.dim();
        let k = slots.offsets.len();
        let data = self.matrix.data_mut();
        let mut v = vec![ZERO; k * k];
        let mut w = vec![ZERO; k * k];
        for &r0 in &slots.rest {
            for &c0 in &slots.rest {
                for (b, cb) in slots.offsets.iter().enumerate() {
                    for (a, ra) in slots.offsets.iter().enumerate() {
                        v[a + b * k] = data[(r0 + ra) * d + c0 + cb];
                    }
                }
                for (i, out) in w.iter_mut().enumerate() {
                    let row = &s.data()[i * k * k..(i + 1) * k * k];
                    *out = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                }
                for (b, cb) in slots.offsets.iter().enumerate() {
                    for (a, ra) in slots.offsets.iter().enumerate() {
                        data[(r0 + ra) * d + c0 + cb] = w[a + b * k];
                    }
                }
            }
        }
    }

    /// Replaces the qubits in `qubits` by the maximally mixed state, i.e.
    /// `ρ ↦ tr_Q(ρ) ⊗ I/2^|Q|` with the original qubit ordering.
    pub fn reset_to_maximally_mixed(&mut self, qubits: &[usize]) -> Result<()> {
        check_qubits(self.num_qubits, qubits, 1 << qubits.len())?;
        let slots = QubitSlots::new(self.num_qubits, qubits);
        let d = self.dim();
        let k = slots.offsets.len();
        let inv = 1.0 / k as f64;
        let data = self.matrix.data_mut();
        for &r0 in &slots.rest {
            for &c0 in &slots.rest {
                let mut acc = ZERO;
                for off in &slots.offsets {
                    acc += data[(r0 + off) * d + c0 + off];
                }
                let avg = acc * inv;
                for (a, ra) in slots.offsets.iter().enumerate() {
                    for (b, cb) in slots.offsets.iter().enumerate() {
                        data[(r0 + ra) * d + c0 + cb] = if a == b { avg } else { ZERO };
                    }
                }
            }
        }
        Ok(())
    }
}

/// Partial trace over a layout of subsystem dimensions.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dims, keep)?;
    DensityMatrix::new_unchecked(m)
}

/// `tr(O ρ)` for a Hermitian observable `O`.
pub fn expectation(obs: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if obs.rows() != rho.dim() || !obs.is_square() {
        return Err(Error::Dimension(format!(
            "observable {}x{} vs state dimension {}",
            obs.rows(),
            obs.cols(),
            rho.dim()
        )));
    }
    let dev = obs.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let v = trace_product(obs, rho.matrix());
    debug_assert!(v.im.abs() < 1e-8, "imaginary expectation {v}");
    Ok(v.re)
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut acc = ZERO;
    for r in 0..n {
        for k in 0..a.cols() {
            acc += a[(r, k)] * b[(k, r)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli, Pauli};

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn xx_maps_00_to_11() {
        let x = pauli(Pauli::X);
        let xx = tensor_product(&x, &x);
        let ket00 = ComplexMatrix::column(&[ONE, ZERO, ZERO, ZERO]);
        let out = &xx * &ket00;
        assert_eq!(out, ComplexMatrix::column(&[ZERO, ZERO, ZERO, ONE]));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let reduced = partial_trace(&bell(), &[2, 2], &[0]).unwrap();
        let expected = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(reduced.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn keep_everything_is_identity() {
        let rho = bell();
        let out = partial_trace(&rho, &[2, 2], &[0, 1]).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn partial_trace_rejects_bad_layout() {
        assert!(partial_trace(&bell(), &[2, 4], &[0]).is_err());
        assert!(partial_trace(&bell(), &[2, 2], &[]).is_err());
        assert!(partial_trace(&bell(), &[2, 2], &[2]).is_err());
    }

    #[test]
    fn expectation_basics() {
        let zero = DensityMatrix::zero_state(1);
        assert_eq!(expectation(&pauli(Pauli::Z), &zero).unwrap(), 1.0);
        assert!((expectation(&ComplexMatrix::identity(4), &bell()).unwrap() - 1.0).abs() < 1e-14);
        let non_herm = ComplexMatrix::unit(2, 0, 1);
        assert!(matches!(expectation(&non_herm, &zero), Err(Error::NotHermitian(_))));
        assert!(expectation(&ComplexMatrix::identity(4), &zero).is_err());
    }

    #[test]
    fn density_validation_catches_bad_input() {
        let neg = ComplexMatrix::diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg).is_err());
        let tr2 = ComplexMatrix::identity(2);
        assert!(DensityMatrix::new(tr2).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn local_unitary_matches_full_kron() {
        let h = crate::operators::hadamard();
        let mut rho = bell().tensor(&DensityMatrix::zero_state(1));
        let full = tensor_all([&ComplexMatrix::identity(2), &h, &ComplexMatrix::identity(2)]);
        let expected = &(&full * rho.matrix()) * &full.adjoint();
        rho.apply_unitary(&h, &[1]).unwrap();
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn reset_to_mixed_replaces_marginal() {
        let mut rho = bell();
        rho.reset_to_maximally_mixed(&[1]).unwrap();
        let expected = ComplexMatrix::identity(4).scale_real(0.25);
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-15);
    }
}
