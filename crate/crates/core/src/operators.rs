//! Named gates, states and measurement bases used by the metrology circuits.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64, I, ONE, ZERO};
pub use crate::pauli::Pauli;

pub fn pauli(p: Pauli) -> ComplexMatrix {
    p.matrix()
}

/// Tensor product of single-qubit Paulis given by a label such as `"XZI"`.
pub fn pauli_string(label: &str) -> Result<ComplexMatrix> {
    let idx = crate::pauli::parse_label(label)?;
    Ok(crate::pauli::string_matrix(idx, label.len()))
}

pub fn hadamard() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

pub fn phase_s() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[ONE, I])
}

/// `H·S`, which maps `(|0⟩ − i|1⟩)/√2` to `|0⟩`.
pub fn y_readout() -> ComplexMatrix {
    &hadamard() * &phase_s()
}

/// CNOT with qubit 0 as control.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

pub fn swap() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`.
pub fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.rows();
    let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        m[(i, i)] = ONE;
        for j in 0..d {
            m[(d + i, d + j)] = u[(i, j)];
        }
    }
    m
}

/// Fredkin gate on (control, a, b).
pub fn cswap() -> ComplexMatrix {
    controlled(&swap())
}

/// Permutation matrix moving the content of register `r` to register `r + 1 (mod m)`,
/// for `m` registers of `n` qubits each.
pub fn cyclic_shift(m: usize, n: usize) -> ComplexMatrix {
    let d = 1usize << n;
    let total = d.pow(m as u32);
    let mut out = ComplexMatrix::zeros(total, total);
    for src in 0..total {
        // Digits of src, register 0 most significant.
        let mut digits = vec![0usize; m];
        let mut rest = src;
        for r in (0..m).rev() {
            digits[r] = rest % d;
            rest /= d;
        }
        let mut dst = 0;
        for r in 0..m {
            dst = dst * d + digits[(r + m - 1) % m];
        }
        out[(dst, src)] = ONE;
    }
    out
}

/// Controlled cyclic shift on `1 + m` qubits, one qubit per register. For `m = 2`
/// this is the Fredkin gate.
pub fn controlled_cyclic_shift(m: usize) -> ComplexMatrix {
    controlled(&cyclic_shift(m, 1))
}

/// Bell basis `|φ₁⟩..|φ₄⟩` as amplitude vectors over `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn bell_basis() -> [Vec<C64>; 4] {
    let s = c(FRAC_1_SQRT_2, 0.0);
    [vec![s, ZERO, ZERO, s], vec![s, ZERO, ZERO, -s], vec![ZERO, s, s, ZERO], vec![ZERO, -s, s, ZERO]]
}

/// Bell-basis index measured by the readout `CNOT(0→1)` then `H(0)` for each
/// computational outcome `b = 2·q0 + q1`.
pub const BELL_INDEX_OF_OUTCOME: [usize; 4] = [0, 2, 1, 3];

/// Computational outcome produced by Bell state `k` under the Bell readout.
pub const OUTCOME_OF_BELL_INDEX: [usize; 4] = [0, 2, 1, 3];

/// `exp(iπ/(3√3)·(X+Y+Z))`.
pub fn rotation_r() -> ComplexMatrix {
    // (X+Y+Z)/√3 is a unit Pauli vector, so the exponent is (π/3)·n·σ.
    let a = PI / 3.0;
    let k = 1.0 / 3f64.sqrt();
    su2(a.cos(), -a.sin() * k, -a.sin() * k, -a.sin() * k)
}

/// `cos·I − i·s·(nx X + ny Y + nz Z)` written with the signs folded in:
/// returns `w·I − i(x X + y Y + z Z)`.
fn su2(w: f64, x: f64, y: f64, z: f64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[c(w, -z), c(-y, -x)], &[c(y, -x), c(w, z)]])
}

/// Rotated Bell basis: vectors `(R† ⊗ I)|φ_k⟩`, so that applying `R` to qubit 0 and
/// then measuring in the Bell basis projects onto them.
pub fn rotated_bell_basis() -> [Vec<C64>; 4] {
    let r_dag = rotation_r().adjoint().kron(&ComplexMatrix::identity(2));
    bell_basis().map(|v| (&r_dag * &ComplexMatrix::column(&v)).into_data())
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 1 << n];
    v[0] = c(FRAC_1_SQRT_2, 0.0);
    v[(1 << n) - 1] += c(FRAC_1_SQRT_2, 0.0);
    v
}

/// `(|0…0⟩ − i|1…1⟩)/√2`.
pub fn ghz_y(n: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 1 << n];
    v[0] = c(FRAC_1_SQRT_2, 0.0);
    v[(1 << n) - 1] += c(0.0, -FRAC_1_SQRT_2);
    v
}

pub fn projector_py(n: usize) -> ComplexMatrix {
    let v = ghz_y(n);
    ComplexMatrix::outer(&v, &v)
}

/// `exp(−iλZt/2)`.
pub fn zeeman_unitary(lambda: f64, t: f64) -> ComplexMatrix {
    let h = lambda * t / 2.0;
    ComplexMatrix::diagonal(&[C64::from_polar(1.0, -h), C64::from_polar(1.0, h)])
}

/// Field parameters `(B, θ, φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    pub b: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FieldParams {
    pub fn new(b: f64, theta: f64, phi: f64) -> Self {
        Self { b, theta, phi }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.b, self.theta, self.phi]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// ℓ₁ distance.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        (self.b - other.b).abs() + (self.theta - other.theta).abs() + (self.phi - other.phi).abs()
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// `H(λ) = B(sinθ cosφ X + sinθ sinφ Y + cosθ Z)`.
pub fn field_hamiltonian(p: FieldParams) -> ComplexMatrix {
    let [nx, ny, nz] = p.direction();
    let x = pauli(Pauli::X).scale_real(p.b * nx);
    let y = pauli(Pauli::Y).scale_real(p.b * ny);
    let z = pauli(Pauli::Z).scale_real(p.b * nz);
    &(&x + &y) + &z
}

/// `exp(−iH(λ)t)` in closed form: `cos(Bt)·I − i·sin(Bt)·n·σ`.
pub fn field_unitary(p: FieldParams, t: f64) -> ComplexMatrix {
    let [nx, ny, nz] = p.direction();
    let (s, co) = (p.b * t).sin_cos();
    su2(co, s * nx, s * ny, s * nz)
}

/// `exp(−iH(λ)t) ⊗ I₂`.
pub fn encoding_unitary(p: FieldParams, t: f64) -> ComplexMatrix {
    field_unitary(p, t).kron(&ComplexMatrix::identity(2))
}

/// Looks up a named operator: Pauli strings (`"XZ"`), `H`, `S`, `CNOT`, `SWAP`,
/// `CSWAP`, `R`.
pub fn operator_by_label(label: &str) -> Result<ComplexMatrix> {
    match label.to_ascii_uppercase().as_str() {
        "H" => Ok(hadamard()),
        "S" => Ok(phase_s()),
        "CNOT" | "CX" => Ok(cnot()),
        "SWAP" => Ok(swap()),
        "CSWAP" | "FREDKIN" => Ok(cswap()),
        "R" => Ok(rotation_r()),
        other => pauli_string(other).map_err(|_| Error::UnknownLabel(label.to_string())),
    }
}
