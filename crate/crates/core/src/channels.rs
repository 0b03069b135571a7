//! CPTP channels in Kraus, Pauli-mixture or superoperator form.
//!
//! Superoperators use column stacking: `vec(AρB) = (Bᵀ ⊗ A)·vec(ρ)`, so a Kraus
//! channel has superoperator `Σ conj(K) ⊗ K` and composition is a matrix product.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, trace_product, ComplexMatrix, DensityMatrix, C64, ONE, PSD_TOL, ZERO};
use crate::pauli;

/// Tolerance for Kraus completeness and trace preservation.
pub const CPTP_TOL: f64 = 1e-10;
/// Tolerance for Pauli-mixture normalization.
pub const PAULI_SUM_TOL: f64 = 1e-12;
/// Largest off-diagonal transfer-matrix entry accepted for a Pauli channel.
pub const PTM_DIAGONAL_TOL: f64 = 1e-10;
/// Threshold on `|tr(E_i E_j†)|` for Hilbert-Schmidt orthogonality.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// The standard single-qubit noise families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Depolarizing,
    Dephasing,
    AmplitudeDamping,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 3] =
        [NoiseFamily::Depolarizing, NoiseFamily::Dephasing, NoiseFamily::AmplitudeDamping];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Depolarizing => "depolarizing",
            NoiseFamily::Dephasing => "dephasing",
            NoiseFamily::AmplitudeDamping => "amplitude-damping",
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "depolarizing" | "dp" => Ok(NoiseFamily::Depolarizing),
            "dephasing" | "pf" => Ok(NoiseFamily::Dephasing),
            "amplitude-damping" | "ad" => Ok(NoiseFamily::AmplitudeDamping),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ChannelForm {
    Kraus(Vec<ComplexMatrix>),
    /// Probability per Pauli string, indexed as in [`crate::pauli`].
    PauliMixture(Vec<f64>),
    Superoperator(ComplexMatrix),
}

#[derive(Clone, Debug)]
pub struct QuantumChannel {
    num_qubits: usize,
    form: ChannelForm,
    superop: OnceLock<ComplexMatrix>,
}

pub(crate) fn check_rate(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::RateOutOfRange { what: what.to_string(), rate: p });
    }
    Ok(())
}

fn qubits_of_dim(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::Dimension(format!("dimension {dim} is not a power of 2")))
    }
}

fn kraus_superop(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let d = ops[0].rows();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for k in ops {
        s = &s + &k.conj().kron(k);
    }
    s
}

fn pauli_superop(n: usize, probs: &[f64]) -> ComplexMatrix {
    let d = 1 << n;
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for (a, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let pm = pauli::string_matrix(a, n);
        s = &s + &pm.conj().kron(&pm).scale_real(p);
    }
    s
}

impl QuantumChannel {
    fn raw(num_qubits: usize, form: ChannelForm) -> Self {
        Self { num_qubits, form, superop: OnceLock::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut probs = vec![0.0; pauli::count(n)];
        probs[0] = 1.0;
        Self::raw(n, ChannelForm::PauliMixture(probs))
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(vec![u.clone()])
    }

    pub fn from_kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::from_kraus_unchecked(ops)?;
        ch.validate()?;
        Ok(ch)
    }

    /// Kraus channel without the completeness check. Used for trace-decreasing maps
    /// such as the generalized purified channel.
    pub fn from_kraus_unchecked(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let n = first
            .num_qubits()
            .ok_or_else(|| Error::Dimension(format!("Kraus operator is {}x{}", first.rows(), first.cols())))?;
        if ops.iter().any(|k| k.rows() != first.rows() || !k.is_square()) {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        Ok(Self::raw(n, ChannelForm::Kraus(ops)))
    }

    pub fn from_pauli_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != pauli::count(n) {
            return Err(Error::Dimension(format!("{} Pauli probabilities for {n} qubits", probs.len())));
        }
        let ch = Self::raw(n, ChannelForm::PauliMixture(probs));
        ch.validate()?;
        Ok(ch)
    }

    pub fn from_superoperator(s: ComplexMatrix) -> Result<Self> {
        let ch = Self::from_superoperator_unchecked(s)?;
        ch.validate()?;
        Ok(ch)
    }

    /// Superoperator form without CPTP checks (quasi-probability maps).
    pub fn from_superoperator_unchecked(s: ComplexMatrix) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Dimension("superoperator must be square".into()));
        }
        let d = (s.rows() as f64).sqrt().round() as usize;
        if d * d != s.rows() {
            return Err(Error::Dimension(format!("superoperator size {} is not d²", s.rows())));
        }
        let n = qubits_of_dim(d)?;
        Ok(Self::raw(n, ChannelForm::Superoperator(s)))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn form(&self) -> &ChannelForm {
        &self.form
    }

    pub fn pauli_probabilities(&self) -> Option<&[f64]> {
        match &self.form {
            ChannelForm::PauliMixture(p) => Some(p),
            _ => None,
        }
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        self.superop.get_or_init(|| match &self.form {
            ChannelForm::Kraus(ops) => kraus_superop(ops),
            ChannelForm::PauliMixture(p) => pauli_superop(self.num_qubits, p),
            ChannelForm::Superoperator(s) => s.clone(),
        })
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.dim();
        let s = self.superoperator();
        let mut out = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        out[(i * d + a, j * d + b)] = s[(a + b * d, i + j * d)];
                    }
                }
            }
        }
        out
    }

    /// Kraus operators: the stored ones, `√p·P` for Pauli mixtures, or the canonical
    /// (Hilbert-Schmidt orthogonal) set from the Choi eigendecomposition.
    pub fn kraus_operators(&self) -> Result<Vec<ComplexMatrix>> {
        match &self.form {
            ChannelForm::Kraus(ops) => Ok(ops.clone()),
            ChannelForm::PauliMixture(p) => Ok(p
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(a, &w)| pauli::string_matrix(a, self.num_qubits).scale_real(w.sqrt()))
                .collect()),
            ChannelForm::Superoperator(_) => self.canonical_kraus(),
        }
    }

    pub fn canonical_kraus(&self) -> Result<Vec<ComplexMatrix>> {
        let d = self.dim();
        let (vals, vecs) = self.choi().hermitian_eigen()?;
        let mut ops = Vec::new();
        for (lambda, v) in vals.iter().zip(&vecs) {
            if *lambda <= 1e-13 {
                if *lambda < -PSD_TOL {
                    return Err(Error::InvalidChannel(format!("Choi matrix has eigenvalue {lambda:.3e}")));
                }
                continue;
            }
            let s = lambda.sqrt();
            let mut k = ComplexMatrix::zeros(d, d);
            for i in 0..d {
                for a in 0..d {
                    k[(a, i)] = v[i * d + a] * s;
                }
            }
            ops.push(k);
        }
        if ops.is_empty() {
            return Err(Error::InvalidChannel("zero map".into()));
        }
        Ok(ops)
    }

    /// Checks the CPTP invariants for the stored form.
    pub fn validate(&self) -> Result<()> {
        match &self.form {
            ChannelForm::Kraus(ops) => {
                let d = self.dim();
                let mut sum = ComplexMatrix::zeros(d, d);
                for k in ops {
                    sum = &sum + &(&k.adjoint() * k);
                }
                let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
                if dev > CPTP_TOL {
                    return Err(Error::InvalidChannel(format!("Kraus completeness violated by {dev:.3e}")));
                }
            }
            ChannelForm::PauliMixture(p) => {
                if let Some(bad) = p.iter().find(|&&x| x < -PAULI_SUM_TOL || x.is_nan()) {
                    return Err(Error::InvalidChannel(format!("negative Pauli weight {bad}")));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > PAULI_SUM_TOL {
                    return Err(Error::InvalidChannel(format!("Pauli weights sum to {total}")));
                }
            }
            ChannelForm::Superoperator(_) => {
                let tp = self.trace_preservation_deviation();
                if tp > CPTP_TOL {
                    return Err(Error::InvalidChannel(format!("trace preservation violated by {tp:.3e}")));
                }
                let min = self.choi().min_hermitian_eigenvalue()?;
                if min < -PSD_TOL {
                    return Err(Error::InvalidChannel(format!("Choi matrix has eigenvalue {min:.3e}")));
                }
            }
        }
        Ok(())
    }

    /// Max deviation of `tr_out(Choi)` from the identity.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let d = self.dim();
        let s = self.superoperator();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for a in 0..d {
                    acc += s[(a + a * d, i + j * d)];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Image of an arbitrary operator.
    pub fn apply_to_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let s = self.superoperator();
        let mut v = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                v[i + j * d] = x[(i, j)];
            }
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for row in 0..d * d {
            let acc: C64 = (0..d * d).map(|k| s[(row, k)] * v[k]).sum();
            out[(row % d, row / d)] = acc;
        }
        out
    }

    /// Applies the channel to the given qubits of `rho` in place.
    pub fn apply_in_place(&self, rho: &mut DensityMatrix, qubits: &[usize]) -> Result<()> {
        if qubits.len() != self.num_qubits {
            return Err(Error::Dimension(format!(
                "{}-qubit channel applied to {} qubits",
                self.num_qubits,
                qubits.len()
            )));
        }
        if let ChannelForm::Kraus(ops) = &self.form {
            if ops.len() == 1 {
                return rho.apply_unitary(&ops[0], qubits);
            }
        }
        rho.apply_superoperator(self.superoperator(), qubits)
    }

    pub fn apply(&self, rho: &DensityMatrix, qubits: &[usize]) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        self.apply_in_place(&mut out, qubits)?;
        Ok(out)
    }

    /// Applies the channel to subsystems `targets` of a register layout with
    /// power-of-two subsystem dimensions `dims`.
    pub fn apply_on_layout(&self, rho: &DensityMatrix, targets: &[usize], dims: &[usize]) -> Result<DensityMatrix> {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in dims {
            offsets.push(total);
            total += qubits_of_dim(d)?;
        }
        if total != rho.num_qubits() {
            return Err(Error::Dimension(format!(
                "layout {dims:?} has {total} qubits, state has {}",
                rho.num_qubits()
            )));
        }
        let mut qubits = Vec::new();
        for &t in targets {
            let d = *dims.get(t).ok_or_else(|| Error::Dimension(format!("no subsystem {t} in {dims:?}")))?;
            let k = d.trailing_zeros() as usize;
            qubits.extend(offsets[t]..offsets[t] + k);
        }
        self.apply(rho, &qubits)
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &QuantumChannel) -> Result<QuantumChannel> {
        let n = self.num_qubits + other.num_qubits;
        if let (ChannelForm::PauliMixture(a), ChannelForm::PauliMixture(b)) = (&self.form, &other.form) {
            let mut probs = Vec::with_capacity(a.len() * b.len());
            for pa in a {
                for pb in b {
                    probs.push(pa * pb);
                }
            }
            return Ok(Self::raw(n, ChannelForm::PauliMixture(probs)));
        }
        let ka = self.kraus_operators()?;
        let kb = other.kraus_operators()?;
        let mut ops = Vec::with_capacity(ka.len() * kb.len());
        for x in &ka {
            for y in &kb {
                ops.push(x.kron(y));
            }
        }
        Ok(Self::raw(n, ChannelForm::Kraus(ops)))
    }

    /// Pauli transfer matrix `R_ij = tr(P_i E(P_j))/2ⁿ`.
    pub fn pauli_transfer_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_qubits;
        let cnt = pauli::count(n);
        let d = self.dim() as f64;
        let paulis: Vec<ComplexMatrix> = (0..cnt).map(|a| pauli::string_matrix(a, n)).collect();
        let mut r = vec![vec![0.0; cnt]; cnt];
        for j in 0..cnt {
            let img = self.apply_to_operator(&paulis[j]);
            for i in 0..cnt {
                r[i][j] = trace_product(&paulis[i], &img).re / d;
            }
        }
        r
    }
}

/// `n`-qubit tensor power of the single-qubit family channel at rate `p`.
pub fn make_channel(family: NoiseFamily, p: f64, n: usize) -> Result<QuantumChannel> {
    check_rate(family.name(), p)?;
    let single = single_qubit_channel(family, p);
    let mut ch = single.clone();
    for _ in 1..n.max(1) {
        ch = ch.tensor(&single)?;
    }
    if n == 0 {
        return Err(Error::Dimension("channel on zero qubits".into()));
    }
    Ok(ch)
}

fn single_qubit_channel(family: NoiseFamily, p: f64) -> QuantumChannel {
    match family {
        NoiseFamily::Depolarizing => {
            QuantumChannel::raw(1, ChannelForm::PauliMixture(vec![1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0]))
        }
        NoiseFamily::Dephasing => QuantumChannel::raw(1, ChannelForm::PauliMixture(vec![1.0 - p, 0.0, 0.0, p])),
        NoiseFamily::AmplitudeDamping => {
            let f0 = ComplexMatrix::diagonal(&[ONE, c((1.0 - p).sqrt(), 0.0)]);
            let mut f1 = ComplexMatrix::zeros(2, 2);
            f1[(0, 1)] = c(p.sqrt(), 0.0);
            QuantumChannel::raw(1, ChannelForm::Kraus(vec![f0, f1]))
        }
    }
}

/// Global channel on `n` qubits: depolarizing `ρ ↦ (1−p)ρ + p·I/2ⁿ` or dephasing
/// `(1−p)ρ + p·Z^{⊗n}ρZ^{⊗n}`.
pub fn global_channel(family: NoiseFamily, p: f64, n: usize) -> Result<QuantumChannel> {
    check_rate(family.name(), p)?;
    let cnt = pauli::count(n);
    let mut probs = vec![0.0; cnt];
    match family {
        NoiseFamily::Depolarizing => {
            for w in probs.iter_mut() {
                *w = p / cnt as f64;
            }
            probs[0] += 1.0 - p;
        }
        NoiseFamily::Dephasing => {
            probs[0] = 1.0 - p;
            probs[cnt - 1] = p;
        }
        NoiseFamily::AmplitudeDamping => {
            return Err(Error::Unsupported("global amplitude damping is not defined".into()))
        }
    }
    Ok(QuantumChannel::raw(n, ChannelForm::PauliMixture(probs)))
}

/// Correlated three-qubit noise: local family at `p0` on each qubit, composed with
/// the global family at `p1` (local applied last).
pub fn make_correlated_cswap_noise(family: NoiseFamily, p0: f64, p1: f64) -> Result<QuantumChannel> {
    if family == NoiseFamily::AmplitudeDamping {
        return Err(Error::Unsupported("correlated noise is defined for depolarizing and dephasing only".into()));
    }
    let local = make_channel(family, p0, 3)?;
    let global = global_channel(family, p1, 3)?;
    compose(&local, &global)
}

/// `a ∘ b` (apply `b` first).
pub fn compose(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::Dimension(format!(
            "cannot compose {}-qubit and {}-qubit channels",
            a.num_qubits, b.num_qubits
        )));
    }
    let n = a.num_qubits;
    match (&a.form, &b.form) {
        (ChannelForm::PauliMixture(pa), ChannelForm::PauliMixture(pb)) => {
            let mut out = vec![0.0; pa.len()];
            for (i, &x) in pa.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (j, &y) in pb.iter().enumerate() {
                    out[pauli::product(i, j, n)] += x * y;
                }
            }
            Ok(QuantumChannel::raw(n, ChannelForm::PauliMixture(out)))
        }
        (ChannelForm::Kraus(ka), ChannelForm::Kraus(kb)) if ka.len() * kb.len() <= 64 => {
            let mut ops = Vec::with_capacity(ka.len() * kb.len());
            for x in ka {
                for y in kb {
                    ops.push(x * y);
                }
            }
            Ok(QuantumChannel::raw(n, ChannelForm::Kraus(ops)))
        }
        _ => Ok(QuantumChannel::raw(n, ChannelForm::Superoperator(a.superoperator() * b.superoperator()))),
    }
}

fn probs_from_ptm_diagonal(n: usize, f: &[f64]) -> Vec<f64> {
    let cnt = pauli::count(n);
    (0..cnt)
        .map(|a| {
            let acc: f64 = (0..cnt).map(|b| if pauli::commutes(a, b, n) { f[b] } else { -f[b] }).sum();
            let p = acc / cnt as f64;
            if p.abs() < 1e-15 {
                0.0
            } else {
                p
            }
        })
        .collect()
}

/// Pauli twirl `4⁻ⁿ Σ_P [P]∘E∘[P]`, computed from the transfer-matrix diagonal.
pub fn pauli_twirl(ch: &QuantumChannel) -> QuantumChannel {
    if let ChannelForm::PauliMixture(p) = &ch.form {
        return QuantumChannel::raw(ch.num_qubits, ChannelForm::PauliMixture(p.clone()));
    }
    let r = ch.pauli_transfer_matrix();
    let diag: Vec<f64> = (0..r.len()).map(|i| r[i][i]).collect();
    QuantumChannel::raw(ch.num_qubits, ChannelForm::PauliMixture(probs_from_ptm_diagonal(ch.num_qubits, &diag)))
}

/// Converts to Pauli-mixture form when the transfer matrix is diagonal.
pub fn to_pauli_mixture(ch: &QuantumChannel) -> Result<QuantumChannel> {
    if let ChannelForm::PauliMixture(_) = ch.form {
        return Ok(ch.clone());
    }
    let r = ch.pauli_transfer_matrix();
    let mut worst: f64 = 0.0;
    for (i, row) in r.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if i != j {
                worst = worst.max(x.abs());
            }
        }
    }
    if worst > PTM_DIAGONAL_TOL {
        return Err(Error::NotPauli(worst));
    }
    let diag: Vec<f64> = (0..r.len()).map(|i| r[i][i]).collect();
    QuantumChannel::from_pauli_probs(ch.num_qubits, probs_from_ptm_diagonal(ch.num_qubits, &diag))
}

/// Normalized weights `p_i^m e_i^{m−1} / P̂_m` and `P̂_m`.
pub fn purification_weights(p: &[f64], e: &[f64], m: usize) -> Result<(Vec<f64>, f64)> {
    if m == 0 {
        return Err(Error::InvalidOrder { min: 1, got: 0 });
    }
    if p.len() != e.len() {
        return Err(Error::Dimension(format!("{} weights vs {} e-values", p.len(), e.len())));
    }
    let raw: Vec<f64> = p.iter().zip(e).map(|(&pi, &ei)| pi.powi(m as i32) * ei.powi(m as i32 - 1)).collect();
    let p_hat: f64 = raw.iter().sum();
    if p_hat <= 0.0 {
        return Err(Error::InvalidChannel("purification normalization is zero".into()));
    }
    Ok((raw.iter().map(|w| w / p_hat).collect(), p_hat))
}

/// Purified Pauli channel with weights `p_i^m / Σ_j p_j^m`.
pub fn purified_channel(ch: &QuantumChannel, m: usize) -> Result<QuantumChannel> {
    let pm = to_pauli_mixture(ch)?;
    let p = pm.pauli_probabilities().expect("Pauli form");
    let (w, _) = purification_weights(p, &vec![1.0; p.len()], m)?;
    Ok(QuantumChannel::raw(ch.num_qubits, ChannelForm::PauliMixture(w)))
}

/// `P_m = Σ p_i^m` of a Pauli channel.
pub fn purity_sum(ch: &QuantumChannel, m: usize) -> Result<f64> {
    let pm = to_pauli_mixture(ch)?;
    let p = pm.pauli_probabilities().expect("Pauli form");
    Ok(p.iter().map(|x| x.powi(m as i32)).sum())
}

/// Decomposition `E = Σ p_i [E_i]` with explicit error operators.
///
/// Pauli mixtures use `E_i = P_i` (so `e_i = 1`). Kraus operators are split as
/// `p_i = tr(K_i K_i†)/2ⁿ`, `E_i = K_i/√p_i`.
#[derive(Clone, Debug)]
pub struct ErrorDecomposition {
    pub num_qubits: usize,
    pub weights: Vec<f64>,
    pub operators: Vec<ComplexMatrix>,
    pauli_indices: Option<Vec<usize>>,
}

impl ErrorDecomposition {
    pub fn new(weights: Vec<f64>, operators: Vec<ComplexMatrix>) -> Result<Self> {
        if weights.len() != operators.len() || operators.is_empty() {
            return Err(Error::Dimension("weights and operators must pair up".into()));
        }
        let n = operators[0]
            .num_qubits()
            .ok_or_else(|| Error::Dimension("error operator is not a qubit operator".into()))?;
        Ok(Self { num_qubits: n, weights, operators, pauli_indices: None })
    }

    pub fn from_channel(ch: &QuantumChannel) -> Result<Self> {
        let n = ch.num_qubits;
        if let ChannelForm::PauliMixture(p) = &ch.form {
            let idx: Vec<usize> = (0..p.len()).collect();
            return Ok(Self {
                num_qubits: n,
                weights: p.clone(),
                operators: idx.iter().map(|&a| pauli::string_matrix(a, n)).collect(),
                pauli_indices: Some(idx),
            });
        }
        let d = ch.dim() as f64;
        let mut weights = Vec::new();
        let mut operators = Vec::new();
        for k in ch.kraus_operators()? {
            let kappa = trace_product(&k, &k.adjoint()).re / d;
            if kappa <= 1e-15 {
                continue;
            }
            weights.push(kappa);
            operators.push(k.scale_real(1.0 / kappa.sqrt()));
        }
        Ok(Self { num_qubits: n, weights, operators, pauli_indices: None })
    }

    /// `e_i = tr(E_i E_i†)/2ⁿ`, fixed to 1 for Pauli operators.
    pub fn e_values(&self) -> Vec<f64> {
        if self.pauli_indices.is_some() {
            return vec![1.0; self.operators.len()];
        }
        let d = (1usize << self.num_qubits) as f64;
        self.operators.iter().map(|e| trace_product(e, &e.adjoint()).re / d).collect()
    }

    /// `max_{i≠j} |tr(E_i E_j†)|`.
    pub fn orthogonality_violation(&self) -> f64 {
        if self.pauli_indices.is_some() {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (i, a) in self.operators.iter().enumerate() {
            for b in &self.operators[i + 1..] {
                worst = worst.max(trace_product(a, &b.adjoint()).norm());
            }
        }
        worst
    }
}

/// Generalized purified map `Σ p_i^m e_i^{m−1} [E_i] / P̂_m` and `P̂_m`.
///
/// The map need not be trace preserving for non-unital noise, so the Kraus form is
/// returned unchecked.
pub fn generalized_purified_channel(dec: &ErrorDecomposition, m: usize) -> Result<(QuantumChannel, f64)> {
    let viol = dec.orthogonality_violation();
    if viol >= ORTHOGONALITY_TOL {
        return Err(Error::OrthogonalityViolated(viol));
    }
    let (w, p_hat) = purification_weights(&dec.weights, &dec.e_values(), m)?;
    if dec.pauli_indices.is_some() {
        return Ok((QuantumChannel::raw(dec.num_qubits, ChannelForm::PauliMixture(w)), p_hat));
    }
    let ops: Vec<ComplexMatrix> =
        w.iter().zip(&dec.operators).filter(|(&x, _)| x > 0.0).map(|(&x, e)| e.scale_real(x.sqrt())).collect();
    Ok((QuantumChannel::from_kraus_unchecked(ops)?, p_hat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremOneReport {
    pub weights: Vec<f64>,
    pub e_values: Vec<f64>,
    pub orthogonal: bool,
    pub orthogonality_violation: f64,
    pub f01: C64,
    pub f10: C64,
    pub f_diag_ok: bool,
    /// Largest entry of `F(|i⟩⟨j|)` outside the allowed pattern.
    pub f_violation: f64,
}

impl TheoremOneReport {
    pub fn holds(&self) -> bool {
        self.orthogonal && self.f_diag_ok
    }

    /// `Re(f01³)`, the scaling of both purification expectations.
    pub fn control_factor(&self) -> f64 {
        (self.f01 * self.f01 * self.f01).re
    }
}

/// Checks the orthogonality condition on `e_channel` and the off-diagonal
/// structure of the single-qubit control noise `f_channel`.
pub fn check_theorem1(e_channel: &QuantumChannel, f_channel: &QuantumChannel) -> Result<TheoremOneReport> {
    if f_channel.num_qubits != 1 {
        return Err(Error::Dimension("control noise must be single-qubit".into()));
    }
    let dec = ErrorDecomposition::from_channel(e_channel)?;
    let viol = dec.orthogonality_violation();

    let mut f_violation: f64 = 0.0;
    let mut f01 = ZERO;
    let mut f10 = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            let img = f_channel.apply_to_operator(&ComplexMatrix::unit(2, i, j));
            for a in 0..2 {
                for b in 0..2 {
                    let allowed = if i == j { a == b } else { a == i && b == j };
                    if !allowed {
                        f_violation = f_violation.max(img[(a, b)].norm());
                    }
                }
            }
            if i == 0 && j == 1 {
                f01 = img[(0, 1)];
            }
            if i == 1 && j == 0 {
                f10 = img[(1, 0)];
            }
        }
    }
    Ok(TheoremOneReport {
        e_values: dec.e_values(),
        weights: dec.weights,
        orthogonal: viol < ORTHOGONALITY_TOL,
        orthogonality_violation: viol,
        f01,
        f10,
        f_diag_ok: f_violation <= CPTP_TOL,
        f_violation,
    })
}
