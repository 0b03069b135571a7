//! Quasi-probability decompositions of inverse noise maps and the estimators built
//! on them.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{NoiseFamily, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, ONE};
use crate::pauli::Pauli;

/// Upper bound on the number of branches enumerated in exact mode.
pub const BRANCH_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PecOp {
    Identity,
    X,
    Y,
    Z,
    /// Prepare `|0⟩` regardless of input. Treated as noiseless.
    ResetZero,
}

impl PecOp {
    /// Column-stacking superoperator of the operation.
    pub fn superoperator(self) -> ComplexMatrix {
        let pauli_sup = |p: Pauli| {
            let m = p.matrix();
            m.conj().kron(&m)
        };
        match self {
            PecOp::Identity => ComplexMatrix::identity(4),
            PecOp::X => pauli_sup(Pauli::X),
            PecOp::Y => pauli_sup(Pauli::Y),
            PecOp::Z => pauli_sup(Pauli::Z),
            PecOp::ResetZero => {
                // vec index i + 2j; maps ρ00 and ρ11 to the (0,0) slot.
                let mut s = ComplexMatrix::zeros(4, 4);
                s[(0, 0)] = ONE;
                s[(0, 3)] = ONE;
                s
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PecDecomposition {
    pub family: NoiseFamily,
    pub rate: f64,
    pub terms: Vec<(f64, PecOp)>,
    pub gamma: f64,
}

impl PecDecomposition {
    fn from_terms(family: NoiseFamily, rate: f64, terms: Vec<(f64, PecOp)>) -> Self {
        let gamma = terms.iter().map(|(a, _)| a.abs()).sum();
        Self { family, rate, terms, gamma }
    }

    /// `Σ α_i G_i`, the inverse of the noise map.
    pub fn quasi_superop(&self) -> ComplexMatrix {
        self.weighted_superop(|a| a)
    }

    /// `Σ (|α_i|/γ) G_i`, the channel actually sampled.
    pub fn mixture_superop(&self) -> ComplexMatrix {
        let g = self.gamma;
        self.weighted_superop(|a| a.abs() / g)
    }

    /// `Σ (α_i/γ) G_i`, the sign-weighted sampling map.
    pub fn signed_superop(&self) -> ComplexMatrix {
        let g = self.gamma;
        self.weighted_superop(|a| a / g)
    }

    fn weighted_superop(&self, w: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(4, 4);
        for (a, op) in &self.terms {
            s = &s + &op.superoperator().scale(c(w(*a), 0.0));
        }
        s
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.terms.iter().map(|(a, _)| a.abs() / self.gamma).collect()
    }

    pub fn sign(&self, i: usize) -> f64 {
        if self.terms[i].0 < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Optimal decomposition of the identity into `E∘G_i` for the named family.
pub fn decomposition_for(family: NoiseFamily, p: f64) -> Result<PecDecomposition> {
    let range_err = || Error::RateOutOfRange { what: format!("{family} quasi-probability inverse"), rate: p };
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(range_err());
    }
    let terms = match family {
        NoiseFamily::Depolarizing => {
            if p >= 1.0 - 1e-9 {
                return Err(range_err());
            }
            let q = p / (4.0 * (1.0 - p));
            vec![(1.0 + 3.0 * q, PecOp::Identity), (-q, PecOp::X), (-q, PecOp::Y), (-q, PecOp::Z)]
        }
        NoiseFamily::Dephasing => {
            if p >= 0.5 - 1e-9 {
                return Err(range_err());
            }
            let d = 1.0 - 2.0 * p;
            vec![((1.0 - p) / d, PecOp::Identity), (-p / d, PecOp::Z)]
        }
        NoiseFamily::AmplitudeDamping => {
            if p >= 1.0 - 1e-9 {
                return Err(range_err());
            }
            let s = (1.0 - p).sqrt();
            let d = 2.0 * (1.0 - p);
            vec![((1.0 + s) / d, PecOp::Identity), ((1.0 - s) / d, PecOp::Z), (-p / (1.0 - p), PecOp::ResetZero)]
        }
    };
    Ok(PecDecomposition::from_terms(family, p, terms))
}

/// Closed-form γ of the optimal decomposition.
pub fn gamma_closed_form(family: NoiseFamily, p: f64) -> f64 {
    match family {
        NoiseFamily::Depolarizing => (1.0 + p / 2.0) / (1.0 - p),
        NoiseFamily::Dephasing => 1.0 / (1.0 - 2.0 * p),
        NoiseFamily::AmplitudeDamping => (1.0 + p) / (1.0 - p),
    }
}

/// Max-abs deviation of `Σ α_i (noise ∘ G_i)` from the identity superoperator.
pub fn validate_inverse(dec: &PecDecomposition, noise: &QuantumChannel) -> Result<f64> {
    if noise.num_qubits() != 1 {
        return Err(Error::Dimension("decompositions act on one qubit".into()));
    }
    let total = noise.superoperator() * &dec.quasi_superop();
    Ok(total.max_abs_diff(&ComplexMatrix::identity(4)))
}

pub fn branch_count(sites: &[PecDecomposition]) -> u128 {
    sites.iter().fold(1u128, |acc, s| acc.saturating_mul(s.terms.len() as u128))
}

pub fn gamma_total(sites: &[PecDecomposition]) -> f64 {
    sites.iter().map(|s| s.gamma).product()
}

/// `Σ_branches α_branch · f(branch)` over the full lattice, and `Π γ_k`.
pub fn exact_mitigated_expectation<F>(sites: &[PecDecomposition], mut eval: F) -> Result<(f64, f64)>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    let branches = branch_count(sites);
    if branches > BRANCH_CAP as u128 {
        return Err(Error::BranchCapExceeded { branches, cap: BRANCH_CAP });
    }
    let mut idx = vec![0usize; sites.len()];
    let mut total = 0.0;
    for _ in 0..branches {
        let alpha: f64 = idx.iter().zip(sites).map(|(&i, s)| s.terms[i].0).product();
        if alpha != 0.0 {
            total += alpha * eval(&idx)?;
        }
        // Mixed-radix increment, last site fastest.
        for k in (0..sites.len()).rev() {
            idx[k] += 1;
            if idx[k] < sites[k].terms.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok((total, gamma_total(sites)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSample {
    pub indices: Vec<usize>,
    pub sign: f64,
    pub weight: f64,
}

/// Draws `count` branches, term `i` of each site with probability `|α_i|/γ`.
pub fn sample_branches<R: Rng + ?Sized>(
    sites: &[PecDecomposition],
    count: usize,
    rng: &mut R,
) -> Result<Vec<BranchSample>> {
    let dists = sites
        .iter()
        .map(|s| {
            WeightedIndex::new(s.probabilities()).map_err(|e| Error::InvalidChannel(format!("bad branch weights: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let weight = gamma_total(sites);
    Ok((0..count)
        .map(|_| {
            let indices: Vec<usize> = dists.iter().map(|d| d.sample(rng)).collect();
            let sign = indices.iter().zip(sites).map(|(&i, s)| s.sign(i)).product();
            BranchSample { indices, sign, weight }
        })
        .collect())
}

/// Monte-Carlo estimate `mean(sign·γ·f(branch))` with its standard error. Each
/// distinct branch is evaluated once.
pub fn monte_carlo_mitigated_expectation<R, F>(
    sites: &[PecDecomposition],
    samples: usize,
    rng: &mut R,
    mut eval: F,
) -> Result<(f64, f64)>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> Result<f64>,
{
    if samples == 0 {
        return Err(Error::InsufficientData("need at least one branch sample".into()));
    }
    let draws = sample_branches(sites, samples, rng)?;
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut values = Vec::with_capacity(samples);
    for b in &draws {
        let v = match cache.get(&b.indices) {
            Some(&v) => v,
            None => {
                let v = eval(&b.indices)?;
                cache.insert(b.indices.clone(), v);
                v
            }
        };
        values.push(b.sign * b.weight * v);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}
