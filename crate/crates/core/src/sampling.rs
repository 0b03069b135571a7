//! Finite-shot sampling of the purification outcome law.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::engine::{JointDistribution, DENOMINATOR_FLOOR};
use crate::error::{Error, Result};

/// Multinomial counts for `shots` draws from `probs` (renormalized).
pub fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidState("negative or non-finite probability".into()));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("probabilities sum to zero".into()));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = total;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q).map_err(|e| Error::InvalidState(format!("binomial: {e}")))?.sample(rng);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    Ok(counts)
}

/// Shot estimates of the per-outcome numerators `γ·mean(s·c·[k])` and the
/// denominator `γ·mean(s·c)`, all from the same draws.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotEstimate {
    pub numerators: Vec<f64>,
    pub denominator: f64,
    pub shots: u64,
}

impl ShotEstimate {
    pub fn outcome_estimates(&self) -> Result<Vec<f64>> {
        if self.denominator.abs() < DENOMINATOR_FLOOR {
            return Err(Error::DenominatorUnderflow(self.denominator));
        }
        Ok(self.numerators.iter().map(|x| x / self.denominator).collect())
    }
}

pub fn sample_outcomes<R: Rng + ?Sized>(joint: &JointDistribution, shots: u64, rng: &mut R) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InsufficientData("need at least one shot".into()));
    }
    let counts = multinomial(&joint.probs, shots, rng)?;
    let k = joint.num_outcomes;
    let scale = joint.gamma / shots as f64;
    let mut numerators = vec![0.0; k];
    for s in 0..2 {
        for c in 0..2 {
            let w = if (s + c) % 2 == 0 { 1.0 } else { -1.0 };
            for (kk, num) in numerators.iter_mut().enumerate() {
                *num += w * counts[joint.index(s, c, kk)] as f64;
            }
        }
    }
    for v in &mut numerators {
        *v *= scale;
    }
    let denominator = numerators.iter().sum();
    Ok(ShotEstimate { numerators, denominator, shots })
}

/// `(numerator, denominator)` estimates of `⟨X⊗O⟩` and `⟨X⊗I⟩` for an observable
/// diagonal in the outcome basis with eigenvalues `o`.
pub fn shot_sample_ratio<R: Rng + ?Sized>(
    joint: &JointDistribution,
    o: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if o.len() != joint.num_outcomes {
        return Err(Error::Dimension(format!("{} eigenvalues for {} outcomes", o.len(), joint.num_outcomes)));
    }
    let est = sample_outcomes(joint, shots, rng)?;
    let num = est.numerators.iter().zip(o).map(|(x, y)| x * y).sum();
    Ok((num, est.denominator))
}

/// Exact first and second moments of the per-shot pair `(x, y) = γ·s·c·(o_k, 1)`:
/// `(μ_x, μ_y, Var x, Var y, Cov)`.
pub fn per_shot_moments(joint: &JointDistribution, o: &[f64]) -> (f64, f64, f64, f64, f64) {
    let g = joint.gamma;
    let (mut mx, mut my, mut exx, mut eyy, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..2 {
        for c in 0..2 {
            let w = if (s + c) % 2 == 0 { g } else { -g };
            for (k, &ok) in o.iter().enumerate() {
                let p = joint.probs[joint.index(s, c, k)];
                mx += p * w * ok;
                my += p * w;
                exx += p * w * w * ok * ok;
                eyy += p * w * w;
                exy += p * w * w * ok;
            }
        }
    }
    (mx, my, exx - mx * mx, eyy - my * my, exy - mx * my)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multinomial_conserves_shots() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = multinomial(&[0.2, 0.0, 0.5, 0.3], 1000, &mut rng).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(c[1], 0);
    }

    #[test]
    fn deterministic_law_has_no_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = JointDistribution::direct(&[0.0, 1.0]);
        let (num, den) = shot_sample_ratio(&j, &[3.0, -1.0], 50, &mut rng).unwrap();
        assert_eq!((num, den), (-1.0, 1.0));
    }
}
