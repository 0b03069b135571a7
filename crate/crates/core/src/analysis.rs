//! Closed-form error analysis: bias bounds, ratio variance, sampling cost,
//! control-noise cost comparison and bias/variance scaling scans.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{check_theorem1, make_channel, NoiseFamily};
use crate::circuit::block_sizes;
use crate::engine::{Method, DENOMINATOR_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::pec::{decomposition_for, gamma_closed_form};

/// `2(1 − p)‖O‖_∞` for a purified noise-free weight `p`.
pub fn bias_bound(p_ideal_vcp_m: f64, o_norm: f64) -> f64 {
    2.0 * (1.0 - p_ideal_vcp_m) * o_norm
}

/// Noise-free weight after `m`-th order purification, `p^m / P̂_m`.
pub fn purified_ideal_weight(p_ideal: f64, p_hat_m: f64, m: usize) -> f64 {
    p_ideal.powi(m as i32) / p_hat_m
}

/// Delta-method variance of `x/y`.
pub fn ratio_variance(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov_xy: f64) -> Result<f64> {
    if mu_y.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DenominatorUnderflow(mu_y));
    }
    let r = mu_x / mu_y;
    // Expanded so that μ_x = 0 is allowed.
    Ok(var_x / (mu_y * mu_y) - 2.0 * r * cov_xy / (mu_y * mu_y) + r * r * var_y / (mu_y * mu_y))
}

/// Shots needed for standard deviation `ε`: `γ²/(ε² η²)`.
pub fn sampling_cost(gamma: f64, eta_m: f64, epsilon: f64) -> f64 {
    gamma * gamma / (epsilon * epsilon * eta_m * eta_m)
}

/// `Re(f01³)·P̂_m`.
pub fn eta_m(f01: C64, p_hat_m: f64) -> f64 {
    (f01 * f01 * f01).re * p_hat_m
}

/// Upper bound on the per-shot PVCP ratio variance (times `ν`) for `m = 2`:
/// `(γ²‖O²‖ + (γ²η² + 2η² + 3)‖O‖²)/η²`.
pub fn variance_bound(gamma: f64, eta: f64, o_norm: f64) -> f64 {
    let g2 = gamma * gamma;
    let e2 = eta * eta;
    (g2 * o_norm * o_norm + (g2 * e2 + 2.0 * e2 + 3.0) * o_norm * o_norm) / e2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    IgnoreCheaper,
    Equal,
    PecCheaper,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::IgnoreCheaper => "ignore-cheaper",
            Verdict::Equal => "equal",
            Verdict::PecCheaper => "pec-cheaper",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shot overhead of leaving control noise alone versus cancelling it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub family: NoiseFamily,
    pub p: f64,
    /// `Re(f01)^−2`.
    pub ignore_cost: f64,
    /// `γ²`.
    pub pec_cost: f64,
    pub verdict: Verdict,
}

const VERDICT_TOL: f64 = 1e-12;

/// Evaluates both costs: `f01` from the channel itself and `γ` from the
/// quasi-probability decomposition.
pub fn cost_comparison(family: NoiseFamily, p: f64) -> Result<CostReport> {
    let ch = make_channel(family, p, 1)?;
    let report = check_theorem1(&make_channel(family, 0.0, 1)?, &ch)?;
    let re = report.f01.re;
    if re.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DenominatorUnderflow(re));
    }
    let ignore_cost = 1.0 / (re * re);
    let gamma = decomposition_for(family, p)?.gamma;
    let pec_cost = gamma * gamma;
    let verdict = if (ignore_cost - pec_cost).abs() <= VERDICT_TOL * pec_cost.max(1.0) {
        Verdict::Equal
    } else if ignore_cost < pec_cost {
        Verdict::IgnoreCheaper
    } else {
        Verdict::PecCheaper
    };
    Ok(CostReport { family, p, ignore_cost, pec_cost, verdict })
}

/// Rates and shot budget of the single-qubit scaling model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingRates {
    /// Depolarizing rate of each encoding gate.
    pub gate: f64,
    /// Depolarizing rate of each controlled-permutation gate.
    pub cswap: f64,
    pub shots: f64,
}

impl Default for ScalingRates {
    fn default() -> Self {
        Self { gate: 0.001, cswap: 0.05, shots: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub method: Method,
    pub m: usize,
    pub layers: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub bias_sq: f64,
    pub variance: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Reference `1/(ν N)`.
    pub sql: f64,
}

/// `Σ p_i^m` of a single-qubit channel whose error weight `1 − p` is split evenly
/// over X, Y and Z.
fn depolarized_purity(p: f64, m: usize) -> f64 {
    let w = (1.0 - p) / 3.0;
    p.powi(m as i32) + 3.0 * w.powi(m as i32)
}

/// One point of the analytic model for an `n = 1` probe, `λ̂ = Ô/N`, `‖O‖ = 1`.
///
/// Each layer purifies its encoding gates together with the target noise of the
/// first permutation; the target noise of the second permutation is cancelled
/// (PVCP) or left in place (VCP). Control noise only rescales `η`.
pub fn scaling_point(method: Method, m: usize, layers: usize, n: usize, rates: &ScalingRates) -> Result<ScalingPoint> {
    if n == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    let (p, pc) = (rates.gate, rates.cswap);
    let nf = n as f64;
    let sql = 1.0 / (rates.shots * nf);
    let (keep, gamma, eta) = match method {
        Method::None => ((1.0 - p).powi(n as i32), 1.0, 1.0),
        Method::Vcp | Method::Pvcp => {
            if m < 2 {
                return Err(Error::InvalidOrder { min: 2, got: m });
            }
            if layers == 0 {
                return Err(Error::InvalidOrder { min: 1, got: 0 });
            }
            let mut keep = 1.0;
            let mut p_hat = 1.0;
            for size in block_sizes(n, layers) {
                let p_layer = (1.0 - pc) * (1.0 - p).powi(size as i32);
                let ph = depolarized_purity(p_layer, m);
                keep *= purified_ideal_weight(p_layer, ph, m);
                p_hat *= ph;
                if method == Method::Vcp {
                    keep *= 1.0 - pc;
                }
            }
            // Preparation of the control plus two permutation gates per layer.
            let f = (1.0 - p) * (1.0 - pc).powi(2 * layers as i32);
            let gamma = if method == Method::Pvcp {
                gamma_closed_form(NoiseFamily::Depolarizing, pc).powi(layers as i32)
            } else {
                1.0
            };
            (keep, gamma, f * p_hat)
        }
        Method::Vsp | Method::Pvsp => {
            return Err(Error::Unsupported(format!("scaling model covers none, vcp and pvcp, not {method}")))
        }
    };
    let bias = bias_bound(keep, 1.0) / nf;
    let variance = if method == Method::None {
        1.0 / (rates.shots * nf * nf)
    } else {
        variance_bound(gamma, eta, 1.0) / (rates.shots * nf * nf)
    };
    Ok(ScalingPoint { method, m, layers, n, bias_sq: bias * bias, variance, gamma, eta, sql })
}

/// Scan over the grid `methods × ms × layers × n_grid`; `none` is emitted once
/// per `N`. Rows are ordered by method, m, L, N.
pub fn scaling_scan(
    rates: &ScalingRates,
    methods: &[Method],
    ms: &[usize],
    layers: &[usize],
    n_grid: &[usize],
) -> Result<Vec<ScalingPoint>> {
    let mut jobs = Vec::new();
    for &method in methods {
        if method == Method::None {
            jobs.extend(n_grid.iter().map(|&n| (method, 1, 1, n)));
            continue;
        }
        for &m in ms {
            for &l in layers {
                jobs.extend(n_grid.iter().map(|&n| (method, m, l, n)));
            }
        }
    }
    jobs.par_iter().map(|&(method, m, l, n)| scaling_point(method, m, l, n, rates)).collect()
}

/// Logarithmic grid of `count` integers from `lo` to `hi`, deduplicated.
pub fn log_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> =
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    out.dedup();
    out
}
