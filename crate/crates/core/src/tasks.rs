//! Estimation tasks: Zeeman phase estimation and three-parameter field estimation
//! with Bell readout, plus the adaptive feedback loop.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateClass};
use crate::engine::{NoiseLocationMask, PurificationConfig, Setup};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};
use crate::noise::NoiseModel;
use crate::operators::{
    bell_basis, cnot, encoding_unitary, field_unitary, hadamard, rotation_r, y_readout, zeeman_unitary, FieldParams,
    BELL_INDEX_OF_OUTCOME,
};
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::sampling::sample_outcomes;

/// Floor inside the log of the likelihood.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Random restarts of the likelihood search, on top of the start at `init`.
pub const MLE_RESTARTS: usize = 8;
/// Half-width of the restart box, relative to `init`.
pub const MLE_BOX: f64 = 0.2;
/// Below this `1 − P₁` the angles cannot be read off.
pub const ANGLE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    ZeemanSequential,
    ZeemanParallel,
    MultiparamSequential,
    MultiparamFeedback,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::ZeemanSequential,
        TaskKind::ZeemanParallel,
        TaskKind::MultiparamSequential,
        TaskKind::MultiparamFeedback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::ZeemanSequential => "zeeman-sequential",
            TaskKind::ZeemanParallel => "zeeman-parallel",
            TaskKind::MultiparamSequential => "multiparam-sequential",
            TaskKind::MultiparamFeedback => "multiparam-feedback",
        }
    }

    pub fn is_multiparam(self) -> bool {
        matches!(self, TaskKind::MultiparamSequential | TaskKind::MultiparamFeedback)
    }

    pub fn num_params(self) -> usize {
        if self.is_multiparam() {
            3
        } else {
            1
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measurement {
    GhzY,
    Bell,
    RotatedBell,
}

impl Measurement {
    pub fn num_outcomes(self) -> usize {
        match self {
            Measurement::GhzY => 2,
            Measurement::Bell | Measurement::RotatedBell => 4,
        }
    }
}

/// Probabilities over measurement outcomes. Bell outcomes are in Bell-index
/// order; GHZ-y outcomes are `[P_y, 1 − P_y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Clipped to `[0, 1]` and renormalized, falling back to uniform if nothing
    /// survives the clip.
    pub fn clamped(&self) -> Self {
        let clipped: Vec<f64> = self.probs.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 {
            let k = self.probs.len() as f64;
            return Self::new(vec![1.0 / k; self.probs.len()]);
        }
        Self::new(clipped.into_iter().map(|p| p / total).collect())
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|&p| p >= -tol) && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Closed-form Bell-outcome law of `(U_λ)^N` on `|φ₁⟩`, in Bell-index order.
pub fn multiparam_probabilities(p: FieldParams, t: f64, n: usize) -> OutcomeDistribution {
    let a = p.b * t * n as f64;
    let s2 = a.sin().powi(2);
    let (st2, ct2) = (p.theta.sin().powi(2), p.theta.cos().powi(2));
    let (sp2, cp2) = (p.phi.sin().powi(2), p.phi.cos().powi(2));
    OutcomeDistribution::new(vec![a.cos().powi(2), s2 * ct2, s2 * st2 * cp2, s2 * st2 * sp2])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    pub params: FieldParams,
    /// False when `1 − P₁` is too small to resolve θ and φ; they are then zero.
    pub angles_defined: bool,
}

/// Principal-branch inverse of [`multiparam_probabilities`].
pub fn invert_multiparam(dist: &OutcomeDistribution, t: f64, n: usize) -> Result<Inversion> {
    if dist.len() != 4 {
        return Err(Error::Dimension(format!("{} outcomes, need 4", dist.len())));
    }
    if t <= 0.0 || n == 0 {
        return Err(Error::Config("need t > 0 and N ≥ 1".into()));
    }
    let p = |i: usize| dist.probs[i].clamp(0.0, 1.0);
    let b = p(0).sqrt().acos() / (t * n as f64);
    let s = 1.0 - p(0);
    if s < ANGLE_FLOOR {
        return Ok(Inversion { params: FieldParams::new(b, 0.0, 0.0), angles_defined: false });
    }
    let theta = (p(1) / s).clamp(0.0, 1.0).sqrt().acos();
    let phi = p(3).sqrt().atan2(p(2).sqrt());
    Ok(Inversion { params: FieldParams::new(b, theta, phi), angles_defined: true })
}

/// `arcsin(1 − 2 P_y)/count`, with the argument clamped.
pub fn zeeman_estimator(p_y: f64, count: usize) -> f64 {
    (1.0 - 2.0 * p_y).clamp(-1.0, 1.0).asin() / count as f64
}

/// `U^k` by repeated squaring.
fn matrix_power(u: &ComplexMatrix, mut k: usize) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(u.rows());
    let mut base = u.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Noiseless outcome law `|⟨φ_k|(R·(V U_λ)^N ⊗ I)|φ₁⟩|²` in Bell-index order,
/// with `V = U_c†` for a control estimate `c` and `R` only for the rotated readout.
pub fn controlled_probabilities(
    p: FieldParams,
    control: Option<FieldParams>,
    t: f64,
    n: usize,
    rotated: bool,
) -> OutcomeDistribution {
    let mut step = field_unitary(p, t);
    if let Some(c) = control {
        step = &field_unitary(c, t).adjoint() * &step;
    }
    let mut w = matrix_power(&step, n);
    if rotated {
        w = &rotation_r() * &w;
    }
    // (M ⊗ I)|φ₁⟩ has amplitude M_ij/√2 on |ij⟩.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v: Vec<C64> = (0..4).map(|idx| w[(idx >> 1, idx & 1)] * s).collect();
    let probs: Vec<f64> =
        bell_basis().iter().map(|phi| phi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()).collect();
    // Renormalize away the rounding drift of the power so the likelihood stays
    // resolvable near its minimum.
    let total: f64 = probs.iter().sum();
    OutcomeDistribution::new(probs.into_iter().map(|p| p / total).collect())
}

/// One estimation task: what is encoded, how often, and how it is read out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// `λ` for Zeeman tasks, `(B, θ, φ)` otherwise.
    pub params: Vec<f64>,
    #[serde(rename = "N")]
    pub n_channels: usize,
    pub t: f64,
    pub measurement: Measurement,
}

impl TaskSpec {
    pub fn zeeman_sequential(lambda: f64, n: usize) -> Self {
        Self {
            kind: TaskKind::ZeemanSequential,
            params: vec![lambda],
            n_channels: n,
            t: 1.0,
            measurement: Measurement::GhzY,
        }
    }

    pub fn zeeman_parallel(lambda: f64, n: usize) -> Self {
        Self { kind: TaskKind::ZeemanParallel, ..Self::zeeman_sequential(lambda, n) }
    }

    pub fn multiparam(p: FieldParams, t: f64, n: usize) -> Self {
        Self {
            kind: TaskKind::MultiparamSequential,
            params: p.to_array().to_vec(),
            n_channels: n,
            t,
            measurement: Measurement::Bell,
        }
    }

    pub fn feedback(p: FieldParams, t: f64, n: usize) -> Self {
        Self { kind: TaskKind::MultiparamFeedback, measurement: Measurement::RotatedBell, ..Self::multiparam(p, t, n) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Config(format!("t must be positive, got {}", self.t)));
        }
        if self.params.len() != self.kind.num_params() {
            return Err(Error::Config(format!(
                "{} takes {} parameters, got {}",
                self.kind,
                self.kind.num_params(),
                self.params.len()
            )));
        }
        if self.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        let ok = match self.kind {
            TaskKind::ZeemanSequential | TaskKind::ZeemanParallel => self.measurement == Measurement::GhzY,
            TaskKind::MultiparamSequential => self.measurement == Measurement::Bell,
            TaskKind::MultiparamFeedback => self.measurement != Measurement::GhzY,
        };
        if !ok {
            return Err(Error::Config(format!("measurement {:?} does not fit task {}", self.measurement, self.kind)));
        }
        Ok(())
    }

    pub fn field(&self) -> FieldParams {
        FieldParams::from_slice(&self.params)
    }

    pub fn num_qubits(&self) -> usize {
        match self.kind {
            TaskKind::ZeemanSequential => 1,
            TaskKind::ZeemanParallel => self.n_channels,
            TaskKind::MultiparamSequential | TaskKind::MultiparamFeedback => 2,
        }
    }

    pub fn probe(&self) -> DensityMatrix {
        DensityMatrix::zero_state(self.num_qubits())
    }

    /// The task circuit. `control` adds `V = U_c†` after every encoding and is
    /// only meaningful for the feedback task.
    pub fn circuit(&self, control: Option<FieldParams>) -> Result<Circuit> {
        self.validate()?;
        let n = self.num_qubits();
        let mut c = Circuit::new(n);
        match self.kind {
            TaskKind::ZeemanSequential => {
                let lambda = self.params[0];
                c.prep.push(Gate::single(hadamard(), 0)?);
                for _ in 0..self.n_channels {
                    c.steps.push(vec![Gate::single(zeeman_unitary(lambda, self.t), 0)?]);
                }
                c.readout.push(Gate::single(y_readout(), 0)?);
            }
            TaskKind::ZeemanParallel => {
                let lambda = self.params[0];
                c.prep.push(Gate::single(hadamard(), 0)?);
                for q in 0..n - 1 {
                    c.prep.push(Gate::two(cnot(), q, q + 1)?);
                }
                let u = zeeman_unitary(lambda, self.t);
                c.steps.push((0..n).map(|q| Gate::single(u.clone(), q)).collect::<Result<_>>()?);
                for q in (0..n - 1).rev() {
                    c.readout.push(Gate::two(cnot(), q, q + 1)?);
                }
                c.readout.push(Gate::single(y_readout(), 0)?);
            }
            TaskKind::MultiparamSequential | TaskKind::MultiparamFeedback => {
                let u = encoding_unitary(self.field(), self.t);
                // The control only touches the first qubit.
                let v = control.map(|p| field_unitary(p, self.t).adjoint());
                c.prep.push(Gate::single(hadamard(), 0)?);
                c.prep.push(Gate::two(cnot(), 0, 1)?);
                for _ in 0..self.n_channels {
                    let mut step = vec![Gate::new(u.clone(), vec![0, 1], GateClass::Two)?];
                    if let Some(v) = &v {
                        step.push(Gate::single(v.clone(), 0)?);
                    }
                    c.steps.push(step);
                }
                if self.measurement == Measurement::RotatedBell {
                    c.readout.push(Gate::single(rotation_r(), 0)?);
                }
                c.readout.push(Gate::two(cnot(), 0, 1)?);
                c.readout.push(Gate::single(hadamard(), 0)?);
            }
        }
        Ok(c)
    }

    /// Maps per-computational-outcome estimates to the task's outcome law.
    pub fn decode(&self, outcome_probs: &[f64]) -> Result<OutcomeDistribution> {
        let expected = 1usize << self.num_qubits();
        if outcome_probs.len() != expected {
            return Err(Error::Dimension(format!(
                "{} outcome values for {} qubits",
                outcome_probs.len(),
                self.num_qubits()
            )));
        }
        Ok(match self.measurement {
            Measurement::GhzY => {
                let p = outcome_probs[0];
                OutcomeDistribution::new(vec![p, 1.0 - p])
            }
            Measurement::Bell | Measurement::RotatedBell => {
                let mut probs = vec![0.0; 4];
                for (k, &q) in outcome_probs.iter().enumerate() {
                    probs[BELL_INDEX_OF_OUTCOME[k]] = q;
                }
                OutcomeDistribution::new(probs)
            }
        })
    }

    /// Direct (non-adaptive) estimate from an outcome law.
    pub fn estimate(&self, dist: &OutcomeDistribution) -> Result<(Vec<f64>, bool)> {
        match self.kind {
            TaskKind::ZeemanSequential | TaskKind::ZeemanParallel => {
                let lambda = zeeman_estimator(dist.probs[0], self.n_channels) / self.t;
                Ok((vec![lambda], true))
            }
            TaskKind::MultiparamSequential => {
                let inv = invert_multiparam(dist, self.t, self.n_channels)?;
                Ok((inv.params.to_array().to_vec(), inv.angles_defined))
            }
            TaskKind::MultiparamFeedback => {
                Err(Error::Config("the feedback task is estimated by likelihood fitting".into()))
            }
        }
    }

    /// ℓ₁ distance from the true parameters.
    pub fn gap(&self, estimate: &[f64]) -> f64 {
        self.params.iter().zip(estimate).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Noiseless outcome law for the feedback model.
    pub fn model_probabilities(&self, p: FieldParams, control: Option<FieldParams>) -> OutcomeDistribution {
        controlled_probabilities(p, control, self.t, self.n_channels, self.measurement == Measurement::RotatedBell)
    }
}

/// Cross-entropy `−Σ P̂ log max(Q, floor)`.
pub fn cross_entropy(empirical: &OutcomeDistribution, model: &OutcomeDistribution) -> f64 {
    -empirical
        .probs
        .iter()
        .zip(&model.probs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * q.max(PROBABILITY_FLOOR).ln())
        .sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleFit {
    pub params: Vec<f64>,
    /// `−ν Σ P̂ log Q` at `params`.
    pub loss: f64,
    pub init_loss: f64,
    /// False when no start improved on `init`; `params` is then `init`.
    pub improved: bool,
}

/// Generalized relative entropy `Σ [P̂ log(P̂/Q) − P̂ + Q]`, summed as nonnegative
/// terms so it stays accurate right down to the minimum.
pub fn relative_entropy(empirical: &OutcomeDistribution, model: &OutcomeDistribution) -> f64 {
    empirical
        .probs
        .iter()
        .zip(&model.probs)
        .map(|(&p, &q)| {
            let q = q.max(PROBABILITY_FLOOR);
            if p <= 0.0 {
                return q;
            }
            let u = (p - q) / q;
            // (1+u)·ln(1+u) − u
            let phi = if u.abs() < 1e-4 { u * u * (0.5 - u / 6.0 + u * u / 12.0) } else { (1.0 + u) * u.ln_1p() - u };
            q * phi
        })
        .sum()
}

/// Minimizes the negative log-likelihood from `init` and from random starts in a
/// box of relative half-width [`MLE_BOX`] around it.
pub fn mle_fit<F, R>(
    empirical: &OutcomeDistribution,
    mut model: F,
    shots: f64,
    init: &[f64],
    rng: &mut R,
) -> Result<MleFit>
where
    F: FnMut(&[f64]) -> OutcomeDistribution,
    R: Rng + ?Sized,
{
    if init.is_empty() {
        return Err(Error::Config("empty initial point".into()));
    }
    if shots.is_nan() || shots <= 0.0 {
        return Err(Error::Config("shot weight must be positive".into()));
    }
    // Same minimizer as the cross-entropy, but resolvable far closer to it.
    let mut loss = |x: &[f64]| relative_entropy(empirical, &model(x));
    let init_loss = loss(init);
    let offset = cross_entropy(empirical, empirical);

    let mut starts = vec![init.to_vec()];
    for _ in 0..MLE_RESTARTS {
        starts.push(
            init.iter()
                .map(|&x| {
                    let half = MLE_BOX * x.abs().max(1e-3);
                    x + rng.random_range(-half..=half)
                })
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in &starts {
        let step: Vec<f64> = x0.iter().map(|x| 0.05 * x.abs().max(1e-2)).collect();
        let m = nelder_mead(&mut loss, x0, &step, SimplexOptions::default());
        if best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (x, v) = best.expect("at least one start");
    if v < init_loss {
        Ok(MleFit { params: x, loss: shots * (v + offset), init_loss: shots * (init_loss + offset), improved: true })
    } else {
        Ok(MleFit {
            params: init.to_vec(),
            loss: shots * (init_loss + offset),
            init_loss: shots * (init_loss + offset),
            improved: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackOptions {
    pub iterations: usize,
    /// `None` evaluates the exact mitigated law.
    pub shots: Option<u64>,
    /// Starting point of the first likelihood search.
    pub initial_guess: FieldParams,
}

impl FeedbackOptions {
    /// Starts the search at the truth scaled by `1 + offset`.
    pub fn near_truth(spec: &TaskSpec, iterations: usize, shots: Option<u64>, offset: f64) -> Self {
        let p = spec.field();
        Self {
            iterations,
            shots,
            initial_guess: FieldParams::new(p.b * (1.0 + offset), p.theta * (1.0 + offset), p.phi * (1.0 + offset)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackStep {
    /// 1-based.
    pub iteration: usize,
    /// Estimate that set `V`; `None` means `V = I`.
    pub control: Option<FieldParams>,
    /// Mitigated outcome law `P̂_V` (clipped and renormalized).
    pub empirical: OutcomeDistribution,
    /// Noiseless law `P_V` at the true parameters.
    pub ideal: OutcomeDistribution,
    pub estimate: FieldParams,
    /// `‖P̂_V − P_V‖₁`.
    pub prob_gap: f64,
    /// `‖λ − λ̂‖₁`.
    pub param_gap: f64,
    pub mle_improved: bool,
    pub gamma: f64,
    pub denominator: f64,
}

/// Runs the adaptive loop: measure with `V = U_λ̂†`, fit, update.
pub fn run_feedback_loop<R: Rng + ?Sized>(
    spec: &TaskSpec,
    noise: &NoiseModel,
    mitigation: &PurificationConfig,
    mask: &NoiseLocationMask,
    opts: &FeedbackOptions,
    rng: &mut R,
) -> Result<Vec<FeedbackStep>> {
    if spec.kind != TaskKind::MultiparamFeedback {
        return Err(Error::Config(format!("feedback loop needs multiparam-feedback, got {}", spec.kind)));
    }
    spec.validate()?;
    let truth = spec.field();
    let probe = spec.probe();
    let mut control: Option<FieldParams> = None;
    let mut guess = opts.initial_guess;
    let mut out = Vec::with_capacity(opts.iterations);
    for iteration in 1..=opts.iterations {
        let circuit = spec.circuit(control)?;
        let setup = Setup { circuit: &circuit, probe: &probe, noise, config: mitigation, mask, pec_assumed: None };
        let eval = setup.evaluate(opts.shots.is_some())?;
        let (estimates, weight, denominator) = match opts.shots {
            Some(shots) => {
                let joint = eval.joint.as_ref().expect("joint law requested");
                let est = sample_outcomes(joint, shots, rng)?;
                (est.outcome_estimates()?, shots as f64, est.denominator)
            }
            None => (eval.outcome_estimates()?, 1.0, eval.denominator),
        };
        let empirical = spec.decode(&estimates)?.clamped();
        let ideal = spec.model_probabilities(truth, control);
        let fit = mle_fit(
            &empirical,
            |x| spec.model_probabilities(FieldParams::from_slice(x), control),
            weight,
            &guess.to_array(),
            rng,
        )?;
        let estimate = FieldParams::from_slice(&fit.params);
        out.push(FeedbackStep {
            iteration,
            control,
            prob_gap: empirical.l1_distance(&ideal),
            param_gap: truth.l1_distance(&estimate),
            empirical,
            ideal,
            estimate,
            mle_improved: fit.improved,
            gamma: eval.gamma,
            denominator,
        });
        control = Some(estimate);
        guess = estimate;
    }
    Ok(out)
}
