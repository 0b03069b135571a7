//! Trial orchestration: per-trial seeds, shot sampling, confidence intervals and
//! optimal-layer selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Evaluation, Method, NoiseLocationMask, PecMode, PurificationConfig, Setup};
use crate::error::{Error, Result};
use crate::noise::{LocalNoise, NoiseModel};
use crate::sampling::sample_outcomes;
use crate::tasks::{run_feedback_loop, FeedbackOptions, TaskKind, TaskSpec};

pub use crate::sampling::{multinomial, per_shot_moments, shot_sample_ratio, ShotEstimate};

/// Golden-ratio increment used to spread trial indices before mixing.
pub const SEED_INCREMENT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i`: `mix64(master + (i+1)·SEED_INCREMENT)`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix64(master.wrapping_add((trial as u64 + 1).wrapping_mul(SEED_INCREMENT)))
}

/// ChaCha8 stream for one trial.
pub fn trial_rng(master: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, trial))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }
}

/// `mean ± 1.96·s/√T` with `s` the sample standard deviation.
pub fn confidence_interval(values: &[f64]) -> Result<Interval> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let h = Z95 * var.sqrt() / t.sqrt();
    Ok(Interval { mean, low: mean - h, high: mean + h })
}

/// Layer with the smallest mean gap; ties go to the smaller layer count.
pub fn select_optimal_layer(gaps_by_layer: &[(usize, f64)]) -> Result<usize> {
    let mut layers: Vec<usize> = gaps_by_layer.iter().map(|(l, _)| *l).collect();
    layers.sort_unstable();
    layers.dedup();
    let mut best: Option<(usize, f64)> = None;
    for l in layers {
        let gaps: Vec<f64> = gaps_by_layer.iter().filter(|(k, _)| *k == l).map(|(_, g)| *g).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if best.is_none_or(|(_, b)| mean < b) {
            best = Some((l, mean));
        }
    }
    best.map(|(l, _)| l).ok_or_else(|| Error::InsufficientData("no records to select a layer from".into()))
}

/// Default largest layer count searched for `L*`.
pub fn default_max_layers(kind: TaskKind) -> usize {
    if kind.is_multiparam() {
        3
    } else {
        5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSettings {
    pub iterations: usize,
    /// First likelihood start; defaults to the truth scaled by 1.1.
    #[serde(default)]
    pub initial_guess: Option<[f64; 3]>,
}

impl Default for FeedbackSettings {
    fn default() -> Self {
        Self { iterations: 10, initial_guess: None }
    }
}

/// A complete declarative run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub task: TaskSpec,
    pub noise: NoiseModel,
    pub mitigation: PurificationConfig,
    pub mask: NoiseLocationMask,
    /// `None` is exact mode.
    pub shots: Option<u64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Noise the cancellation assumes, when it differs from the true noise.
    pub pec_assumed_noise: Option<LocalNoise>,
    pub feedback: FeedbackSettings,
}

impl ExperimentSpec {
    pub fn new(task: TaskSpec, noise: NoiseModel, mitigation: PurificationConfig) -> Self {
        Self {
            task,
            noise,
            mitigation,
            mask: NoiseLocationMask::all_on(),
            shots: None,
            trials: 1,
            master_seed: 0,
            pec_assumed_noise: None,
            feedback: FeedbackSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.noise.validate()?;
        self.mitigation.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.shots.is_some()
            && self.mitigation.method.uses_pec()
            && self.mitigation.pec_mode == PecMode::ExactBranchSum
        {
            return Err(Error::Config(
                "shot mode samples a cancellation branch per shot; use pec_mode = monte-carlo".into(),
            ));
        }
        if let Some(n) = self.pec_assumed_noise {
            n.validate()?;
        }
        Ok(())
    }

    /// Trials that actually run: exact mode is deterministic, so one.
    pub fn effective_trials(&self) -> usize {
        if self.shots.is_some() {
            self.trials
        } else {
            1
        }
    }

    pub fn with_method(&self, method: Method, layers: usize) -> Self {
        let mut out = self.clone();
        out.mitigation = self.mitigation.with_method(method);
        out.mitigation.layers = layers;
        if method.uses_pec() {
            out.mitigation.pec_mode = if self.shots.is_some() { PecMode::MonteCarlo } else { PecMode::ExactBranchSum };
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub trial: usize,
    /// Feedback iteration (1-based); 0 for one-shot tasks.
    pub iteration: usize,
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub layers: usize,
    pub params: Vec<f64>,
    pub gap: f64,
    /// Outcome-law distance, for feedback runs.
    pub prob_gap: Option<f64>,
    pub numerators: Vec<f64>,
    pub denominator: f64,
    pub gamma: f64,
    pub seed: u64,
}

fn exact_evaluation(spec: &ExperimentSpec, joint: bool) -> Result<Evaluation> {
    let circuit = spec.task.circuit(None)?;
    let probe = spec.task.probe();
    Setup {
        circuit: &circuit,
        probe: &probe,
        noise: &spec.noise,
        config: &spec.mitigation,
        mask: &spec.mask,
        pec_assumed: spec.pec_assumed_noise,
    }
    .evaluate(joint)
}

fn feedback_records(spec: &ExperimentSpec, trial: usize) -> Result<Vec<EstimateRecord>> {
    let seed = trial_seed(spec.master_seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opts = FeedbackOptions::near_truth(&spec.task, spec.feedback.iterations, spec.shots, 0.1);
    if let Some(g) = spec.feedback.initial_guess {
        opts.initial_guess = crate::operators::FieldParams::from_slice(&g);
    }
    let steps = run_feedback_loop(&spec.task, &spec.noise, &spec.mitigation, &spec.mask, &opts, &mut rng)?;
    Ok(steps
        .into_iter()
        .map(|s| EstimateRecord {
            trial,
            iteration: s.iteration,
            method: spec.mitigation.method,
            n: spec.task.n_channels,
            m: spec.mitigation.order,
            layers: spec.mitigation.layers,
            params: s.estimate.to_array().to_vec(),
            gap: s.param_gap,
            prob_gap: Some(s.prob_gap),
            numerators: s.empirical.probs.clone(),
            denominator: s.denominator,
            gamma: s.gamma,
            seed,
        })
        .collect())
}

/// Runs every trial of `spec`; records are sorted by (trial, iteration).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<EstimateRecord>> {
    spec.validate()?;
    let trials = spec.effective_trials();
    let mut records: Vec<EstimateRecord> = if spec.task.kind == TaskKind::MultiparamFeedback {
        (0..trials)
            .into_par_iter()
            .map(|t| feedback_records(spec, t))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect()
    } else {
        let eval = exact_evaluation(spec, spec.shots.is_some())?;
        (0..trials).into_par_iter().map(|t| one_shot_record(spec, &eval, t)).collect::<Result<Vec<_>>>()?
    };
    records.sort_by_key(|r| (r.trial, r.iteration));
    Ok(records)
}

fn one_shot_record(spec: &ExperimentSpec, eval: &Evaluation, trial: usize) -> Result<EstimateRecord> {
    let seed = trial_seed(spec.master_seed, trial);
    let (estimates, numerators, denominator) = match spec.shots {
        Some(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let joint = eval.joint.as_ref().expect("joint law requested");
            let est = sample_outcomes(joint, shots, &mut rng)?;
            (est.outcome_estimates()?, est.numerators, est.denominator)
        }
        None => (eval.outcome_estimates()?, eval.numerators.clone(), eval.denominator),
    };
    let dist = spec.task.decode(&estimates)?;
    let (params, _) = spec.task.estimate(&dist)?;
    Ok(EstimateRecord {
        trial,
        iteration: 0,
        method: spec.mitigation.method,
        n: spec.task.n_channels,
        m: spec.mitigation.order,
        layers: spec.mitigation.layers,
        gap: spec.task.gap(&params),
        params,
        prob_gap: None,
        numerators,
        denominator,
        gamma: eval.gamma,
        seed,
    })
}

/// Gap per trial of the last feedback iteration (or the only record).
pub fn final_gaps(records: &[EstimateRecord]) -> Vec<f64> {
    let mut by_trial: Vec<(usize, usize, f64)> = records.iter().map(|r| (r.trial, r.iteration, r.gap)).collect();
    by_trial.sort_by_key(|&(t, i, _)| (t, i));
    let mut out: Vec<f64> = Vec::new();
    for (k, &(t, _, g)) in by_trial.iter().enumerate() {
        if by_trial.get(k + 1).is_none_or(|next| next.0 != t) {
            out.push(g);
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Outcome of a layer search for one method.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSearch {
    pub best_layers: usize,
    pub by_layer: Vec<(usize, Vec<EstimateRecord>)>,
}

impl LayerSearch {
    pub fn best(&self) -> &[EstimateRecord] {
        &self.by_layer.iter().find(|(l, _)| *l == self.best_layers).expect("best layer present").1
    }

    pub fn mean_gap(&self) -> f64 {
        mean(&final_gaps(self.best()))
    }
}

/// Runs `method` for `L = 1..=max_layers` (just once for non-layered methods) and
/// picks `L*` by mean gap.
pub fn run_layer_search(spec: &ExperimentSpec, method: Method, max_layers: usize) -> Result<LayerSearch> {
    let layers: Vec<usize> = if method.is_channel_purification() { (1..=max_layers.max(1)).collect() } else { vec![1] };
    let by_layer = layers
        .par_iter()
        .map(|&l| Ok((l, run_experiment(&spec.with_method(method, l))?)))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<(usize, f64)> =
        by_layer.iter().flat_map(|(l, recs)| final_gaps(recs).into_iter().map(move |g| (*l, g))).collect();
    let best_layers = select_optimal_layer(&gaps)?;
    Ok(LayerSearch { best_layers, by_layer })
}
