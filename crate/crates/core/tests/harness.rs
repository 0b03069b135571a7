mod common;

use common::*;
use rand_distr::{Distribution, Normal};
use vpurify_core::channels::NoiseFamily;
use vpurify_core::engine::{JointDistribution, Method, NoiseLocationMask, PecMode, PurificationConfig, Setup};
use vpurify_core::harness::*;
use vpurify_core::noise::NoiseModel;
use vpurify_core::operators::FieldParams;
use vpurify_core::tasks::TaskSpec;

fn vcp_joint() -> JointDistribution {
    let spec = TaskSpec::zeeman_sequential(0.02, 10);
    let circ = spec.circuit(None).unwrap();
    let probe = spec.probe();
    let noise = NoiseModel::uniform(NoiseFamily::Depolarizing, 0.01, 0.01, 0.05);
    let cfg = PurificationConfig::pvcp(2, 1, PecMode::MonteCarlo);
    let mask = NoiseLocationMask::all_on();
    Setup { circuit: &circ, probe: &probe, noise: &noise, config: &cfg, mask: &mask, pec_assumed: None }
        .evaluate(true)
        .unwrap()
        .joint
        .unwrap()
}

#[test]
fn shots_converge_to_exact_values() {
    let joint = vcp_joint();
    let o = [1.0, -1.0];
    let (mx, my, vx, vy, _) = per_shot_moments(&joint, &o);
    let nu = 1_000_000u64;
    let (x, y) = shot_sample_ratio(&joint, &o, nu, &mut rng(3)).unwrap();
    assert!((x - mx).abs() < 5.0 * (vx / nu as f64).sqrt());
    assert!((y - my).abs() < 5.0 * (vy / nu as f64).sqrt());
}

#[test]
fn empirical_covariance_matches_moments() {
    let joint = vcp_joint();
    let o = [1.0, -1.0];
    let (_, _, vx, vy, cxy) = per_shot_moments(&joint, &o);
    assert!(cxy.abs() > 1e-3);
    let nu = 2_000u64;
    let reps = 4000;
    let mut r = rng(4);
    let pairs: Vec<(f64, f64)> = (0..reps).map(|_| shot_sample_ratio(&joint, &o, nu, &mut r).unwrap()).collect();
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / reps as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / reps as f64;
    let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / (reps - 1) as f64;
    let expected = cxy / nu as f64;
    let se = ((vx * vy + cxy * cxy) / (reps - 1) as f64).sqrt() / nu as f64;
    assert!((cov - expected).abs() < 5.0 * se, "{cov} vs {expected} ± {se}");
}

#[test]
fn interval_coverage() {
    let normal = Normal::new(2.0, 0.5).unwrap();
    let mut r = rng(5);
    let meta = 1000;
    let hits = (0..meta)
        .filter(|_| {
            let v: Vec<f64> = (0..100).map(|_| normal.sample(&mut r)).collect();
            let ci = confidence_interval(&v).unwrap();
            ci.low <= 2.0 && 2.0 <= ci.high
        })
        .count();
    let rate = hits as f64 / meta as f64;
    let sigma = (0.95 * 0.05 / meta as f64).sqrt();
    assert!((rate - 0.95).abs() < 3.0 * sigma, "coverage {rate}");
}

#[test]
fn noiseless_exact_run_is_exact() {
    let task = TaskSpec::multiparam(FieldParams::new(1.0, 0.9, 0.8), 0.001, 100);
    let spec = ExperimentSpec::new(task, NoiseModel::noiseless(), PurificationConfig::none());
    let recs = run_experiment(&spec).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].gap < 1e-9);
}

#[test]
fn exact_mode_collapses_trials() {
    let task = TaskSpec::zeeman_sequential(0.01, 10);
    let mut spec = ExperimentSpec::new(
        task,
        NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.0, 0.05),
        PurificationConfig::vcp(2, 1),
    );
    spec.trials = 7;
    assert_eq!(run_experiment(&spec).unwrap().len(), 1);
}

#[test]
fn shot_runs_are_reproducible() {
    let task = TaskSpec::zeeman_sequential(0.01, 10);
    let mut spec = ExperimentSpec::new(
        task,
        NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.0, 0.05),
        PurificationConfig::pvcp(2, 2, PecMode::MonteCarlo),
    );
    spec.shots = Some(10_000);
    spec.trials = 6;
    spec.master_seed = 99;
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 6);
    assert!(a.windows(2).all(|w| w[0].trial < w[1].trial));
    // Distinct seeds give distinct draws.
    assert!(a.windows(2).any(|w| w[0].gap != w[1].gap));
    spec.master_seed = 100;
    assert_ne!(run_experiment(&spec).unwrap(), a);
}

#[test]
fn shots_reject_branch_enumeration() {
    let task = TaskSpec::zeeman_sequential(0.01, 10);
    let mut spec =
        ExperimentSpec::new(task, NoiseModel::noiseless(), PurificationConfig::pvcp(2, 1, PecMode::ExactBranchSum));
    spec.shots = Some(100);
    assert!(run_experiment(&spec).is_err());
    spec.trials = 0;
    spec.shots = None;
    assert!(run_experiment(&spec).is_err());
}

#[test]
fn purified_cancellation_beats_noisy_baseline() {
    let task = TaskSpec::multiparam(FieldParams::new(1.0, 0.9, 0.8), 0.001, 100);
    let noise = NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.01, 0.05);
    let spec = ExperimentSpec::new(task, noise, PurificationConfig::none());
    let noisy = run_layer_search(&spec, Method::None, 3).unwrap().mean_gap();
    let pvcp = run_layer_search(&spec, Method::Pvcp, 3).unwrap();
    assert!(pvcp.mean_gap() < noisy, "{} vs {noisy}", pvcp.mean_gap());
}

#[test]
fn single_parameter_layer_choice() {
    let task = TaskSpec::zeeman_sequential(std::f64::consts::FRAC_PI_4 * 1e-4, 100);
    let noise = NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.0, 0.05);
    let spec = ExperimentSpec::new(task, noise, PurificationConfig::none());
    let vcp = run_layer_search(&spec, Method::Vcp, 5).unwrap();
    let pvcp = run_layer_search(&spec, Method::Pvcp, 5).unwrap();
    assert!(vcp.best_layers <= 2, "VCP L* = {}", vcp.best_layers);
    assert!(pvcp.best_layers > vcp.best_layers, "PVCP L* = {}", pvcp.best_layers);
}

#[test]
fn feedback_experiment_records_each_iteration() {
    let truth = FieldParams::new(std::f64::consts::FRAC_PI_4, 0.5, 0.5);
    let task = TaskSpec::feedback(truth, 1.0 / 40.0, 20);
    let mut spec = ExperimentSpec::new(task, NoiseModel::noiseless(), PurificationConfig::none());
    spec.feedback.iterations = 3;
    let recs = run_experiment(&spec).unwrap();
    assert_eq!(recs.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(recs.iter().all(|r| r.prob_gap.is_some()));
    assert_eq!(final_gaps(&recs).len(), 1);
}
