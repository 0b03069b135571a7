mod common;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

use common::*;
use vpurify_core::circuit::build_noisy_target;
use vpurify_core::engine::{NoiseLocationMask, PurificationConfig, Setup};
use vpurify_core::linalg::{expectation, ComplexMatrix, DensityMatrix};
use vpurify_core::noise::NoiseModel;
use vpurify_core::operators::{bell_basis, encoding_unitary, ghz, projector_py, zeeman_unitary, FieldParams};
use vpurify_core::tasks::*;

fn exact_outcomes(spec: &TaskSpec, control: Option<FieldParams>) -> Vec<f64> {
    let circ = spec.circuit(control).unwrap();
    build_noisy_target(&circ, &spec.probe(), &NoiseModel::noiseless()).unwrap().diagonal()
}

#[test]
fn closed_form_matches_bell_simulation() {
    // Oracle: apply (U_λ ⊗ I)^N to |φ₁⟩ directly and project onto the Bell vectors.
    let p = FieldParams::new(1.0, 0.9, 0.8);
    let (t, n) = (0.001, 100);
    let mut rho = DensityMatrix::from_pure(&bell_basis()[0]).unwrap();
    let u = encoding_unitary(p, t);
    for _ in 0..n {
        rho.apply_unitary(&u, &[0, 1]).unwrap();
    }
    let oracle: Vec<f64> =
        bell_basis().iter().map(|v| expectation(&ComplexMatrix::outer(v, v), &rho).unwrap()).collect();
    let closed = multiparam_probabilities(p, t, n);
    for (a, b) in oracle.iter().zip(&closed.probs) {
        assert!((a - b).abs() < 1e-12, "{oracle:?} vs {:?}", closed.probs);
    }

    // The task circuit's readout lands on the same law.
    let spec = TaskSpec::multiparam(p, t, n);
    let decoded = spec.decode(&exact_outcomes(&spec, None)).unwrap();
    assert!(decoded.l1_distance(&closed) < 1e-12);
}

#[test]
fn inversion_roundtrip() {
    let p = FieldParams::new(1.0, 0.9, 0.8);
    let inv = invert_multiparam(&multiparam_probabilities(p, 0.001, 100), 0.001, 100).unwrap();
    assert!(inv.angles_defined);
    assert!(inv.params.l1_distance(&p) < 1e-9, "{:?}", inv.params);

    let spec = TaskSpec::multiparam(p, 0.001, 100);
    let dist = spec.decode(&exact_outcomes(&spec, None)).unwrap();
    let (est, ok) = spec.estimate(&dist).unwrap();
    assert!(ok && spec.gap(&est) < 1e-9);
}

#[test]
fn zeeman_roundtrips() {
    let lambda = FRAC_PI_4 * 1e-4;
    let spec = TaskSpec::zeeman_sequential(lambda, 100);
    let dist = spec.decode(&exact_outcomes(&spec, None)).unwrap();
    let (est, _) = spec.estimate(&dist).unwrap();
    assert!((est[0] - lambda).abs() < 1e-12, "{} vs {lambda}", est[0]);

    // Oracle: ⟨P_y⟩ on U^N|+⟩ equals the population read out by the circuit.
    let mut rho = DensityMatrix::from_pure(&ghz(1)).unwrap();
    for _ in 0..100 {
        rho.apply_unitary(&zeeman_unitary(lambda, 1.0), &[0]).unwrap();
    }
    let py = expectation(&projector_py(1), &rho).unwrap();
    assert!((py - dist.probs[0]).abs() < 1e-13);

    for n in 1..=4 {
        let lambda = 0.3 / n as f64;
        let spec = TaskSpec::zeeman_parallel(lambda, n);
        let dist = spec.decode(&exact_outcomes(&spec, None)).unwrap();
        let (est, _) = spec.estimate(&dist).unwrap();
        assert!((est[0] - lambda).abs() < 1e-10, "n={n}");
    }
}

#[test]
fn mle_recovers_truth_from_perturbed_start() {
    let truth = FieldParams::new(FRAC_PI_4, FRAC_PI_6, FRAC_PI_6);
    let spec = TaskSpec::feedback(truth, 1.0 / 300.0, 150);
    let empirical = spec.model_probabilities(truth, None);
    let init: Vec<f64> = truth.to_array().iter().map(|x| x * 1.1).collect();
    let mut r = rng(5);
    let fit = mle_fit(&empirical, |x| spec.model_probabilities(FieldParams::from_slice(x), None), 1e5, &init, &mut r)
        .unwrap();
    assert!(fit.improved && fit.loss <= fit.init_loss);
    assert!(spec.gap(&fit.params) < 1e-6, "{:?}", fit.params);
}

#[test]
fn mle_at_the_optimum_reports_no_improvement() {
    let truth = FieldParams::new(1.0, 0.9, 0.8);
    let spec = TaskSpec::multiparam(truth, 0.001, 100);
    let empirical = spec.model_probabilities(truth, None);
    let mut r = rng(6);
    let fit = mle_fit(
        &empirical,
        |x| spec.model_probabilities(FieldParams::from_slice(x), None),
        1.0,
        &truth.to_array(),
        &mut r,
    )
    .unwrap();
    assert!(fit.loss <= fit.init_loss + 1e-15);
    assert!(spec.gap(&fit.params) < 1e-6);
}

#[test]
fn feedback_converges_without_noise() {
    let truth = FieldParams::new(FRAC_PI_4, FRAC_PI_6, FRAC_PI_6);
    let n = 150;
    let spec = TaskSpec::feedback(truth, 1.0 / (2.0 * n as f64), n);
    let opts = FeedbackOptions::near_truth(&spec, 10, None, 0.1);
    let mut r = rng(7);
    let steps = run_feedback_loop(
        &spec,
        &NoiseModel::noiseless(),
        &PurificationConfig::none(),
        &NoiseLocationMask::all_on(),
        &opts,
        &mut r,
    )
    .unwrap();
    assert_eq!(steps.len(), 10);
    assert!(steps[0].control.is_none());
    assert!(steps.iter().any(|s| s.param_gap < 1e-6));
    for w in steps.windows(2) {
        assert!(w[1].param_gap <= w[0].param_gap + 1e-9, "{} -> {}", w[0].param_gap, w[1].param_gap);
    }

    let none = run_feedback_loop(
        &spec,
        &NoiseModel::noiseless(),
        &PurificationConfig::none(),
        &NoiseLocationMask::all_on(),
        &FeedbackOptions { iterations: 0, ..opts },
        &mut r,
    )
    .unwrap();
    assert!(none.is_empty());
}

#[test]
fn first_feedback_step_is_the_plain_fit() {
    let truth = FieldParams::new(FRAC_PI_4, FRAC_PI_6, FRAC_PI_6);
    let spec = TaskSpec::feedback(truth, 1.0 / 300.0, 150);
    let opts = FeedbackOptions::near_truth(&spec, 1, None, 0.1);
    let steps = run_feedback_loop(
        &spec,
        &NoiseModel::noiseless(),
        &PurificationConfig::none(),
        &NoiseLocationMask::all_on(),
        &opts,
        &mut rng(8),
    )
    .unwrap();
    let empirical = spec.model_probabilities(truth, None);
    let plain = mle_fit(
        &empirical,
        |x| spec.model_probabilities(FieldParams::from_slice(x), None),
        1.0,
        &opts.initial_guess.to_array(),
        &mut rng(9),
    )
    .unwrap();
    assert!(steps[0].estimate.l1_distance(&FieldParams::from_slice(&plain.params)) < 1e-6);
    assert!(steps[0].prob_gap < 1e-12);
}

#[test]
fn wrong_kind_is_rejected() {
    let spec = TaskSpec::multiparam(FieldParams::new(1.0, 0.9, 0.8), 0.001, 10);
    let opts = FeedbackOptions::near_truth(&spec, 1, None, 0.1);
    assert!(run_feedback_loop(
        &spec,
        &NoiseModel::noiseless(),
        &PurificationConfig::none(),
        &NoiseLocationMask::all_on(),
        &opts,
        &mut rng(1),
    )
    .is_err());
    let _ = Setup {
        circuit: &spec.circuit(None).unwrap(),
        probe: &spec.probe(),
        noise: &NoiseModel::noiseless(),
        config: &PurificationConfig::none(),
        mask: &NoiseLocationMask::all_on(),
        pec_assumed: None,
    };
}
