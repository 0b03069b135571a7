//! Shared fixtures for the benchmarks.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

use vpurify_core::channels::NoiseFamily;
use vpurify_core::operators::FieldParams;
use vpurify_core::Method;
use vpurify_core::{ExperimentSpec, NoiseModel, PurificationConfig, TaskSpec};

/// Three-parameter task at the usual rates 0.001/0.01/0.05.
pub fn multiparam(n: usize, method: Method, layers: usize, shots: Option<u64>) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        TaskSpec::multiparam(FieldParams::new(1.0, 0.9, 0.8), 0.001, n),
        NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.01, 0.05),
        PurificationConfig::none(),
    );
    // Set first: the method picks its cancellation mode from it.
    spec.shots = shots;
    spec.with_method(method, layers)
}

pub fn zeeman(n: usize, method: Method) -> ExperimentSpec {
    ExperimentSpec::new(
        TaskSpec::zeeman_sequential(0.1, n),
        NoiseModel::uniform(NoiseFamily::Depolarizing, 0.01, 0.0, 0.05),
        PurificationConfig::none(),
    )
    .with_method(method, 1)
}

/// One shot-mode feedback trial with `iterations` rounds.
pub fn feedback(method: Method, iterations: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        TaskSpec::feedback(FieldParams::new(FRAC_PI_4, FRAC_PI_6, FRAC_PI_6), 1.0 / 300.0, 150),
        NoiseModel::uniform(NoiseFamily::Depolarizing, 0.005, 0.01, 0.025),
        PurificationConfig::none(),
    );
    spec.shots = Some(100_000);
    spec.feedback.iterations = iterations;
    spec.with_method(method, 1)
}
