use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

use anyhow::Result;
use vpurify_core::analysis::{cost_comparison, log_grid, scaling_scan};
use vpurify_core::channels::{check_theorem1, make_channel, NoiseFamily};
use vpurify_core::engine::{Evaluation, Region, Setup, DENOMINATOR_FLOOR};
use vpurify_core::harness::{confidence_interval, default_max_layers, run_experiment, run_layer_search};
use vpurify_core::noise::{CswapNoise, LocalNoise};
use vpurify_core::operators::FieldParams;
use vpurify_core::{EstimateRecord, Method, NoiseLocationMask, NoiseModel, PurificationConfig, TaskSpec};

use crate::config::RunConfig;
use crate::emit::Table;

pub const STANDARD_HEADER: [&str; 12] =
    ["method", "N", "p", "trial", "layers", "m", "gap", "ci_low", "ci_high", "gamma", "eta", "seed"];

/// Global rate of the correlated cSWAP noise in robustness runs.
const ROBUSTNESS_GLOBAL_RATE: f64 = 0.01;
/// Relative miscalibration of the assumed cSWAP noise.
const ROBUSTNESS_MISMATCH: f64 = 0.1;

/// Last feedback iteration of each trial (or the only record).
fn final_records(records: &[EstimateRecord]) -> Vec<&EstimateRecord> {
    let mut out: Vec<&EstimateRecord> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(last) if last.trial == r.trial => {
                if r.iteration >= last.iteration {
                    *last = r;
                }
            }
            _ => out.push(r),
        }
    }
    out
}

fn push_standard(table: &mut Table, p: f64, records: &[EstimateRecord]) -> Result<()> {
    let finals = final_records(records);
    let gaps: Vec<f64> = finals.iter().map(|r| r.gap).collect();
    let (lo, hi) = if gaps.len() >= 2 {
        let ci = confidence_interval(&gaps)?;
        (ci.low, ci.high)
    } else {
        (gaps[0], gaps[0])
    };
    for r in finals {
        table.push(vec![
            r.method.name().into(),
            r.n.into(),
            p.into(),
            r.trial.into(),
            r.layers.into(),
            r.m.into(),
            r.gap.into(),
            lo.into(),
            hi.into(),
            r.gamma.into(),
            r.denominator.into(),
            r.seed.into(),
        ]);
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg.experiment()?;
    let records = run_experiment(&spec)?;
    let mut table = Table::new(&STANDARD_HEADER);
    push_standard(&mut table, spec.noise.cswap.local.rate(), &records)?;
    Ok(table)
}

fn sorted_methods(cfg: &RunConfig, default: &[Method]) -> Vec<Method> {
    let mut m = if cfg.scan.methods.is_empty() { default.to_vec() } else { cfg.scan.methods.clone() };
    m.sort();
    m.dedup();
    m
}

pub fn scan_n(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg.experiment()?;
    let methods = sorted_methods(cfg, &[Method::None, Method::Vcp, Method::Pvcp]);
    let mut ns = if cfg.scan.n.is_empty() { vec![spec.task.n_channels] } else { cfg.scan.n.clone() };
    ns.sort_unstable();
    ns.dedup();
    let ps = if cfg.scan.p.is_empty() { vec![spec.noise.cswap.local.rate()] } else { cfg.scan.p.clone() };
    let max_layers = cfg.scan.max_layers.unwrap_or_else(|| default_max_layers(spec.task.kind));

    let mut table = Table::new(&STANDARD_HEADER);
    for &method in &methods {
        for &n in &ns {
            for &p in &ps {
                let mut s = spec.clone();
                s.task.n_channels = n;
                s.noise.cswap.local = s.noise.cswap.local.with_rate(p);
                let search = run_layer_search(&s, method, max_layers)?;
                push_standard(&mut table, p, search.best())?;
                eprintln!("scan-n: {method} N={n} p={p} L*={} gap={:.3e}", search.best_layers, search.mean_gap());
            }
        }
    }
    Ok(table)
}

fn ratio_or_nan(num: f64, den: f64) -> f64 {
    if den.abs() < DENOMINATOR_FLOOR {
        f64::NAN
    } else {
        num / den
    }
}

fn evaluate(
    task: &TaskSpec,
    noise: &NoiseModel,
    config: &PurificationConfig,
    mask: &NoiseLocationMask,
) -> Result<Evaluation> {
    let circuit = task.circuit(None)?;
    let probe = task.probe();
    Ok(Setup { circuit: &circuit, probe: &probe, noise, config, mask, pec_assumed: None }.evaluate(false)?)
}

fn estimate_gap(task: &TaskSpec, ev: &Evaluation) -> Result<f64> {
    if ev.denominator.abs() < DENOMINATOR_FLOOR {
        return Ok(f64::NAN);
    }
    let dist = task.decode(&ev.outcome_estimates()?)?;
    let (params, _) = task.estimate(&dist)?;
    Ok(task.gap(&params))
}

fn purification_or_vcp(cfg: &RunConfig) -> PurificationConfig {
    if cfg.mitigation.method == Method::None {
        PurificationConfig::vcp(cfg.mitigation.order, cfg.mitigation.layers)
    } else {
        cfg.mitigation
    }
}

pub fn noise_locations_defaults() -> RunConfig {
    let mut cfg = RunConfig {
        task: Some(TaskSpec::zeeman_sequential(0.1, 5)),
        noise: NoiseModel::uniform(NoiseFamily::Depolarizing, 0.01, 0.01, 0.0),
        mitigation: PurificationConfig::vcp(2, 1),
        ..RunConfig::default()
    };
    cfg.scan.p = vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05];
    cfg
}

/// Each region noisy on its own, every other region ideal.
pub fn noise_locations(cfg: &RunConfig) -> Result<Table> {
    let task = cfg.task.clone().expect("task filled in");
    let config = purification_or_vcp(cfg);
    let regions = if cfg.scan.regions.is_empty() { Region::ALL.to_vec() } else { cfg.scan.regions.clone() };
    let families = if cfg.scan.families.is_empty() { NoiseFamily::ALL.to_vec() } else { cfg.scan.families.clone() };
    let mut table = Table::new(&["region", "family", "p", "numerator", "denominator", "ratio", "gap"]);
    for &region in &regions {
        for &family in &families {
            for &p in &cfg.scan.p {
                let mask = NoiseLocationMask::only(region, LocalNoise::of(family, p));
                let ev = evaluate(&task, &cfg.noise, &config, &mask)?;
                table.push(vec![
                    region.name().into(),
                    family.name().into(),
                    p.into(),
                    ev.numerators[0].into(),
                    ev.denominator.into(),
                    ratio_or_nan(ev.numerators[0], ev.denominator).into(),
                    estimate_gap(&task, &ev)?.into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn valid_rate_bound(f: NoiseFamily) -> f64 {
    match f {
        NoiseFamily::Dephasing => 0.5,
        _ => 1.0,
    }
}

pub fn cost_compare(cfg: &RunConfig, family: Option<NoiseFamily>) -> Result<Table> {
    let families = match family {
        Some(f) => vec![f],
        None if cfg.scan.families.is_empty() => NoiseFamily::ALL.to_vec(),
        None => cfg.scan.families.clone(),
    };
    let mut table = Table::new(&["family", "p", "ignore_cost", "pec_cost", "verdict"]);
    for f in families {
        let ps: Vec<f64> = if cfg.scan.p.is_empty() {
            (1..=50).map(|k| valid_rate_bound(f) * k as f64 / 51.0).collect()
        } else {
            cfg.scan.p.clone()
        };
        for p in ps {
            let r = cost_comparison(f, p)?;
            table.push(vec![
                f.name().into(),
                p.into(),
                r.ignore_cost.into(),
                r.pec_cost.into(),
                r.verdict.name().into(),
            ]);
        }
    }
    Ok(table)
}

pub fn theorem1_defaults() -> RunConfig {
    let mut cfg = noise_locations_defaults();
    cfg.scan.p = vec![0.1, 0.3, 0.5];
    cfg
}

/// Control-qubit noise against the clean control, per family and rate.
pub fn theorem1(cfg: &RunConfig) -> Result<Table> {
    let task = cfg.task.clone().expect("task filled in");
    let config = purification_or_vcp(cfg);
    let families = if cfg.scan.families.is_empty() { NoiseFamily::ALL.to_vec() } else { cfg.scan.families.clone() };
    let clean = evaluate(&task, &cfg.noise, &config, &NoiseLocationMask::ideal())?;
    let mut table = Table::new(&[
        "family",
        "p",
        "f01_re",
        "f01_im",
        "f_diag_ok",
        "orthogonal",
        "control_factor",
        "numerator_clean",
        "numerator_noisy",
        "ratio_clean",
        "ratio_noisy",
    ]);
    for &family in &families {
        for &p in &cfg.scan.p {
            let rep = check_theorem1(&make_channel(family, 0.0, 1)?, &make_channel(family, p, 1)?)?;
            let mask = NoiseLocationMask::only(Region::Control, LocalNoise::of(family, p));
            let noisy = evaluate(&task, &cfg.noise, &config, &mask)?;
            table.push(vec![
                family.name().into(),
                p.into(),
                rep.f01.re.into(),
                rep.f01.im.into(),
                rep.f_diag_ok.into(),
                rep.orthogonal.into(),
                rep.control_factor().into(),
                clean.numerators[0].into(),
                noisy.numerators[0].into(),
                ratio_or_nan(clean.numerators[0], clean.denominator).into(),
                ratio_or_nan(noisy.numerators[0], noisy.denominator).into(),
            ]);
        }
    }
    Ok(table)
}

pub fn scaling(cfg: &RunConfig) -> Result<Table> {
    let s = &cfg.scaling;
    let methods = sorted_methods(cfg, &[Method::None, Method::Vcp, Method::Pvcp]);
    let grid = if cfg.scan.n.is_empty() { log_grid(s.n_min, s.n_max, s.points) } else { cfg.scan.n.clone() };
    let points = scaling_scan(&s.rates, &methods, &s.m, &s.layers, &grid)?;
    let mut table = Table::new(&["method", "m", "layers", "N", "bias_sq", "variance", "gamma", "eta", "sql"]);
    for pt in points {
        table.push(vec![
            pt.method.name().into(),
            pt.m.into(),
            pt.layers.into(),
            pt.n.into(),
            pt.bias_sq.into(),
            pt.variance.into(),
            pt.gamma.into(),
            pt.eta.into(),
            pt.sql.into(),
        ]);
    }
    Ok(table)
}

pub fn feedback_defaults() -> RunConfig {
    let n = 150;
    let truth = FieldParams::new(FRAC_PI_4, FRAC_PI_6, FRAC_PI_6);
    let mut cfg = RunConfig {
        task: Some(TaskSpec::feedback(truth, 1.0 / (2.0 * n as f64), n)),
        noise: NoiseModel::uniform(NoiseFamily::Depolarizing, 0.005, 0.01, 0.025),
        ..RunConfig::default()
    };
    cfg.scan.methods = vec![Method::None, Method::Pvcp];
    cfg
}

pub fn feedback(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg.experiment()?;
    let methods = sorted_methods(cfg, &[spec.mitigation.method]);
    let mut table =
        Table::new(&["method", "N", "trial", "iteration", "layers", "gap", "prob_gap", "gamma", "eta", "seed"]);
    for method in methods {
        let records = run_experiment(&spec.with_method(method, spec.mitigation.layers))?;
        for r in records {
            table.push(vec![
                r.method.name().into(),
                r.n.into(),
                r.trial.into(),
                r.iteration.into(),
                r.layers.into(),
                r.gap.into(),
                r.prob_gap.unwrap_or(f64::NAN).into(),
                r.gamma.into(),
                r.denominator.into(),
                r.seed.into(),
            ]);
        }
        eprintln!("feedback: {method} done");
    }
    Ok(table)
}

pub fn robustness_defaults() -> RunConfig {
    let mut cfg = RunConfig {
        task: Some(TaskSpec::multiparam(FieldParams::new(1.0, 0.9, 0.8), 0.001, 100)),
        noise: NoiseModel::uniform(NoiseFamily::Depolarizing, 0.001, 0.01, 0.05),
        ..RunConfig::default()
    };
    cfg.scan.n = vec![100, 500];
    cfg.scan.families = vec![NoiseFamily::Depolarizing, NoiseFamily::Dephasing];
    cfg.scan.methods = vec![Method::None, Method::Pvsp, Method::Pvcp];
    cfg
}

/// Correlated cSWAP noise, cancelled with a calibrated and a 10%-off local model.
pub fn robustness(cfg: &RunConfig) -> Result<Table> {
    let base = cfg.experiment()?;
    let methods = sorted_methods(cfg, &[Method::None, Method::Pvcp]);
    let families =
        if cfg.scan.families.is_empty() { vec![NoiseFamily::Depolarizing] } else { cfg.scan.families.clone() };
    let ns = if cfg.scan.n.is_empty() { vec![base.task.n_channels] } else { cfg.scan.n.clone() };
    let p0 = cfg.scan.p.first().copied().unwrap_or_else(|| base.noise.cswap.local.rate());
    let max_layers = cfg.scan.max_layers.unwrap_or_else(|| default_max_layers(base.task.kind));
    let mut table = Table::new(&["family", "calibration", "method", "N", "layers", "gap", "gamma", "eta"]);
    for &family in &families {
        for &n in &ns {
            let mut s = base.clone();
            s.task.n_channels = n;
            s.noise.cswap = CswapNoise::correlated(family, p0, ROBUSTNESS_GLOBAL_RATE);
            for &method in &methods {
                let calibrations: Vec<(&str, Option<LocalNoise>)> = if method.uses_pec() {
                    vec![
                        ("calibrated", None),
                        ("mismatched", Some(LocalNoise::of(family, p0 * (1.0 + ROBUSTNESS_MISMATCH)))),
                    ]
                } else {
                    vec![("none", None)]
                };
                for (label, assumed) in calibrations {
                    let mut run = s.clone();
                    run.pec_assumed_noise = assumed;
                    let search = run_layer_search(&run, method, max_layers)?;
                    for r in final_records(search.best()) {
                        table.push(vec![
                            family.name().into(),
                            label.into(),
                            method.name().into(),
                            n.into(),
                            r.layers.into(),
                            r.gap.into(),
                            r.gamma.into(),
                            r.denominator.into(),
                        ]);
                    }
                    eprintln!("robustness: {family} N={n} {method} {label}");
                }
            }
        }
    }
    Ok(table)
}

/// Fills the task of a subcommand default into a loaded config lacking one.
pub fn with_default_task(mut cfg: RunConfig, defaults: &RunConfig) -> RunConfig {
    if cfg.task.is_none() {
        cfg.task = defaults.task.clone();
    }
    cfg
}
