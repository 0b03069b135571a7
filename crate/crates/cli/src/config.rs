use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use vpurify_core::analysis::ScalingRates;
use vpurify_core::channels::NoiseFamily;
use vpurify_core::engine::Region;
use vpurify_core::harness::FeedbackSettings;
use vpurify_core::noise::LocalNoise;
use vpurify_core::{ExperimentSpec, Method, NoiseLocationMask, NoiseModel, PurificationConfig, TaskSpec};

use crate::emit::Format;

pub const SCHEMA: u32 = 1;

fn default_trials() -> usize {
    1
}

fn default_mitigation() -> PurificationConfig {
    PurificationConfig::none()
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Absent means exact probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Noise the cancellation is built for, when it differs from the real noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pec_assumed_noise: Option<LocalNoise>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { shots: None, trials: 1, pec_assumed_noise: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default, rename = "N", skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    /// cSWAP noise rates.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<NoiseFamily>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    #[serde(default)]
    pub rates: ScalingRates,
    #[serde(default = "ScalingSection::default_m")]
    pub m: Vec<usize>,
    #[serde(default = "ScalingSection::default_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "ScalingSection::default_n_min", rename = "N_min")]
    pub n_min: usize,
    #[serde(default = "ScalingSection::default_n_max", rename = "N_max")]
    pub n_max: usize,
    #[serde(default = "ScalingSection::default_points")]
    pub points: usize,
}

impl ScalingSection {
    fn default_m() -> Vec<usize> {
        vec![2, 3]
    }
    fn default_layers() -> Vec<usize> {
        vec![1, 2, 3]
    }
    fn default_n_min() -> usize {
        10
    }
    fn default_n_max() -> usize {
        10_000
    }
    fn default_points() -> usize {
        31
    }
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            rates: ScalingRates::default(),
            m: Self::default_m(),
            layers: Self::default_layers(),
            n_min: Self::default_n_min(),
            n_max: Self::default_n_max(),
            points: Self::default_points(),
        }
    }
}

/// The whole configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSpec>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_mitigation")]
    pub mitigation: PurificationConfig,
    #[serde(default)]
    pub mask: NoiseLocationMask,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub feedback: FeedbackSettings,
    #[serde(default, skip_serializing_if = "is_default")]
    pub scan: ScanSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub scaling: ScalingSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            seed: 0,
            out: None,
            format: Format::Csv,
            task: None,
            noise: NoiseModel::noiseless(),
            mitigation: PurificationConfig::none(),
            mask: NoiseLocationMask::all_on(),
            run: RunSection::default(),
            feedback: FeedbackSettings::default(),
            scan: ScanSection::default(),
            scaling: ScalingSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            bail!("unsupported schema {} (expected {SCHEMA})", self.schema);
        }
        if let Some(task) = &self.task {
            task.validate()?;
        }
        self.noise.validate()?;
        self.mitigation.validate()?;
        if self.run.trials == 0 {
            bail!("run.trials must be at least 1");
        }
        if self.run.shots == Some(0) {
            bail!("run.shots must be at least 1");
        }
        if let Some(n) = self.run.pec_assumed_noise {
            n.validate()?;
        }
        if self.scan.n.contains(&0) {
            bail!("scan.N entries must be at least 1");
        }
        if let Some(p) = self.scan.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!("scan.p entry {p} outside [0, 1]");
        }
        if self.scan.max_layers == Some(0) {
            bail!("scan.max_layers must be at least 1");
        }
        let s = &self.scaling;
        if s.n_min == 0 || s.n_min > s.n_max || s.points == 0 {
            bail!("scaling grid needs 1 <= N_min <= N_max and points >= 1");
        }
        if s.rates.shots <= 0.0 {
            bail!("scaling.rates.shots must be positive");
        }
        Ok(())
    }

    /// The experiment this document describes.
    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let task = self.task.clone().ok_or_else(|| anyhow!("config has no [task] table"))?;
        let spec = ExperimentSpec {
            task,
            noise: self.noise,
            mitigation: self.mitigation,
            mask: self.mask,
            shots: self.run.shots,
            trials: self.run.trials,
            master_seed: self.seed,
            pec_assumed_noise: self.run.pec_assumed_noise,
            feedback: self.feedback.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    #[cfg(test)]
    pub fn from_experiment(spec: &ExperimentSpec) -> Self {
        Self {
            seed: spec.master_seed,
            task: Some(spec.task.clone()),
            noise: spec.noise,
            mitigation: spec.mitigation,
            mask: spec.mask,
            run: RunSection { shots: spec.shots, trials: spec.trials, pec_assumed_noise: spec.pec_assumed_noise },
            feedback: spec.feedback.clone(),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema = 1
seed = 11

[task]
kind = "multiparam-sequential"
params = [1.0, 0.9, 0.8]
N = 100
t = 0.001
measurement = "bell"

[noise.single_qubit]
family = "depolarizing"
rate = 0.001

[noise.two_qubit]
family = "depolarizing"
rate = 0.01

[noise.cswap.local]
family = "depolarizing"
rate = 0.05

[mitigation]
method = "pvcp"
layers = 2
pec_mode = "monte-carlo"

[run]
shots = 1000000
trials = 10
"#;

    #[test]
    fn spec_roundtrip_is_lossless() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        let spec = cfg.experiment().unwrap();
        assert_eq!(spec.trials, 10);
        assert_eq!(spec.mitigation.order, 2);
        let back = RunConfig::from_experiment(&spec);
        assert_eq!(back, cfg);
        let again = RunConfig::parse(&back.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(RunConfig::parse("schema = 2").is_err());
        assert!(RunConfig::parse("schema = 1\nbogus = 3").is_err());
        assert!(RunConfig::parse(&SAMPLE.replace("trials = 10", "trials = 0")).is_err());
        assert!(RunConfig::parse(&SAMPLE.replace("rate = 0.05", "rate = 1.5")).is_err());
        assert!(RunConfig::parse(&SAMPLE.replace("layers = 2", "layers = 2\nextra = 1")).is_err());
        assert!(RunConfig::parse("schema = 1\n[scan]\nN = [0]").is_err());
    }

    #[test]
    fn missing_task_is_reported() {
        let cfg = RunConfig::parse("schema = 1").unwrap();
        assert!(cfg.experiment().is_err());
    }
}
