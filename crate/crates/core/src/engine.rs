//! Exact density-matrix simulation of the virtual state and channel purification
//! circuits, with optional error-cancellation operators on the target register.
//!
//! Qubit 0 is the control. Register `r` (of `m`) occupies qubits
//! `1 + r·n .. 1 + (r+1)·n`; the last register is the target.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{make_channel, NoiseFamily};
use crate::circuit::{compile_gates, Circuit, CompiledGate, NoiseTable};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, DensityMatrix, ZERO};
use crate::noise::{LocalNoise, NoiseModel};
use crate::operators::controlled_cyclic_shift;
use crate::pec::{branch_count, decomposition_for, PecDecomposition, BRANCH_CAP};

/// Largest register the circuit simulator accepts (control plus all copies).
pub const SIM_QUBIT_CAP: usize = 5;

/// Denominators below this magnitude signal purification breakdown.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    None,
    Vsp,
    Vcp,
    Pvsp,
    Pvcp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::None, Method::Vsp, Method::Vcp, Method::Pvsp, Method::Pvcp];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Vsp => "vsp",
            Method::Vcp => "vcp",
            Method::Pvsp => "pvsp",
            Method::Pvcp => "pvcp",
        }
    }

    pub fn uses_pec(self) -> bool {
        matches!(self, Method::Pvsp | Method::Pvcp)
    }

    pub fn is_state_purification(self) -> bool {
        matches!(self, Method::Vsp | Method::Pvsp)
    }

    pub fn is_channel_purification(self) -> bool {
        matches!(self, Method::Vcp | Method::Pvcp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefreshMode {
    /// Replace the ancilla marginal by `I/2ⁿ`.
    #[default]
    ExactMixed,
    /// Uniformly random Pauli string on the ancillas. Simulated through its
    /// average, which is the same map.
    SampledPauli,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PecMode {
    #[default]
    Off,
    ExactBranchSum,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurificationConfig {
    pub method: Method,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub refresh: RefreshMode,
    #[serde(default)]
    pub pec_mode: PecMode,
}

fn default_order() -> usize {
    2
}

fn default_layers() -> usize {
    1
}

impl PurificationConfig {
    pub fn none() -> Self {
        Self { method: Method::None, order: 2, layers: 1, refresh: RefreshMode::ExactMixed, pec_mode: PecMode::Off }
    }

    pub fn vsp(m: usize) -> Self {
        Self { method: Method::Vsp, order: m, ..Self::none() }
    }

    pub fn vcp(m: usize, layers: usize) -> Self {
        Self { method: Method::Vcp, order: m, layers, ..Self::none() }
    }

    pub fn pvsp(m: usize, pec_mode: PecMode) -> Self {
        Self { method: Method::Pvsp, order: m, pec_mode, ..Self::none() }
    }

    pub fn pvcp(m: usize, layers: usize, pec_mode: PecMode) -> Self {
        Self { method: Method::Pvcp, order: m, layers, pec_mode, ..Self::none() }
    }

    /// Same settings with another method; PEC defaults to exact when switched on.
    pub fn with_method(&self, method: Method) -> Self {
        let mut c = *self;
        c.method = method;
        if method.uses_pec() && c.pec_mode == PecMode::Off {
            c.pec_mode = PecMode::ExactBranchSum;
        }
        if !method.uses_pec() {
            c.pec_mode = PecMode::Off;
        }
        if !method.is_channel_purification() {
            c.layers = 1;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::None {
            return Ok(());
        }
        if self.order < 2 {
            return Err(Error::InvalidOrder { min: 2, got: self.order });
        }
        if self.layers < 1 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if self.method.uses_pec() && self.pec_mode == PecMode::Off {
            return Err(Error::Config(format!("{} needs a PEC mode", self.method)));
        }
        if !self.method.uses_pec() && self.pec_mode != PecMode::Off {
            return Err(Error::Config(format!("{} does not use PEC", self.method)));
        }
        if self.method.is_state_purification() && self.layers != 1 {
            return Err(Error::Config("state purification has a single layer".into()));
        }
        Ok(())
    }
}

/// Noise locations around the controlled permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Control qubit (preparation and every controlled permutation).
    Control,
    /// All registers after the first permutation of a layer.
    Between,
    /// Ancilla registers after the second permutation.
    AncillaAfter,
    /// Target register after the second permutation.
    TargetAfter,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Control, Region::Between, Region::AncillaAfter, Region::TargetAfter];

    pub fn name(self) -> &'static str {
        match self {
            Region::Control => "control",
            Region::Between => "between",
            Region::AncillaAfter => "ancilla-after",
            Region::TargetAfter => "target-after",
        }
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseLocationMask {
    pub control: bool,
    pub between: bool,
    pub ancilla_after: bool,
    pub target_after: bool,
    #[serde(default)]
    pub overrides: RegionOverrides,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<LocalNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub between: Option<LocalNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla_after: Option<LocalNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_after: Option<LocalNoise>,
}

impl RegionOverrides {
    fn get(&self, r: Region) -> Option<LocalNoise> {
        match r {
            Region::Control => self.control,
            Region::Between => self.between,
            Region::AncillaAfter => self.ancilla_after,
            Region::TargetAfter => self.target_after,
        }
    }

    fn is_empty(&self) -> bool {
        Region::ALL.iter().all(|&r| self.get(r).is_none())
    }
}

impl Default for NoiseLocationMask {
    fn default() -> Self {
        Self::all_on()
    }
}

impl NoiseLocationMask {
    pub fn all_on() -> Self {
        Self {
            control: true,
            between: true,
            ancilla_after: true,
            target_after: true,
            overrides: RegionOverrides::default(),
        }
    }

    /// Ideal controlled permutations.
    pub fn ideal() -> Self {
        Self {
            control: false,
            between: false,
            ancilla_after: false,
            target_after: false,
            overrides: RegionOverrides::default(),
        }
    }

    /// Only `region` is noisy, with the given channel.
    pub fn only(region: Region, noise: LocalNoise) -> Self {
        Self::ideal().with_override(region, noise)
    }

    pub fn enabled(&self, r: Region) -> bool {
        match r {
            Region::Control => self.control,
            Region::Between => self.between,
            Region::AncillaAfter => self.ancilla_after,
            Region::TargetAfter => self.target_after,
        }
    }

    pub fn with_region(mut self, r: Region, on: bool) -> Self {
        match r {
            Region::Control => self.control = on,
            Region::Between => self.between = on,
            Region::AncillaAfter => self.ancilla_after = on,
            Region::TargetAfter => self.target_after = on,
        }
        self
    }

    /// Enables `r` with its own channel.
    pub fn with_override(mut self, r: Region, noise: LocalNoise) -> Self {
        let slot = match r {
            Region::Control => &mut self.overrides.control,
            Region::Between => &mut self.overrides.between,
            Region::AncillaAfter => &mut self.overrides.ancilla_after,
            Region::TargetAfter => &mut self.overrides.target_after,
        };
        *slot = Some(noise);
        self.with_region(r, true)
    }

    /// Local channel in effect at `r`, if any.
    pub fn region_noise(&self, r: Region, noise: &NoiseModel) -> Option<LocalNoise> {
        if !self.enabled(r) {
            return None;
        }
        Some(self.overrides.get(r).unwrap_or(noise.cswap.local))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioExpectation {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub gamma: f64,
}

impl RatioExpectation {
    pub fn new(numerator: f64, denominator: f64, gamma: f64) -> Result<Self> {
        if denominator.abs() < DENOMINATOR_FLOOR {
            return Err(Error::DenominatorUnderflow(denominator));
        }
        Ok(Self { numerator, denominator, ratio: numerator / denominator, gamma })
    }
}

/// How the cancellation operators are inserted at each site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PecInsertion<'a> {
    /// `Σ α_i G_i` at every site (the exact mitigated value).
    Quasi,
    /// `Σ (|α_i|/γ) G_i`, the physically sampled mixture.
    Mixture,
    /// `Σ (α_i/γ) G_i`, the sign-weighted mixture.
    Signed,
    /// A fixed branch: term `idx[site]` at each site.
    Branch(&'a [usize]),
}

/// Cancellation sites of a purification circuit, in layer-major, qubit-minor order.
#[derive(Clone, Debug, PartialEq)]
pub struct PecPlan {
    pub sites: Vec<PecDecomposition>,
}

impl PecPlan {
    pub fn gamma(&self) -> f64 {
        crate::pec::gamma_total(&self.sites)
    }

    pub fn branch_count(&self) -> u128 {
        branch_count(&self.sites)
    }

    fn site_superop(&self, site: usize, how: PecInsertion<'_>) -> ComplexMatrix {
        let d = &self.sites[site];
        match how {
            PecInsertion::Quasi => d.quasi_superop(),
            PecInsertion::Mixture => d.mixture_superop(),
            PecInsertion::Signed => d.signed_superop(),
            PecInsertion::Branch(idx) => d.terms[idx[site]].1.superoperator(),
        }
    }
}

/// Builds one decomposition per target qubit per layer. The decomposition inverts
/// `assumed` if given, else the target-after local noise.
pub fn plan_pec(
    layers: usize,
    n: usize,
    noise: &NoiseModel,
    mask: &NoiseLocationMask,
    assumed: Option<LocalNoise>,
) -> Result<PecPlan> {
    let target = assumed.or_else(|| mask.region_noise(Region::TargetAfter, noise));
    let dec = match target {
        None => decomposition_for(NoiseFamily::Depolarizing, 0.0)?,
        Some(t) => {
            let family =
                t.family().ok_or_else(|| Error::Unsupported("PEC needs a named noise family at the target".into()))?;
            decomposition_for(family, t.rate())?
        }
    };
    Ok(PecPlan { sites: vec![dec; layers * n] })
}

/// Effect of one ancilla refresh.
#[derive(Clone, Debug, PartialEq)]
pub enum Refresh {
    /// Replace the ancilla marginal by the maximally mixed state.
    Mixed,
    /// Apply this Pauli string (base-4 index) to the ancillas.
    Pauli(usize),
}

/// One refresh draw. Averaged over draws, `SampledPauli` equals `ExactMixed`.
pub fn ancilla_refresh<R: Rng + ?Sized>(mode: RefreshMode, n: usize, rng: &mut R) -> Refresh {
    match mode {
        RefreshMode::ExactMixed => Refresh::Mixed,
        RefreshMode::SampledPauli => Refresh::Pauli(rng.random_range(0..crate::pauli::count(n))),
    }
}

/// Control/target blocks of the final state: `ρ_ab` is the target operator
/// `tr_anc ⟨a|ρ|b⟩_ctrl`.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedBlocks {
    pub rho00: ComplexMatrix,
    pub rho11: ComplexMatrix,
    pub rho01: ComplexMatrix,
}

impl PurifiedBlocks {
    fn from_state(rho: &DensityMatrix, n: usize) -> Self {
        let d = 1usize << n;
        let big = rho.dim() / 2;
        let anc = big / d;
        let m = rho.matrix();
        let mut blocks = [ComplexMatrix::zeros(d, d), ComplexMatrix::zeros(d, d), ComplexMatrix::zeros(d, d)];
        for (slot, (a, b)) in [(0usize, 0usize), (1, 1), (0, 1)].into_iter().enumerate() {
            for x in 0..d {
                for y in 0..d {
                    let mut acc = ZERO;
                    for k in 0..anc {
                        acc += m[(a * big + k * d + x, b * big + k * d + y)];
                    }
                    blocks[slot][(x, y)] = acc;
                }
            }
        }
        let [rho00, rho11, rho01] = blocks;
        Self { rho00, rho11, rho01 }
    }

    /// `⟨X⊗O⟩ = 2 Re tr(O ρ01)`.
    pub fn numerator(&self, obs: &ComplexMatrix) -> f64 {
        2.0 * crate::linalg::trace_product(obs, &self.rho01).re
    }

    /// `⟨X⊗I⟩`.
    pub fn denominator(&self) -> f64 {
        2.0 * self.rho01.trace().re
    }

    pub fn ratio(&self, obs: &ComplexMatrix, gamma: f64) -> Result<RatioExpectation> {
        RatioExpectation::new(self.numerator(obs), self.denominator(), gamma)
    }

    /// `2 Re ρ01[k][k]` per computational outcome `k`.
    pub fn outcome_numerators(&self) -> Vec<f64> {
        (0..self.rho01.rows()).map(|k| 2.0 * self.rho01[(k, k)].re).collect()
    }

    /// `P(c, k)` for control X-outcome `c` (index 0 ↔ +1) and target outcome `k`.
    pub fn control_outcome_law(&self) -> [Vec<f64>; 2] {
        let d = self.rho01.rows();
        let mut plus = vec![0.0; d];
        let mut minus = vec![0.0; d];
        for k in 0..d {
            let diag = (self.rho00[(k, k)].re + self.rho11[(k, k)].re) / 2.0;
            let off = self.rho01[(k, k)].re;
            plus[k] = diag + off;
            minus[k] = diag - off;
        }
        [plus, minus]
    }

    fn scaled(&self, s: f64) -> Self {
        Self { rho00: self.rho00.scale_real(s), rho11: self.rho11.scale_real(s), rho01: self.rho01.scale_real(s) }
    }
}

fn check_cap(m: usize, n: usize) -> Result<()> {
    let needed = 1 + m * n;
    if needed > SIM_QUBIT_CAP {
        return Err(Error::QubitCapExceeded { needed, cap: SIM_QUBIT_CAP });
    }
    Ok(())
}

fn single_superop(noise: Option<LocalNoise>) -> Result<Option<ComplexMatrix>> {
    match noise {
        Some(n) if !n.is_trivial() => Ok(Some(n.channel(1)?.superoperator().clone())),
        Some(n) => {
            n.validate()?;
            Ok(None)
        }
        None => Ok(None),
    }
}

/// Resolved per-location channels for the controlled permutations.
struct SliceNoise {
    control: Option<ComplexMatrix>,
    between: Option<ComplexMatrix>,
    ancilla_after: Option<ComplexMatrix>,
    target_after: Option<ComplexMatrix>,
    /// Three-qubit correlated channel replacing the per-qubit channels.
    correlated: Option<ComplexMatrix>,
    /// Channel for the control preparation.
    prep: Option<ComplexMatrix>,
}

impl SliceNoise {
    fn resolve(noise: &NoiseModel, mask: &NoiseLocationMask, m: usize) -> Result<Self> {
        noise.cswap.local.validate()?;
        let prep_noise = if mask.control { Some(mask.overrides.control.unwrap_or(noise.single_qubit)) } else { None };
        let correlated = if noise.cswap.is_correlated() {
            let all_on = Region::ALL.iter().all(|&r| mask.enabled(r));
            if !(all_on && mask.overrides.is_empty()) {
                return Err(Error::Unsupported("correlated permutation noise needs every region enabled".into()));
            }
            if m != 2 {
                return Err(Error::Unsupported("correlated permutation noise is three-qubit (order 2 only)".into()));
            }
            Some(noise.cswap.correlated_channel()?.superoperator().clone())
        } else {
            None
        };
        let local = |r: Region| -> Result<Option<ComplexMatrix>> {
            if correlated.is_some() {
                return Ok(None);
            }
            single_superop(mask.region_noise(r, noise))
        };
        Ok(Self {
            control: local(Region::Control)?,
            between: local(Region::Between)?,
            ancilla_after: local(Region::AncillaAfter)?,
            target_after: local(Region::TargetAfter)?,
            correlated,
            prep: single_superop(prep_noise)?,
        })
    }
}

struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn qubit(&self, reg: usize, j: usize) -> usize {
        1 + reg * self.n + j
    }

    fn register(&self, reg: usize) -> Vec<usize> {
        (0..self.n).map(|j| self.qubit(reg, j)).collect()
    }

    fn ancilla_qubits(&self) -> Vec<usize> {
        (0..self.m - 1).flat_map(|r| self.register(r)).collect()
    }

    fn slice(&self, j: usize) -> Vec<usize> {
        std::iter::once(0).chain((0..self.m).map(|r| self.qubit(r, j))).collect()
    }

    fn target(&self) -> usize {
        self.m - 1
    }
}

#[derive(Clone, Copy, PartialEq)]
enum SlicePosition {
    First,
    Second,
    /// The single permutation layer of state purification.
    Only,
}

struct Permuter {
    forward: ComplexMatrix,
    inverse: ComplexMatrix,
}

impl Permuter {
    fn new(m: usize) -> Self {
        let forward = controlled_cyclic_shift(m);
        let inverse = forward.adjoint();
        Self { forward, inverse }
    }
}

fn apply_opt(rho: &mut DensityMatrix, s: &Option<ComplexMatrix>, qubits: &[usize]) -> Result<()> {
    if let Some(s) = s {
        for &q in qubits {
            rho.apply_superoperator(s, &[q])?;
        }
    }
    Ok(())
}

fn permutation_layer(
    rho: &mut DensityMatrix,
    lay: &Layout,
    u: &ComplexMatrix,
    noise: &SliceNoise,
    pos: SlicePosition,
) -> Result<()> {
    for j in 0..lay.n {
        let slice = lay.slice(j);
        rho.apply_unitary(u, &slice)?;
        if let Some(corr) = &noise.correlated {
            rho.apply_superoperator(corr, &slice)?;
            continue;
        }
        apply_opt(rho, &noise.control, &[0])?;
        let anc: Vec<usize> = (0..lay.target()).map(|r| lay.qubit(r, j)).collect();
        let tar = [lay.qubit(lay.target(), j)];
        match pos {
            SlicePosition::First => {
                apply_opt(rho, &noise.between, &anc)?;
                apply_opt(rho, &noise.between, &tar)?;
            }
            SlicePosition::Second | SlicePosition::Only => {
                apply_opt(rho, &noise.ancilla_after, &anc)?;
                apply_opt(rho, &noise.target_after, &tar)?;
            }
        }
    }
    Ok(())
}

fn apply_pec_layer(
    rho: &mut DensityMatrix,
    lay: &Layout,
    pec: Option<(&PecPlan, PecInsertion<'_>)>,
    layer: usize,
) -> Result<()> {
    if let Some((plan, how)) = pec {
        for j in 0..lay.n {
            let s = plan.site_superop(layer * lay.n + j, how);
            rho.apply_superoperator(&s, &[lay.qubit(lay.target(), j)])?;
        }
    }
    Ok(())
}

fn check_pec(pec: Option<(&PecPlan, PecInsertion<'_>)>, sites: usize) -> Result<()> {
    if let Some((plan, how)) = pec {
        if plan.sites.len() != sites {
            return Err(Error::Config(format!("PEC plan has {} sites, circuit has {sites}", plan.sites.len())));
        }
        if let PecInsertion::Branch(idx) = how {
            if idx.len() != sites || idx.iter().zip(&plan.sites).any(|(&i, s)| i >= s.terms.len()) {
                return Err(Error::Config("branch does not match the PEC plan".into()));
            }
        }
    }
    Ok(())
}

fn plus_state() -> DensityMatrix {
    let h = c(0.5, 0.0);
    DensityMatrix::new_unchecked(ComplexMatrix::from_rows(&[&[h, h], &[h, h]])).expect("2x2 is a valid shape")
}

/// Layer-wise channel purification of `circuit` applied to `probe`.
pub fn simulate_vcp(
    circuit: &Circuit,
    probe: &DensityMatrix,
    noise: &NoiseModel,
    config: &PurificationConfig,
    mask: &NoiseLocationMask,
    pec: Option<(&PecPlan, PecInsertion<'_>)>,
) -> Result<PurifiedBlocks> {
    config.validate()?;
    if !config.method.is_channel_purification() {
        return Err(Error::Config(format!("{} is not channel purification", config.method)));
    }
    circuit.validate()?;
    let (n, m, layers) = (circuit.num_qubits, config.order, config.layers);
    check_cap(m, n)?;
    if probe.num_qubits() != n {
        return Err(Error::Dimension("probe does not match the circuit".into()));
    }
    check_pec(pec, layers * n)?;
    let lay = Layout { n, m };
    let slice_noise = SliceNoise::resolve(noise, mask, m)?;
    let perm = Permuter::new(m);
    let mut table = NoiseTable::new(noise)?;
    let blocks: Vec<Vec<CompiledGate>> =
        circuit.blocks(layers)?.into_iter().map(|b| compile_gates(b, &mut table)).collect::<Result<_>>()?;
    let refresh = match config.refresh {
        RefreshMode::ExactMixed => None,
        RefreshMode::SampledPauli => Some(make_channel(NoiseFamily::Depolarizing, 1.0, 1)?.superoperator().clone()),
    };

    let mut rho = plus_state();
    for _ in 0..m - 1 {
        rho = rho.tensor(&DensityMatrix::maximally_mixed(n));
    }
    rho = rho.tensor(probe);
    apply_opt(&mut rho, &slice_noise.prep, &[0])?;

    for (l, block) in blocks.iter().enumerate() {
        permutation_layer(&mut rho, &lay, &perm.forward, &slice_noise, SlicePosition::First)?;
        for reg in 0..m {
            for g in block {
                g.apply(&mut rho, 1 + reg * n)?;
            }
        }
        permutation_layer(&mut rho, &lay, &perm.inverse, &slice_noise, SlicePosition::Second)?;
        apply_pec_layer(&mut rho, &lay, pec, l)?;
        if l + 1 < layers {
            let anc = lay.ancilla_qubits();
            match &refresh {
                None => rho.reset_to_maximally_mixed(&anc)?,
                Some(s) => apply_opt(&mut rho, &Some(s.clone()), &anc)?,
            }
        }
    }
    Ok(PurifiedBlocks::from_state(&rho, n))
}

/// State purification of `m` copies of `noisy`, with the given permutation noise.
pub fn simulate_vsp(
    noisy: &DensityMatrix,
    m: usize,
    noise: &NoiseModel,
    mask: &NoiseLocationMask,
    pec: Option<(&PecPlan, PecInsertion<'_>)>,
) -> Result<PurifiedBlocks> {
    if m < 2 {
        return Err(Error::InvalidOrder { min: 2, got: m });
    }
    let n = noisy.num_qubits();
    check_cap(m, n)?;
    check_pec(pec, n)?;
    let lay = Layout { n, m };
    let slice_noise = SliceNoise::resolve(noise, mask, m)?;
    let perm = Permuter::new(m);
    let mut rho = plus_state();
    for _ in 0..m {
        rho = rho.tensor(noisy);
    }
    apply_opt(&mut rho, &slice_noise.prep, &[0])?;
    permutation_layer(&mut rho, &lay, &perm.forward, &slice_noise, SlicePosition::Only)?;
    apply_pec_layer(&mut rho, &lay, pec, 0)?;
    Ok(PurifiedBlocks::from_state(&rho, n))
}

/// Convenience form: ratio for `obs` with ideal permutations except for an
/// optional control channel.
pub fn vsp_ratio(
    noisy: &DensityMatrix,
    obs: &ComplexMatrix,
    m: usize,
    control_noise: Option<LocalNoise>,
) -> Result<RatioExpectation> {
    let mask = match control_noise {
        Some(f) => NoiseLocationMask::only(Region::Control, f),
        None => NoiseLocationMask::ideal(),
    };
    simulate_vsp(noisy, m, &NoiseModel::noiseless(), &mask, None)?.ratio(obs, 1.0)
}

/// Distribution over (sign, control outcome, target outcome), stored as
/// `probs[(s·2 + c)·K + k]` with index 0 meaning +1.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub num_outcomes: usize,
    pub gamma: f64,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn index(&self, s: usize, c: usize, k: usize) -> usize {
        (s * 2 + c) * self.num_outcomes + k
    }

    /// Unmitigated outcome law: control always +1, sign always +1.
    pub fn direct(p: &[f64]) -> Self {
        let k = p.len();
        let mut probs = vec![0.0; 4 * k];
        probs[..k].copy_from_slice(p);
        Self { num_outcomes: k, gamma: 1.0, probs }
    }

    /// Purification law without cancellation.
    pub fn from_blocks(b: &PurifiedBlocks) -> Self {
        let [plus, minus] = b.control_outcome_law();
        let k = plus.len();
        let mut probs = vec![0.0; 4 * k];
        probs[..k].copy_from_slice(&plus);
        probs[k..2 * k].copy_from_slice(&minus);
        let mut out = Self { num_outcomes: k, gamma: 1.0, probs };
        out.clean();
        out
    }

    /// Sign-partitioned law from the mixture and signed simulations:
    /// `P(s,c,k) = (A(c,k) + s·B(c,k))/2`.
    pub fn from_pec(mixture: &PurifiedBlocks, signed: &PurifiedBlocks, gamma: f64) -> Self {
        let a = mixture.control_outcome_law();
        let b = signed.control_outcome_law();
        let k = a[0].len();
        let mut probs = vec![0.0; 4 * k];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            for cc in 0..2 {
                for kk in 0..k {
                    probs[(s * 2 + cc) * k + kk] = (a[cc][kk] + sign * b[cc][kk]) / 2.0;
                }
            }
        }
        let mut out = Self { num_outcomes: k, gamma, probs };
        out.clean();
        out
    }

    fn clean(&mut self) {
        for p in &mut self.probs {
            if *p < 0.0 && *p > -1e-12 {
                *p = 0.0;
            }
        }
    }

    /// `γ Σ s·c·P(s,c,k)` per outcome.
    pub fn numerators(&self) -> Vec<f64> {
        (0..self.num_outcomes)
            .map(|k| {
                let mut acc = 0.0;
                for s in 0..2 {
                    for cc in 0..2 {
                        let w = if (s + cc) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += w * self.probs[self.index(s, cc, k)];
                    }
                }
                self.gamma * acc
            })
            .collect()
    }

    pub fn denominator(&self) -> f64 {
        self.numerators().iter().sum()
    }
}

/// Exact per-outcome expectations of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// `⟨X⊗|k⟩⟨k|⟩` (or the plain probability for `none`).
    pub numerators: Vec<f64>,
    pub denominator: f64,
    pub gamma: f64,
    /// Present when requested, for shot sampling.
    pub joint: Option<JointDistribution>,
}

impl Evaluation {
    /// Normalized outcome estimates `num_k / den`.
    pub fn outcome_estimates(&self) -> Result<Vec<f64>> {
        if self.denominator.abs() < DENOMINATOR_FLOOR {
            return Err(Error::DenominatorUnderflow(self.denominator));
        }
        Ok(self.numerators.iter().map(|x| x / self.denominator).collect())
    }
}

/// Everything needed to evaluate one method on one circuit.
#[derive(Clone, Copy, Debug)]
pub struct Setup<'a> {
    pub circuit: &'a Circuit,
    pub probe: &'a DensityMatrix,
    pub noise: &'a NoiseModel,
    pub config: &'a PurificationConfig,
    pub mask: &'a NoiseLocationMask,
    /// Noise the cancellation is calibrated against; defaults to the true
    /// target-after noise.
    pub pec_assumed: Option<LocalNoise>,
}

impl Setup<'_> {
    pub fn pec_plan(&self) -> Result<Option<PecPlan>> {
        if !self.config.method.uses_pec() {
            return Ok(None);
        }
        let layers = if self.config.method.is_channel_purification() { self.config.layers } else { 1 };
        let plan = plan_pec(layers, self.circuit.num_qubits, self.noise, self.mask, self.pec_assumed)?;
        if self.config.pec_mode == PecMode::ExactBranchSum && plan.branch_count() > BRANCH_CAP as u128 {
            return Err(Error::BranchCapExceeded { branches: plan.branch_count(), cap: BRANCH_CAP });
        }
        Ok(Some(plan))
    }

    fn blocks(&self, pec: Option<(&PecPlan, PecInsertion<'_>)>) -> Result<PurifiedBlocks> {
        match self.config.method {
            Method::Vcp | Method::Pvcp => {
                simulate_vcp(self.circuit, self.probe, self.noise, self.config, self.mask, pec)
            }
            Method::Vsp | Method::Pvsp => {
                let noisy = build_noisy(self)?;
                simulate_vsp(&noisy, self.config.order, self.noise, self.mask, pec)
            }
            Method::None => Err(Error::Config("no purification circuit for method none".into())),
        }
    }

    /// Exact expectations; with `joint`, also the shot law.
    pub fn evaluate(&self, joint: bool) -> Result<Evaluation> {
        self.config.validate()?;
        if self.config.method == Method::None {
            let rho = build_noisy(self)?;
            let p = rho.diagonal();
            return Ok(Evaluation {
                numerators: p.clone(),
                denominator: 1.0,
                gamma: 1.0,
                joint: joint.then(|| JointDistribution::direct(&p)),
            });
        }
        let plan = self.pec_plan()?;
        match &plan {
            None => {
                let b = self.blocks(None)?;
                Ok(Evaluation {
                    numerators: b.outcome_numerators(),
                    denominator: b.denominator(),
                    gamma: 1.0,
                    joint: joint.then(|| JointDistribution::from_blocks(&b)),
                })
            }
            Some(plan) => {
                let gamma = plan.gamma();
                if joint {
                    let mix = self.blocks(Some((plan, PecInsertion::Mixture)))?;
                    let sgn = self.blocks(Some((plan, PecInsertion::Signed)))?;
                    let exact = sgn.scaled(gamma);
                    Ok(Evaluation {
                        numerators: exact.outcome_numerators(),
                        denominator: exact.denominator(),
                        gamma,
                        joint: Some(JointDistribution::from_pec(&mix, &sgn, gamma)),
                    })
                } else {
                    let b = self.blocks(Some((plan, PecInsertion::Quasi)))?;
                    Ok(Evaluation {
                        numerators: b.outcome_numerators(),
                        denominator: b.denominator(),
                        gamma,
                        joint: None,
                    })
                }
            }
        }
    }

    /// Ratio for an arbitrary target observable.
    pub fn ratio(&self, obs: &ComplexMatrix) -> Result<RatioExpectation> {
        self.config.validate()?;
        if self.config.method == Method::None {
            let rho = build_noisy(self)?;
            return RatioExpectation::new(crate::linalg::expectation(obs, &rho)?, 1.0, 1.0);
        }
        let plan = self.pec_plan()?;
        let pec = plan.as_ref().map(|p| (p, PecInsertion::Quasi));
        let gamma = plan.as_ref().map_or(1.0, PecPlan::gamma);
        self.blocks(pec)?.ratio(obs, gamma)
    }

    /// Blocks for one explicit cancellation branch.
    pub fn branch_blocks(&self, plan: &PecPlan, branch: &[usize]) -> Result<PurifiedBlocks> {
        self.blocks(Some((plan, PecInsertion::Branch(branch))))
    }
}

fn build_noisy(s: &Setup<'_>) -> Result<DensityMatrix> {
    crate::circuit::build_noisy_target(s.circuit, s.probe, s.noise)
}
