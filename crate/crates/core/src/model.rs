//! Finite-range local energies `S(ξ₀, …, ξ_r) = Σ_j f_j(ξ₀, ξ_j)`.
//!
//! A model is a list of pair interactions `f_j`, one per offset `j = 1..=r`,
//! plus the twist constant `λ` and the second-derivative bound `K`. The
//! on-site potential is carried by the first argument of `f₁`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("twist violation: sampled twist constant {lambda_hat} is not positive")]
    TwistViolation { lambda_hat: f64 },
    #[error("invalid model definition: {0}")]
    Invalid(String),
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Second derivatives `(∂₁₁f, ∂₁₂f, ∂₂₂f)` of a pair interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHessian {
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

/// A `C²` pair interaction `f(ν, μ)` between a site and its `j`-th neighbour.
pub trait PairFunction: fmt::Debug + Send + Sync {
    fn value(&self, nu: f64, mu: f64) -> f64;
    fn gradient(&self, nu: f64, mu: f64) -> [f64; 2];
    fn hessian(&self, nu: f64, mu: f64) -> PairHessian;

    /// `f(ν + dν, μ + dμ) − f(ν, μ)`. Implementations should avoid the
    /// cancellation of the naive difference when `ν, μ` are large.
    fn increment(&self, nu: f64, mu: f64, dnu: f64, dmu: f64) -> f64 {
        self.value(nu + dnu, mu + dmu) - self.value(nu, mu)
    }
}

/// One Fourier mode `A cos(2π m ξ + φ)` of the on-site potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteHarmonic {
    pub amplitude: f64,
    pub frequency: u32,
    pub phase: f64,
}

impl SiteHarmonic {
    fn angle(&self, xi: f64) -> f64 {
        2.0 * PI * self.frequency as f64 * xi + self.phase
    }

    fn omega(&self) -> f64 {
        2.0 * PI * self.frequency as f64
    }
}

/// `f(ν, μ) = a/2 (ν − μ)² + V(ν)` with `V` a finite cosine series.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPair {
    pub stiffness: f64,
    pub site: Vec<SiteHarmonic>,
}

impl HarmonicPair {
    pub fn new(stiffness: f64) -> Self {
        HarmonicPair { stiffness, site: Vec::new() }
    }

    pub fn with_site(stiffness: f64, site: Vec<SiteHarmonic>) -> Self {
        HarmonicPair { stiffness, site }
    }

    pub fn site_value(&self, xi: f64) -> f64 {
        self.site.iter().map(|h| h.amplitude * h.angle(xi).cos()).sum()
    }

    pub fn site_derivative(&self, xi: f64) -> f64 {
        self.site.iter().map(|h| -h.amplitude * h.omega() * h.angle(xi).sin()).sum()
    }

    pub fn site_second_derivative(&self, xi: f64) -> f64 {
        self.site.iter().map(|h| -h.amplitude * h.omega() * h.omega() * h.angle(xi).cos()).sum()
    }
}

impl PairFunction for HarmonicPair {
    fn value(&self, nu: f64, mu: f64) -> f64 {
        let d = nu - mu;
        0.5 * self.stiffness * d * d + self.site_value(nu)
    }

    fn gradient(&self, nu: f64, mu: f64) -> [f64; 2] {
        let d = nu - mu;
        [self.stiffness * d + self.site_derivative(nu), -self.stiffness * d]
    }

    fn hessian(&self, nu: f64, _mu: f64) -> PairHessian {
        PairHessian { d11: self.stiffness + self.site_second_derivative(nu), d12: -self.stiffness, d22: self.stiffness }
    }

    fn increment(&self, nu: f64, mu: f64, dnu: f64, dmu: f64) -> f64 {
        let d = nu - mu;
        let delta = dnu - dmu;
        let coupling = 0.5 * self.stiffness * delta * (2.0 * d + delta);
        // cos(θ + h) − cos(θ) = −2 sin(h/2) sin(θ + h/2)
        let site: f64 = self
            .site
            .iter()
            .map(|h| {
                let half = 0.5 * h.omega() * dnu;
                -2.0 * h.amplitude * half.sin() * (h.angle(nu) + half).sin()
            })
            .sum();
        coupling + site
    }
}

/// A pair interaction multiplied by a constant factor.
#[derive(Debug, Clone)]
pub struct ScaledPair {
    pub factor: f64,
    pub inner: Arc<dyn PairFunction>,
}

impl PairFunction for ScaledPair {
    fn value(&self, nu: f64, mu: f64) -> f64 {
        self.factor * self.inner.value(nu, mu)
    }

    fn gradient(&self, nu: f64, mu: f64) -> [f64; 2] {
        let [a, b] = self.inner.gradient(nu, mu);
        [self.factor * a, self.factor * b]
    }

    fn hessian(&self, nu: f64, mu: f64) -> PairHessian {
        let h = self.inner.hessian(nu, mu);
        PairHessian { d11: self.factor * h.d11, d12: self.factor * h.d12, d22: self.factor * h.d22 }
    }

    fn increment(&self, nu: f64, mu: f64, dnu: f64, dmu: f64) -> f64 {
        self.factor * self.inner.increment(nu, mu, dnu, dmu)
    }
}

#[derive(Debug, Clone)]
pub struct InteractionPotential {
    pub offset: usize,
    pub pair: Arc<dyn PairFunction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TwistMode {
    #[default]
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub lambda: f64,
    pub big_k: f64,
    pub provenance: Provenance,
}

/// Sampling lattice used by [`validate_model`] and [`estimate_constants`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis of the period square `[0,1)²`.
    pub points_per_axis: usize,
    /// Gaps `|ν − μ|` probed for coercivity.
    pub ray_radii: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_axis: 64, ray_radii: vec![1.0, 2.0, 4.0, 8.0, 16.0] }
    }
}

impl GridSpec {
    fn axis(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        let n = self.points_per_axis.max(1);
        (0..n).map(move |a| a as f64 / n as f64)
    }

    fn square(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.axis().flat_map(move |nu| self.axis().map(move |mu| (nu, mu)))
    }
}

/// A local energy of interaction range `r`.
#[derive(Debug, Clone)]
pub struct LocalEnergyModel {
    range: usize,
    potentials: Vec<InteractionPotential>,
    constants: ModelConstants,
    twist_mode: TwistMode,
}

impl LocalEnergyModel {
    /// Builds a model from its pair interactions. Without explicit constants,
    /// `λ` and `K` are sampled on the default grid.
    pub fn new(
        mut potentials: Vec<InteractionPotential>,
        twist_mode: TwistMode,
        constants: Option<(f64, f64)>,
    ) -> Result<Self, ModelError> {
        if potentials.is_empty() {
            return Err(ModelError::Invalid("at least one interaction is required".into()));
        }
        potentials.sort_by_key(|p| p.offset);
        let range = potentials.len();
        for (idx, pot) in potentials.iter().enumerate() {
            if pot.offset != idx + 1 {
                return Err(ModelError::Invalid(format!(
                    "interaction offsets must be exactly 1..={range}, each once (found offset {} at position {})",
                    pot.offset,
                    idx + 1
                )));
            }
        }
        let mut model = LocalEnergyModel {
            range,
            potentials,
            constants: ModelConstants { lambda: 0.0, big_k: 0.0, provenance: Provenance::Sampled },
            twist_mode,
        };
        model.constants = match constants {
            Some((lambda, big_k)) => ModelConstants { lambda, big_k, provenance: Provenance::Analytic },
            None => {
                let (lambda, big_k) = sample_constants(&model, &GridSpec::default());
                ModelConstants { lambda, big_k, provenance: Provenance::Sampled }
            }
        };
        if !(model.constants.big_k > 0.0) || model.constants.lambda > model.constants.big_k {
            return Err(ModelError::Invalid(format!(
                "constants must satisfy λ ≤ K and K > 0 (λ = {}, K = {})",
                model.constants.lambda, model.constants.big_k
            )));
        }
        Ok(model)
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn potentials(&self) -> &[InteractionPotential] {
        &self.potentials
    }

    pub fn constants(&self) -> ModelConstants {
        self.constants
    }

    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }

    pub fn big_k(&self) -> f64 {
        self.constants.big_k
    }

    pub fn twist_mode(&self) -> TwistMode {
        self.twist_mode
    }

    /// The same model with every interaction multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        if !(factor > 0.0) {
            return Err(ModelError::Contract(format!("scale factor must be positive, got {factor}")));
        }
        let potentials = self
            .potentials
            .iter()
            .map(|p| InteractionPotential {
                offset: p.offset,
                pair: Arc::new(ScaledPair { factor, inner: p.pair.clone() }),
            })
            .collect();
        let constants = match self.constants.provenance {
            Provenance::Analytic => Some((factor * self.constants.lambda, factor * self.constants.big_k)),
            Provenance::Sampled => None,
        };
        LocalEnergyModel::new(potentials, self.twist_mode, constants)
    }

    /// `S` at `r + 1` consecutive positions.
    pub fn eval_s(&self, values: &[f64]) -> Result<f64, ModelError> {
        self.check_len(values)?;
        Ok(self.local_energy(values))
    }

    /// `∂_k S` and the row `(∂_{k,m} S)_{m=0..=r}`.
    pub fn eval_partials_s(&self, values: &[f64], k: usize) -> Result<Partials, ModelError> {
        self.check_len(values)?;
        if k > self.range {
            return Err(ModelError::Contract(format!("partial index {k} out of range 0..={}", self.range)));
        }
        let mut second = vec![0.0; self.range + 1];
        let first = if k == 0 {
            let mut first = 0.0;
            for pot in &self.potentials {
                let j = pot.offset;
                first += pot.pair.gradient(values[0], values[j])[0];
                let h = pot.pair.hessian(values[0], values[j]);
                second[0] += h.d11;
                second[j] += h.d12;
            }
            first
        } else {
            let pot = &self.potentials[k - 1];
            let h = pot.pair.hessian(values[0], values[k]);
            second[0] = h.d12;
            second[k] = h.d22;
            pot.pair.gradient(values[0], values[k])[1]
        };
        Ok(Partials { first, second })
    }

    fn check_len(&self, values: &[f64]) -> Result<(), ModelError> {
        if values.len() != self.range + 1 {
            return Err(ModelError::Contract(format!(
                "S takes {} consecutive values, got {}",
                self.range + 1,
                values.len()
            )));
        }
        Ok(())
    }

    /// `∂_k W(x) = Σ_{i=k−r}^{k} ∂_k S_i(x)` together with the sum of the
    /// absolute values of its contributions. `None` if `get` misses a site.
    pub fn site_residual(&self, get: impl Fn(i64) -> Option<f64>, k: i64) -> Option<(f64, f64)> {
        let xk = get(k)?;
        let mut total = 0.0;
        let mut scale = 0.0;
        for pot in &self.potentials {
            let j = pot.offset as i64;
            let ahead = pot.pair.gradient(xk, get(k + j)?)[0];
            let behind = pot.pair.gradient(get(k - j)?, xk)[1];
            total += ahead + behind;
            scale += ahead.abs() + behind.abs();
        }
        Some((total, scale))
    }

    /// Unchecked `S`; `values` must hold at least `r + 1` entries.
    pub(crate) fn local_energy(&self, values: &[f64]) -> f64 {
        self.potentials.iter().map(|p| p.pair.value(values[0], values[p.offset])).sum()
    }

    /// Unchecked `S(values + dv) − S(values)`.
    pub(crate) fn local_increment(&self, values: &[f64], dv: &[f64]) -> f64 {
        self.potentials.iter().map(|p| p.pair.increment(values[0], values[p.offset], dv[0], dv[p.offset])).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partials {
    pub first: f64,
    pub second: Vec<f64>,
}

fn cosine_series(amplitude: f64) -> Vec<SiteHarmonic> {
    if amplitude == 0.0 {
        return Vec::new();
    }
    // amplitude/(2π)² · (1 − cos 2πξ)
    let a = amplitude / (4.0 * PI * PI);
    vec![
        SiteHarmonic { amplitude: a, frequency: 0, phase: 0.0 },
        SiteHarmonic { amplitude: -a, frequency: 1, phase: 0.0 },
    ]
}

/// Nearest-neighbour Frenkel-Kontorova model
/// `S = ½(ξ₀ − ξ₁)² + amplitude/(2π)² (1 − cos 2πξ₀)`.
pub fn fk_classic(amplitude: f64) -> LocalEnergyModel {
    fk_spec(amplitude).to_model_with_constants(Some((1.0, 1.0 + amplitude.abs()))).expect("preset is well formed")
}

/// Second-neighbour model
/// `S = b/2 (ξ₀ − ξ₁)² + (1 − b)/2 (ξ₀ − ξ₂)² + amplitude/(2π)² (1 − cos 2πξ₀)`.
pub fn second_neighbor(b: f64, amplitude: f64) -> LocalEnergyModel {
    let lambda = b.min(1.0 - b).max(0.0);
    let big_k = 2.0 * (b.abs() + amplitude.abs()).max((1.0 - b).abs());
    second_neighbor_spec(b, amplitude).to_model_with_constants(Some((lambda, big_k))).expect("preset is well formed")
}

pub fn fk_spec(amplitude: f64) -> ModelSpec {
    ModelSpec {
        range: 1,
        couplings: vec![CouplingSpec { offset: 1, quadratic: 1.0 }],
        site_potential: cosine_series(amplitude),
        twist_mode: TwistMode::Strong,
    }
}

pub fn second_neighbor_spec(b: f64, amplitude: f64) -> ModelSpec {
    ModelSpec {
        range: 2,
        couplings: vec![CouplingSpec { offset: 1, quadratic: b }, CouplingSpec { offset: 2, quadratic: 1.0 - b }],
        site_potential: cosine_series(amplitude),
        twist_mode: TwistMode::Strong,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub offset: usize,
    pub quadratic: f64,
}

/// JSON model document: quadratic couplings per offset and a cosine series
/// for the on-site potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub range: usize,
    pub couplings: Vec<CouplingSpec>,
    #[serde(default)]
    pub site_potential: Vec<SiteHarmonic>,
    #[serde(default)]
    pub twist_mode: TwistMode,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_model(&self) -> Result<LocalEnergyModel, ModelError> {
        self.to_model_with_constants(None)
    }

    fn to_model_with_constants(&self, constants: Option<(f64, f64)>) -> Result<LocalEnergyModel, ModelError> {
        if self.range == 0 {
            return Err(ModelError::Invalid("range must be at least 1".into()));
        }
        if self.couplings.len() != self.range {
            return Err(ModelError::Invalid(format!(
                "range {} requires exactly {} couplings, got {}",
                self.range,
                self.range,
                self.couplings.len()
            )));
        }
        let potentials = self
            .couplings
            .iter()
            .map(|c| {
                let site = if c.offset == 1 { self.site_potential.clone() } else { Vec::new() };
                InteractionPotential {
                    offset: c.offset,
                    pair: Arc::new(HarmonicPair::with_site(c.quadratic, site)) as Arc<dyn PairFunction>,
                }
            })
            .collect();
        LocalEnergyModel::new(potentials, self.twist_mode, constants)
    }
}

/// Raw sampled `(λ̂, K̂)`; `λ̂` may be non-positive.
fn sample_constants(model: &LocalEnergyModel, grid: &GridSpec) -> (f64, f64) {
    let mut min_twist = f64::INFINITY;
    let mut max_second = 0.0_f64;
    for pot in &model.potentials {
        let counts_for_twist = model.twist_mode == TwistMode::Strong || pot.offset == 1;
        for (nu, mu) in grid.square() {
            let h = pot.pair.hessian(nu, mu);
            if counts_for_twist {
                min_twist = min_twist.min(-h.d12);
            }
            max_second = max_second.max(h.d11.abs()).max(h.d12.abs()).max(h.d22.abs());
        }
    }
    (min_twist, model.range as f64 * max_second)
}

/// Sampled twist constant and second-derivative bound.
pub fn estimate_constants(model: &LocalEnergyModel, grid: &GridSpec) -> Result<(f64, f64), ModelError> {
    let (lambda_hat, big_k_hat) = sample_constants(model, grid);
    if !(lambda_hat > 0.0) {
        return Err(ModelError::TwistViolation { lambda_hat });
    }
    Ok((lambda_hat, big_k_hat))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub name: String,
    pub passed: bool,
    /// Worst sampled value of the tested quantity.
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub provenance: Provenance,
    pub conditions: Vec<ConditionResult>,
    pub all_passed: bool,
}

impl ValidationReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

const IDENTITY_TOL: f64 = 1e-10;

/// Samples the four local-energy conditions on `grid`. Failures are report
/// entries, never errors.
pub fn validate_model(model: &LocalEnergyModel, grid: &GridSpec) -> ValidationReport {
    let r = model.range as f64;
    let lambda = model.lambda();
    let big_k = model.big_k();

    let mut periodicity = 0.0_f64;
    let mut max_second = 0.0_f64;
    let mut twist_worst = f64::INFINITY;
    let mut weak_max_mixed = f64::NEG_INFINITY;
    let mut weak_first = f64::INFINITY;
    let mut coercive = true;
    let mut coercive_margin = f64::INFINITY;
    let mut coercive_detail = String::new();

    for pot in &model.potentials {
        let f = &pot.pair;
        let mut square_max = f64::NEG_INFINITY;
        for (nu, mu) in grid.square() {
            let v = f.value(nu, mu);
            square_max = square_max.max(v);
            let shifted = f.value(nu + 1.0, mu + 1.0);
            periodicity = periodicity.max((shifted - v).abs() / v.abs().max(1.0));
            let h = f.hessian(nu, mu);
            max_second = max_second.max(h.d11.abs()).max(h.d12.abs()).max(h.d22.abs());
            twist_worst = twist_worst.min(-h.d12);
            weak_max_mixed = weak_max_mixed.max(h.d12);
            if pot.offset == 1 {
                weak_first = weak_first.min(-h.d12);
            }
        }

        let mut previous = f64::NEG_INFINITY;
        for &radius in &grid.ray_radii {
            let ray_min = grid
                .axis()
                .flat_map(|nu| [f.value(nu, nu + radius), f.value(nu, nu - radius)])
                .fold(f64::INFINITY, f64::min);
            if !(ray_min > previous) {
                coercive = false;
                coercive_detail = format!("offset {}: ray minimum does not grow at radius {radius}", pot.offset);
            }
            previous = ray_min;
        }
        let margin = previous - square_max;
        coercive_margin = coercive_margin.min(margin);
        if !(margin > 0.0) && coercive {
            coercive = false;
            coercive_detail =
                format!("offset {}: outermost ray minimum does not exceed the period-square maximum", pot.offset);
        }
    }

    let mut conditions = Vec::with_capacity(4);
    conditions.push(ConditionResult {
        name: "periodicity".into(),
        passed: periodicity <= IDENTITY_TOL,
        worst: periodicity,
        threshold: IDENTITY_TOL,
        detail: "max |f_j(ν+1, μ+1) − f_j(ν, μ)| (relative to max(1, |f|))".into(),
    });
    conditions.push(ConditionResult {
        name: "second_derivative_bound".into(),
        passed: max_second <= big_k / r + IDENTITY_TOL,
        worst: max_second,
        threshold: big_k / r,
        detail: "max |∂_{ik} f_j| compared to K/r".into(),
    });
    conditions.push(ConditionResult {
        name: "coercivity".into(),
        passed: coercive,
        worst: coercive_margin,
        threshold: 0.0,
        detail: if coercive_detail.is_empty() {
            "ray minima grow with |ν − μ| and exceed the period-square maximum".into()
        } else {
            coercive_detail
        },
    });
    let twist = match model.twist_mode {
        TwistMode::Strong => ConditionResult {
            name: "twist".into(),
            passed: lambda > 0.0 && twist_worst > 0.0 && twist_worst >= lambda - IDENTITY_TOL,
            worst: twist_worst,
            threshold: lambda,
            detail: "min −∂₁∂₂f_j over all offsets compared to λ (strong mode)".into(),
        },
        TwistMode::Weak => ConditionResult {
            name: "twist".into(),
            passed: weak_max_mixed <= IDENTITY_TOL
                && lambda > 0.0
                && weak_first > 0.0
                && weak_first >= lambda - IDENTITY_TOL,
            worst: weak_first,
            threshold: lambda,
            detail: format!("weak mode: max ∂₁∂₂f_j = {weak_max_mixed:e} must be ≤ 0; min −∂₁∂₂f₁ compared to λ"),
        },
    };
    conditions.push(twist);

    let all_passed = conditions.iter().all(|c| c.passed);
    ValidationReport { provenance: Provenance::Sampled, conditions, all_passed }
}
