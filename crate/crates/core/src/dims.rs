//! Dimension laboratory: explicit pseudo-dimension bounds, brute-force
//! fat-shattering lower bounds on small classes and greedy cover estimates.
//!
//! Every dimension found here by search is a lower bound. Upper bounds come
//! only from the formulas in [`crate::learner::bounds`].

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::gg::{gg_b_constants, make_cat_state, GGChannel, GGEffect, GGState};
use crate::learner::bounds::{
    b_tilde, covering_bound_gg, pdim_gaussian, pdim_gaussian_photocount, pdim_gg,
};
use crate::learner::hypothesis::HypothesisClass;
use crate::learner::optim::{minimize, EsConfig};
use crate::learner::{probability, LearnObject, Probe, Readout};
use crate::photodetection::PhotoCountEffect;
use crate::symplectic::{GaussianChannel, GaussianState, GeneralDyneEffect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    #[serde(rename = "f_g")]
    FG,
    #[serde(rename = "f_gp")]
    FGp,
    #[serde(rename = "f_gg")]
    FGg,
    Synthetic,
}

impl std::str::FromStr for ClassTag {
    type Err = CvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f_g" => Ok(ClassTag::FG),
            "f_gp" => Ok(ClassTag::FGp),
            "f_gg" => Ok(ClassTag::FGg),
            "synthetic" => Ok(ClassTag::Synthetic),
            other => Err(CvError::InvalidParameter(format!("unknown class tag {other:?}"))),
        }
    }
}

/// Explicit pseudo-dimension bound with the proof constants, the sum rule
/// applied as a plain sum and the encoding order multiplying the parameter count.
pub fn pdim_upper_bound(tag: ClassTag, n: usize, k: usize, ell: usize) -> Result<f64> {
    if n == 0 {
        return Err(CvError::InvalidParameter("n must be at least 1".into()));
    }
    let enc = ell.max(1) as f64;
    match tag {
        ClassTag::FG => Ok(enc * pdim_gaussian(n)),
        ClassTag::FGp if k >= 1 => Ok(enc * pdim_gaussian_photocount(n, k)),
        ClassTag::FGp => Err(CvError::InvalidParameter("photon cutoff K must be at least 1".into())),
        ClassTag::FGg => Ok(enc * pdim_gg(n)),
        ClassTag::Synthetic => Err(CvError::Unsupported("no formula bound for synthetic classes".into())),
    }
}

/// A parametrised family `x ↦ f_θ(x)` with values in `[lo, hi]`.
pub trait FunctionClass: Sync {
    fn tag(&self) -> ClassTag;
    fn name(&self) -> String;
    fn n(&self) -> usize {
        1
    }
    /// Photon cutoff relevant for the formula bound.
    fn cutoff(&self) -> usize {
        0
    }
    fn param_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64;
    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn sample_input(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.input_dim()).map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal)).collect()
    }
    fn sample_param(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.param_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// `f_c(x) = c`, clamped to `[0, 1]`.
pub struct ConstantClass;

impl FunctionClass for ConstantClass {
    fn tag(&self) -> ClassTag {
        ClassTag::Synthetic
    }
    fn name(&self) -> String {
        "constant".into()
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn eval(&self, theta: &[f64], _x: &[f64]) -> f64 {
        theta[0].clamp(0.0, 1.0)
    }
    fn sample_param(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random::<f64>()]
    }
}

/// A single fixed function, `exp(−x²/2)`.
pub struct SingletonClass;

impl FunctionClass for SingletonClass {
    fn tag(&self) -> ClassTag {
        ClassTag::Synthetic
    }
    fn name(&self) -> String {
        "singleton".into()
    }
    fn param_dim(&self) -> usize {
        0
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn eval(&self, _theta: &[f64], x: &[f64]) -> f64 {
        (-0.5 * x[0] * x[0]).exp()
    }
}

/// `f_{a,w}(x) = a·(1 + cos(w x))/2` with `|a| ≤ scale`. Used for product-cover checks.
pub struct ScaledWaveClass {
    pub scale: f64,
}

impl FunctionClass for ScaledWaveClass {
    fn tag(&self) -> ClassTag {
        ClassTag::Synthetic
    }
    fn name(&self) -> String {
        format!("wave(scale={})", self.scale)
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.scale * theta[0].tanh() * 0.5 * (1.0 + (theta[1] * x[0]).cos())
    }
    fn range(&self) -> (f64, f64) {
        (-self.scale, self.scale)
    }
}

fn heterodyne_probe(n: usize, x: &[f64]) -> Probe {
    Probe::ForState {
        channel: GaussianChannel::identity(n),
        readout: Readout::Dyne(GeneralDyneEffect::heterodyne(DVector::from_column_slice(x))),
    }
}

/// Heterodyne outcome densities `(d, X, Y, m′, I/2) ↦ P_g` of Gaussian states,
/// restricted to the identity channel. Inputs are outcome points.
pub struct GaussianStateClass {
    pub n: usize,
    /// Fix the covariance to the vacuum and learn only the mean.
    pub displacement_only: bool,
}

impl GaussianStateClass {
    fn state(&self, theta: &[f64]) -> Result<LearnObject> {
        if self.displacement_only {
            Ok(LearnObject::State(GaussianState {
                mean: DVector::from_column_slice(theta),
                cov: nalgebra::DMatrix::identity(2 * self.n, 2 * self.n) * 0.5,
            }))
        } else {
            HypothesisClass::GaussianState { n: self.n }.decode(theta)
        }
    }
}

impl FunctionClass for GaussianStateClass {
    fn tag(&self) -> ClassTag {
        ClassTag::FG
    }
    fn name(&self) -> String {
        if self.displacement_only { format!("f_g displacement n={}", self.n) } else { format!("f_g n={}", self.n) }
    }
    fn n(&self) -> usize {
        self.n
    }
    fn param_dim(&self) -> usize {
        if self.displacement_only { 2 * self.n } else { HypothesisClass::GaussianState { n: self.n }.param_dim() }
    }
    fn input_dim(&self) -> usize {
        2 * self.n
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.state(theta).and_then(|s| probability(&s, &heterodyne_probe(self.n, x))).unwrap_or(0.0)
    }
}

/// Photon-count probabilities of displaced single-mode Gaussian states.
/// Input `[d_x, d_p, k]`: a known displacement followed by the count `k ≤ K`.
pub struct GaussianPhotocountClass {
    pub cutoff: usize,
}

impl FunctionClass for GaussianPhotocountClass {
    fn tag(&self) -> ClassTag {
        ClassTag::FGp
    }
    fn name(&self) -> String {
        format!("f_gp n=1 K={}", self.cutoff)
    }
    fn cutoff(&self) -> usize {
        self.cutoff
    }
    fn param_dim(&self) -> usize {
        HypothesisClass::GaussianState { n: 1 }.param_dim()
    }
    fn input_dim(&self) -> usize {
        3
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        let k = x[2].round().clamp(0.0, self.cutoff as f64) as usize;
        let probe = Probe::ForState {
            channel: GaussianChannel::displacement(DVector::from_column_slice(&x[..2])),
            readout: Readout::Photocount(PhotoCountEffect::single(vec![k])),
        };
        HypothesisClass::GaussianState { n: 1 }
            .decode(theta)
            .and_then(|s| probability(&s, &probe))
            .unwrap_or(0.0)
    }
    fn sample_input(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.random_range(0..=self.cutoff) as f64,
        ]
    }
}

/// Heterodyne densities of Gaussian moves of a fixed GG template
/// (fixed combination coefficients).
pub struct GgMovedClass {
    pub template: GGState,
}

impl GgMovedClass {
    pub fn cat(alpha: f64) -> Result<Self> {
        Ok(Self { template: make_cat_state(num_complex::Complex64::new(alpha, 0.0), 1)? })
    }

    fn class(&self) -> HypothesisClass {
        HypothesisClass::GgFixedCoeff { template: self.template.clone() }
    }

    /// Largest `b1`, `b2` and smallest `b3` seen over `samples` random members
    /// measured by heterodyne.
    pub fn measured_b_constants(&self, samples: usize, seed: u64) -> Result<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.template.n;
        let eff = GGEffect::from_dyne(&GeneralDyneEffect::heterodyne(DVector::zeros(2 * n)));
        let ch = GGChannel::identity(n);
        let (mut b1, mut b2, mut b3) = (0.0f64, 0.0f64, f64::INFINITY);
        for _ in 0..samples.max(1) {
            let theta = self.sample_param(&mut rng);
            let LearnObject::GgState(g) = self.class().decode(&theta)? else { unreachable!() };
            let c = gg_b_constants(&g, &ch, &eff)?;
            b1 = b1.max(c.b1);
            b2 = b2.max(c.b2);
            b3 = b3.min(c.b3);
        }
        Ok((b1, b2, b3))
    }
}

impl FunctionClass for GgMovedClass {
    fn tag(&self) -> ClassTag {
        ClassTag::FGg
    }
    fn name(&self) -> String {
        format!("f_gg moved template n={}", self.template.n)
    }
    fn n(&self) -> usize {
        self.template.n
    }
    fn param_dim(&self) -> usize {
        self.class().param_dim()
    }
    fn input_dim(&self) -> usize {
        2 * self.template.n
    }
    fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.class()
            .decode(theta)
            .and_then(|s| probability(&s, &heterodyne_probe(self.template.n, x)))
            .unwrap_or(0.0)
    }
    fn sample_param(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.param_dim()).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterCertificate {
    pub gamma: f64,
    pub inputs: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    /// `witnesses[p]` realises pattern `p`; bit `i` of `p` is the side of input `i`.
    pub witnesses: Vec<Vec<f64>>,
}

impl ShatterCertificate {
    pub fn k(&self) -> usize {
        self.inputs.len()
    }
}

/// Margin violation of `theta` for `pattern`; non-positive means satisfied.
fn violation(class: &dyn FunctionClass, theta: &[f64], inputs: &[Vec<f64>], alpha: &[f64], gamma: f64, pattern: usize) -> f64 {
    inputs
        .iter()
        .zip(alpha)
        .enumerate()
        .map(|(i, (x, &a))| {
            let f = class.eval(theta, x);
            if pattern >> i & 1 == 1 { a + gamma - f } else { f - (a - gamma) }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Re-check every witness by direct evaluation.
pub fn verify_certificate(class: &dyn FunctionClass, cert: &ShatterCertificate) -> bool {
    let k = cert.k();
    cert.thresholds.len() == k
        && cert.witnesses.len() == 1 << k
        && cert
            .witnesses
            .iter()
            .enumerate()
            .all(|(p, w)| w.len() == class.param_dim() && violation(class, w, &cert.inputs, &cert.thresholds, cert.gamma, p) <= 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShatterConfig {
    pub gamma: f64,
    pub k_max: usize,
    /// Total function-evaluation budget.
    pub budget: usize,
    /// Input sets tried per `k`.
    pub attempts: usize,
    pub seed: u64,
}

impl Default for ShatterConfig {
    fn default() -> Self {
        Self { gamma: 0.1, k_max: 6, budget: 1_000_000, attempts: 4, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterResult {
    pub class: String,
    pub gamma: f64,
    /// Largest certified `k`; 0 when none.
    pub k_certified: usize,
    pub certificate: Option<ShatterCertificate>,
    pub evals: usize,
    /// False when the budget ran out before the search finished.
    pub exhaustive: bool,
}

/// Seed for a (k, attempt, pattern) triple, independent of evaluation order.
fn sub_seed(seed: u64, k: usize, attempt: usize, pattern: usize) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [k as u64, attempt as u64, pattern as u64] {
        h = (h ^ v).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
    }
    h
}

fn search_pattern(
    class: &dyn FunctionClass,
    inputs: &[Vec<f64>],
    alpha: &[f64],
    gamma: f64,
    pattern: usize,
    start: &[f64],
    evals: usize,
    seed: u64,
) -> (Vec<f64>, f64, usize) {
    if class.param_dim() == 0 {
        return (vec![], violation(class, &[], inputs, alpha, gamma, pattern), 1);
    }
    let cfg = EsConfig { max_evals: evals, seed, restarts: 1, target: Some(-1e-3), ..EsConfig::default() };
    let res = minimize(|t: &[f64]| violation(class, t, inputs, alpha, gamma, pattern), start, &cfg);
    (res.x, res.f, res.evals)
}

#[cfg(feature = "parallel")]
fn map_patterns<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_patterns<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).map(f).collect()
}

/// Try to shatter `k` given inputs: thresholds start at the midpoint of the
/// values seen on random members and are re-centred once on the witnesses.
fn try_inputs(
    class: &dyn FunctionClass,
    inputs: &[Vec<f64>],
    gamma: f64,
    per_pattern: usize,
    seed: u64,
    k: usize,
    attempt: usize,
    used: &mut usize,
) -> Option<ShatterCertificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, k, attempt, usize::MAX));
    let probes: Vec<Vec<f64>> = (0..64).map(|_| class.sample_param(&mut rng)).collect();
    let values: Vec<Vec<f64>> = probes.iter().map(|t| inputs.iter().map(|x| class.eval(t, x)).collect()).collect();
    *used += probes.len() * k;
    let mut alpha: Vec<f64> = (0..k)
        .map(|i| {
            let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[i]), hi.max(v[i])));
            0.5 * (lo + hi)
        })
        .collect();
    let patterns = 1usize << k;
    for round in 0..2 {
        // Start each pattern from the random member closest to satisfying it.
        let starts: Vec<Vec<f64>> = (0..patterns)
            .map(|p| {
                probes
                    .iter()
                    .min_by(|a, b| {
                        violation(class, a, inputs, &alpha, gamma, p).total_cmp(&violation(class, b, inputs, &alpha, gamma, p))
                    })
                    .cloned()
                    .unwrap_or_default()
            })
            .collect();
        *used += 64 * patterns * k;
        let found = map_patterns(patterns, |p| {
            search_pattern(class, inputs, &alpha, gamma, p, &starts[p], per_pattern, sub_seed(seed, k, attempt, p + round * patterns))
        });
        *used += found.iter().map(|r| r.2).sum::<usize>();
        let cert = ShatterCertificate {
            gamma,
            inputs: inputs.to_vec(),
            thresholds: alpha.clone(),
            witnesses: found.iter().map(|r| r.0.clone()).collect(),
        };
        if verify_certificate(class, &cert) {
            return Some(cert);
        }
        if round == 0 {
            // Re-centre each threshold between the weakest witnesses on either side.
            for i in 0..k {
                let mut above = f64::INFINITY;
                let mut below = f64::NEG_INFINITY;
                for (p, r) in found.iter().enumerate() {
                    let f = class.eval(&r.0, &inputs[i]);
                    if p >> i & 1 == 1 { above = above.min(f) } else { below = below.max(f) }
                }
                if above.is_finite() && below.is_finite() {
                    alpha[i] = 0.5 * (above + below);
                }
            }
        }
    }
    None
}

/// Search a certificate for explicitly chosen inputs.
pub fn shatter_inputs(
    class: &dyn FunctionClass,
    inputs: &[Vec<f64>],
    gamma: f64,
    per_pattern: usize,
    seed: u64,
) -> Result<Option<ShatterCertificate>> {
    if inputs.is_empty() || inputs.len() > 12 || inputs.iter().any(|x| x.len() != class.input_dim()) {
        return Err(CvError::Shape("need 1 to 12 inputs of the class input dimension".into()));
    }
    let mut used = 0;
    Ok(try_inputs(class, inputs, gamma, per_pattern, seed, inputs.len(), 0, &mut used))
}

/// Largest `k ≤ k_max` with a verified `γ`-shattering certificate found within budget.
pub fn fat_shattering_lower_bound(class: &dyn FunctionClass, cfg: &ShatterConfig) -> Result<ShatterResult> {
    if cfg.k_max == 0 || cfg.k_max > 12 {
        return Err(CvError::InvalidParameter(format!("k_max must be in 1..=12, got {}", cfg.k_max)));
    }
    if !(cfg.gamma > 0.0) {
        return Err(CvError::InvalidParameter("gamma must be positive".into()));
    }
    let mut used = 0usize;
    let mut best: Option<ShatterCertificate> = None;
    let mut exhaustive = true;
    let mut input_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    'outer: for k in 1..=cfg.k_max {
        let remaining = cfg.budget.saturating_sub(used);
        let share = remaining / (cfg.attempts.max(1) * 2 * (1 << k)).max(1);
        let per_pattern = share.min(4000);
        if per_pattern < 50 {
            exhaustive = false;
            break;
        }
        for attempt in 0..cfg.attempts.max(1) {
            let inputs: Vec<Vec<f64>> = (0..k).map(|_| class.sample_input(&mut input_rng)).collect();
            if let Some(cert) = try_inputs(class, &inputs, cfg.gamma, per_pattern, cfg.seed, k, attempt, &mut used) {
                best = Some(cert);
                continue 'outer;
            }
            if used >= cfg.budget {
                exhaustive = false;
                break 'outer;
            }
        }
        // A shattered set stays shattered when shrunk, so failing at k ends the search.
        break;
    }
    Ok(ShatterResult {
        class: class.name(),
        gamma: cfg.gamma,
        k_certified: best.as_ref().map_or(0, ShatterCertificate::k),
        certificate: best,
        evals: used,
        exhaustive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMetric {
    /// `(1/k Σ (a_i − b_i)²)^{1/2}`.
    Euclidean,
    /// `1/k Σ |a_i − b_i|`.
    Scaled1Norm,
}

impl CoverMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let k = a.len().max(1) as f64;
        match self {
            CoverMetric::Euclidean => (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / k).sqrt(),
            CoverMetric::Scaled1Norm => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverEstimate {
    pub k: usize,
    pub eps: f64,
    pub size: usize,
    pub metric: CoverMetric,
    pub samples: usize,
    /// Every sampled restriction lies within `eps` of a centre.
    pub verified: bool,
}

/// Centres of a greedy internal cover of `points`.
pub fn greedy_cover(points: &[Vec<f64>], eps: f64, metric: CoverMetric) -> Vec<Vec<f64>> {
    let mut centres: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !centres.iter().any(|c| metric.distance(c, p) <= eps) {
            centres.push(p.clone());
        }
    }
    centres
}

fn cover_verified(points: &[Vec<f64>], centres: &[Vec<f64>], eps: f64, metric: CoverMetric) -> bool {
    points.iter().all(|p| centres.iter().any(|c| metric.distance(c, p) <= eps))
}

/// Restrictions `f_θ|_Ξ` of `samples` random members to the fixed inputs `xs`.
pub fn restrictions(class: &dyn FunctionClass, xs: &[Vec<f64>], samples: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let count = if class.param_dim() == 0 { 1 } else { samples };
    (0..count)
        .map(|_| {
            let t = class.sample_param(rng);
            xs.iter().map(|x| class.eval(&t, x)).collect()
        })
        .collect()
}

/// Greedy cover of a parameter-sampled restriction at scale `k`. A lower
/// estimate of the true covering number.
pub fn covering_number_estimate(
    class: &dyn FunctionClass,
    eps: f64,
    k: usize,
    samples: usize,
    metric: CoverMetric,
    seed: u64,
) -> Result<CoverEstimate> {
    if !(eps > 0.0) || k == 0 || samples == 0 {
        return Err(CvError::InvalidParameter("cover estimate needs ε > 0, k ≥ 1 and samples ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..k).map(|_| class.sample_input(&mut rng)).collect();
    let points = restrictions(class, &xs, samples, &mut rng);
    let centres = greedy_cover(&points, eps, metric);
    Ok(CoverEstimate {
        k,
        eps,
        size: centres.len(),
        metric,
        samples: points.len(),
        verified: cover_verified(&points, &centres, eps, metric),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GgCoverComparison {
    pub estimate: CoverEstimate,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub d: f64,
    /// Natural-log cover bound from the formula.
    pub log_bound: f64,
    pub within_bound: bool,
}

/// Greedy cover of a fixed-coefficient GG class against the formula bound
/// evaluated with B-constants measured on the same class.
pub fn gg_cover_vs_bound(class: &GgMovedClass, eps: f64, k: usize, samples: usize, seed: u64) -> Result<GgCoverComparison> {
    let estimate = covering_number_estimate(class, eps, k, samples, CoverMetric::Euclidean, seed)?;
    let (b1, b2, b3) = class.measured_b_constants(samples.min(500), seed)?;
    let b = b2 / b3;
    let d = pdim_gg(class.n());
    let log_bound = covering_bound_gg(d, b, b_tilde(b1, b), eps, k as f64)?;
    let within_bound = (estimate.size as f64).ln() <= log_bound;
    Ok(GgCoverComparison { estimate, b1, b2, b3, d, log_bound, within_bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCoverCheck {
    pub size_1: usize,
    pub size_2: usize,
    pub product_size: usize,
    pub radius: f64,
    /// The product of the two covers covers every sampled product at `radius`.
    pub holds: bool,
}

/// Product rule for covers: with `|f₁| ≤ B₁`, `|f₂| ≤ B₂`, the products of an
/// `ε₁`-cover and an `ε₂`-cover form a `(B₂ε₁ + B₁ε₂)`-cover of `F₁·F₂`.
pub fn product_cover_check(
    f1: &dyn FunctionClass,
    f2: &dyn FunctionClass,
    eps1: f64,
    eps2: f64,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<ProductCoverCheck> {
    if f1.input_dim() != f2.input_dim() {
        return Err(CvError::Shape("product classes need a common input space".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..k).map(|_| f1.sample_input(&mut rng)).collect();
    let p1 = restrictions(f1, &xs, samples, &mut rng);
    let p2 = restrictions(f2, &xs, samples, &mut rng);
    let metric = CoverMetric::Euclidean;
    let c1 = greedy_cover(&p1, eps1, metric);
    let c2 = greedy_cover(&p2, eps2, metric);
    let b1 = f1.range().0.abs().max(f1.range().1.abs());
    let b2 = f2.range().0.abs().max(f2.range().1.abs());
    let radius = b2 * eps1 + b1 * eps2;
    let product: Vec<Vec<f64>> =
        c1.iter().flat_map(|a| c2.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x * y).collect())).collect();
    let products: Vec<Vec<f64>> =
        p1.iter().zip(&p2).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect()).collect();
    Ok(ProductCoverCheck {
        size_1: c1.len(),
        size_2: c2.len(),
        product_size: product.len(),
        radius,
        holds: cover_verified(&products, &product, radius + 1e-12, metric),
    })
}
