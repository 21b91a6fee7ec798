//! Losses, empirical risk minimisation and held-out evaluation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};

use super::hypothesis::{HypothesisClass, HypothesisParam};
use super::optim::{minimize, EsConfig};
use super::sampling::{checked, draw_training_set, SampleDistribution, TrainingSample};
use super::{probabilities, LearnObject, PreparedProbes, Probe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Quadratic,
    Linear,
    TotalVariation,
}

/// Per-sample loss of predicting `p` for outcome `b`.
pub fn sample_loss(kind: LossKind, p: f64, b: u8) -> f64 {
    let e = p - f64::from(b);
    match kind {
        LossKind::Quadratic => e * e,
        LossKind::Linear | LossKind::TotalVariation => e.abs(),
    }
}

/// `f(1 − h) + (1 − f)h`.
pub fn misclassification(f: f64, h: f64) -> f64 {
    f * (1.0 - h) + (1.0 - f) * h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub per_sample: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    /// Cumulative loss; the total-variation figure.
    pub total: f64,
}

impl LossSummary {
    fn from_losses(per_sample: Vec<f64>) -> Self {
        let total: f64 = per_sample.iter().sum();
        let max = per_sample.iter().cloned().fold(0.0, f64::max);
        let mean = total / per_sample.len().max(1) as f64;
        Self { per_sample, max, mean, total }
    }
}

fn probes_of(samples: &[TrainingSample]) -> Vec<Probe> {
    samples.iter().map(|s| s.probe.clone()).collect()
}

pub fn empirical_loss(hyp: &LearnObject, samples: &[TrainingSample], kind: LossKind) -> Result<LossSummary> {
    let ps = probabilities(hyp, &probes_of(samples))?;
    let losses = ps.iter().zip(samples).map(|(&p, s)| sample_loss(kind, p.clamp(0.0, 1.0), s.outcome)).collect();
    Ok(LossSummary::from_losses(losses))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErmMode {
    /// Minimise the largest per-sample loss.
    MinMax,
    /// Minimise the cumulative loss.
    MinSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErmConfig {
    pub mode: ErmMode,
    pub loss: LossKind,
    pub es: EsConfig,
    /// Starting parameters; zeros when empty.
    pub start: Vec<f64>,
}

impl Default for ErmConfig {
    fn default() -> Self {
        Self { mode: ErmMode::MinSum, loss: LossKind::Quadratic, es: EsConfig::default(), start: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningReport {
    pub class: String,
    /// Largest per-sample training loss of the returned hypothesis.
    pub eta: f64,
    pub mean_loss: f64,
    pub objective: f64,
    pub evals: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub seed: u64,
    pub wall_ms: f64,
}

pub fn erm_search(
    class: &HypothesisClass,
    samples: &[TrainingSample],
    cfg: &ErmConfig,
) -> Result<(HypothesisParam, LearningReport)> {
    if samples.is_empty() {
        return Err(CvError::InvalidParameter("ERM needs at least one sample".into()));
    }
    let clock = Instant::now();
    let probes = PreparedProbes::new(&probes_of(samples));
    let outcomes: Vec<u8> = samples.iter().map(|s| s.outcome).collect();
    let objective = |theta: &[f64]| -> f64 {
        let Ok(obj) = class.decode(theta) else { return f64::INFINITY };
        let Ok(ps) = probes.probabilities(&obj) else { return f64::INFINITY };
        let losses = ps.iter().zip(&outcomes).map(|(&p, &b)| sample_loss(cfg.loss, p.clamp(0.0, 1.0), b));
        match cfg.mode {
            ErmMode::MinMax => losses.fold(0.0, f64::max),
            ErmMode::MinSum => losses.sum::<f64>() / outcomes.len() as f64,
        }
    };
    let start = if cfg.start.is_empty() { vec![0.0; class.param_dim()] } else { cfg.start.clone() };
    if start.len() != class.param_dim() {
        return Err(CvError::Shape(format!("start has {} entries, class needs {}", start.len(), class.param_dim())));
    }
    let res = minimize(objective, &start, &cfg.es);
    let param = HypothesisParam { class: class.clone(), theta: res.x };
    let summary = empirical_loss(&param.decode()?, samples, cfg.loss)?;
    let report = LearningReport {
        class: class.tag().into(),
        eta: summary.max,
        mean_loss: summary.mean,
        objective: res.f,
        evals: res.evals,
        converged: res.converged,
        trace: res.trace,
        seed: cfg.es.seed,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    };
    Ok((param, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub gamma: f64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub n_test: usize,
    pub eta: f64,
    pub mean: f64,
    pub q50: f64,
    pub q90: f64,
    pub q95: f64,
    pub max: f64,
    /// Fraction of held-out probes with true loss above `η + γ`.
    pub exceedance: Vec<Exceedance>,
}

impl GapStats {
    pub fn exceed_at(&self, gamma: f64) -> Option<f64> {
        self.exceedance.iter().find(|e| (e.gamma - gamma).abs() < 1e-12).map(|e| e.fraction)
    }
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// True losses `|P_hyp − P_target|` on fresh probes from `dist.held_out()`.
pub fn evaluate_generalization(
    hyp: &LearnObject,
    target: &LearnObject,
    dist: &SampleDistribution,
    n_test: usize,
    gammas: &[f64],
    eta: f64,
) -> Result<GapStats> {
    if n_test < 100 {
        return Err(CvError::InvalidParameter(format!("need at least 100 held-out probes, got {n_test}")));
    }
    let probes = dist.held_out().draw_probes(target.n(), n_test)?;
    let ph = probabilities(hyp, &probes)?;
    let pt = probabilities(target, &probes)?;
    let mut losses = Vec::with_capacity(n_test);
    for (a, b) in ph.into_iter().zip(pt) {
        losses.push((checked(a)? - checked(b)?).abs());
    }
    losses.sort_by(f64::total_cmp);
    let exceedance = gammas
        .iter()
        .map(|&gamma| Exceedance {
            gamma,
            fraction: losses.iter().filter(|&&l| l > eta + gamma).count() as f64 / n_test as f64,
        })
        .collect();
    Ok(GapStats {
        n_test,
        eta,
        mean: losses.iter().sum::<f64>() / n_test as f64,
        q50: quantile(&losses, 0.5),
        q90: quantile(&losses, 0.9),
        q95: quantile(&losses, 0.95),
        max: *losses.last().unwrap(),
        exceedance,
    })
}

/// Settings for a complete draw → fit → evaluate run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnRunConfig {
    pub samples: usize,
    pub n_test: usize,
    pub gammas: Vec<f64>,
    /// Threshold `η` used for exceedance; `None` uses the achieved training η.
    pub eta: Option<f64>,
    pub erm: ErmConfig,
}

impl Default for LearnRunConfig {
    fn default() -> Self {
        Self { samples: 2000, n_test: 1000, gammas: vec![0.05, 0.1, 0.2], eta: Some(0.0), erm: ErmConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnRun {
    pub hypothesis: HypothesisParam,
    pub learned: LearnObject,
    pub report: LearningReport,
    pub gap: GapStats,
}

/// Draw `samples` outcomes with `dist.seed`, fit with `erm.es.seed`, evaluate held out.
pub fn learn(
    target: &LearnObject,
    class: &HypothesisClass,
    dist: &SampleDistribution,
    cfg: &LearnRunConfig,
) -> Result<LearnRun> {
    let train = draw_training_set(target, dist, cfg.samples)?;
    let (hypothesis, mut report) = erm_search(class, &train, &cfg.erm)?;
    let learned = hypothesis.decode()?;
    let clock = Instant::now();
    let gap = evaluate_generalization(&learned, target, dist, cfg.n_test, &cfg.gammas, cfg.eta.unwrap_or(report.eta))?;
    report.wall_ms += clock.elapsed().as_secs_f64() * 1e3;
    Ok(LearnRun { hypothesis, learned, report, gap })
}
