//! Learning-curve sweeps over `(n, T, seed)` and the scaling fits drawn from them.

use std::time::Instant;

use anyhow::{bail, Result};
use cvlearn_core::learner::{learn, HypothesisClass, LearnObject, LearnRunConfig, SampleDistribution};
use cvlearn_core::symplectic::random_physical_instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSetting {
    /// Random Gaussian state target learned by Gaussian states under heterodyne probes.
    GaussianState,
}

impl SweepSetting {
    pub fn tag(self) -> &'static str {
        match self {
            SweepSetting::GaussianState => "gaussian-state",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub setting: SweepSetting,
    pub n: Vec<usize>,
    /// Training-set sizes.
    pub samples: Vec<usize>,
    /// Filled from the run's seed list.
    #[serde(skip)]
    pub seeds: Vec<u64>,
    /// Gap level whose crossing defines the required `T`.
    pub target_gap: f64,
    /// Probe spread at one mode; scaled by `1/√n`.
    pub spread: f64,
    pub energy: f64,
    pub n_test: usize,
    /// Exceedance threshold on the held-out loss.
    pub gamma: f64,
    /// Optimizer evaluations per hypothesis parameter.
    pub evals_per_param: usize,
    pub bootstrap: usize,
    /// Stop scheduling new runs after this many milliseconds.
    pub wall_budget_ms: Option<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            setting: SweepSetting::GaussianState,
            n: vec![1, 2, 3],
            samples: vec![250, 500, 1000, 2000, 4000, 8000],
            seeds: vec![0, 1, 2, 3],
            target_gap: 0.02,
            spread: 1.2,
            energy: 1.0,
            n_test: 500,
            gamma: 0.1,
            evals_per_param: 300,
            bootstrap: 500,
            wall_budget_ms: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n.len() < 2 || self.samples.len() < 2 {
            bail!("sweep needs at least two values on each swept axis (n: {}, T: {})", self.n.len(), self.samples.len());
        }
        if self.seeds.is_empty() {
            bail!("sweep needs at least one seed");
        }
        if self.n.contains(&0) || self.samples.contains(&0) {
            bail!("n and T must be positive");
        }
        if !(self.target_gap > 0.0 && self.spread > 0.0 && self.gamma > 0.0) {
            bail!("target_gap, spread and gamma must be positive");
        }
        if self.n_test < 100 {
            bail!("n_test must be at least 100");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
    /// Achieved empirical risk of the returned hypothesis.
    pub eta: f64,
    pub gap_q50: f64,
    pub gap_q95: f64,
    pub exceed_frac: f64,
    pub wall_ms: f64,
}

/// The target for `(n, seed)`; shared by every `T` so learning curves are comparable.
pub fn sweep_target(setting: SweepSetting, n: usize, energy: f64, seed: u64) -> LearnObject {
    match setting {
        SweepSetting::GaussianState => LearnObject::State(random_physical_instance(n, energy, 100 + seed).0),
    }
}

pub fn run_one(cfg: &SweepConfig, n: usize, t: usize, seed: u64) -> Result<SweepRow> {
    let clock = Instant::now();
    let target = sweep_target(cfg.setting, n, cfg.energy, seed);
    let class = HypothesisClass::GaussianState { n };
    let dist = SampleDistribution::heterodyne(cfg.spread / (n as f64).sqrt(), seed);
    let mut run_cfg = LearnRunConfig { samples: t, n_test: cfg.n_test, gammas: vec![cfg.gamma], eta: Some(0.0), ..Default::default() };
    run_cfg.erm.es.max_evals = cfg.evals_per_param * class.param_dim();
    run_cfg.erm.es.seed = seed;
    let run = learn(&target, &class, &dist, &run_cfg)?;
    Ok(SweepRow {
        setting: cfg.setting.tag().into(),
        n,
        t,
        seed,
        eta: run.report.mean_loss,
        gap_q50: run.gap.q50,
        gap_q95: run.gap.q95,
        exceed_frac: run.gap.exceed_at(cfg.gamma).unwrap_or(f64::NAN),
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Runs skipped because the wall budget ran out.
    pub skipped: usize,
}

/// Every `(n, T, seed)` run, scheduled on the current rayon pool. Rows come
/// back in grid order regardless of completion order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .n
        .iter()
        .flat_map(|&n| cfg.samples.iter().flat_map(move |&t| cfg.seeds.iter().map(move |&s| (n, t, s))))
        .collect();
    let clock = Instant::now();
    let results: Vec<Option<Result<SweepRow>>> = jobs
        .par_iter()
        .map(|&(n, t, s)| {
            if cfg.wall_budget_ms.is_some_and(|b| clock.elapsed().as_millis() as u64 >= b) {
                return None;
            }
            Some(run_one(cfg, n, t, s))
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        log::warn!("wall budget exhausted: {skipped} of {} runs skipped", jobs.len());
    }
    let rows = results.into_iter().flatten().collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput { rows, skipped })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let k = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub n: usize,
    /// Slope of log median gap against log T.
    pub slope: f64,
    /// T at which the fitted curve reaches the target gap.
    pub t_needed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub target_gap: f64,
    pub curves: Vec<CurveFit>,
    /// Slope of log T_needed against log n, with a 95% bootstrap interval.
    pub t_vs_n: Interval,
    /// Common slope of log gap against log T across all n.
    pub gap_vs_t: Interval,
    pub bootstrap: usize,
}

/// Per-n medians over the selected seed indices, fitted on log-log axes.
fn fit_all(
    ns: &[usize],
    ts: &[usize],
    cell: &dyn Fn(usize, usize) -> Vec<f64>,
    pick: &dyn Fn(usize, usize, usize) -> Vec<usize>,
    target: f64,
) -> Option<(Vec<CurveFit>, f64, f64)> {
    let mut curves = Vec::new();
    // Common slope: pool the centred data of each n.
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &n) in ns.iter().enumerate() {
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for (j, &t) in ts.iter().enumerate() {
            let vals = cell(i, j);
            let mut chosen: Vec<f64> = pick(i, j, vals.len()).into_iter().map(|k| vals[k]).collect();
            let m = median(&mut chosen);
            if !(m > 0.0) {
                return None;
            }
            lx.push((t as f64).ln());
            ly.push(m.ln());
        }
        let (slope, icpt) = linear_fit(&lx, &ly)?;
        if slope >= 0.0 {
            return None;
        }
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        sxx += lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        sxy += lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
        curves.push(CurveFit { n, slope, t_needed: ((target.ln() - icpt) / slope).exp() });
    }
    let lnn: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let lnt: Vec<f64> = curves.iter().map(|c| c.t_needed.ln()).collect();
    let (t_slope, _) = linear_fit(&lnn, &lnt)?;
    Some((curves, t_slope, sxy / sxx))
}

fn percentile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Fit `log T_needed` against `log n` and the common `log gap` against `log T`
/// slope; intervals come from resampling seeds within each cell.
pub fn scaling_summary(rows: &[SweepRow], target_gap: f64, bootstrap: usize, seed: u64) -> Result<ScalingSummary> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut ts: Vec<usize> = rows.iter().map(|r| r.t).collect();
    ts.sort_unstable();
    ts.dedup();
    if ns.len() < 3 || ts.len() < 3 {
        bail!("insufficient grid for a scaling fit: need at least 3 values of n and of T, got {} and {}", ns.len(), ts.len());
    }
    let cells: Vec<Vec<Vec<f64>>> = ns
        .iter()
        .map(|&n| {
            ts.iter()
                .map(|&t| rows.iter().filter(|r| r.n == n && r.t == t).map(|r| r.gap_q50).collect())
                .collect()
        })
        .collect();
    if cells.iter().flatten().any(|c: &Vec<f64>| c.is_empty()) {
        bail!("every (n, T) cell needs at least one completed run");
    }
    let cell = |i: usize, j: usize| cells[i][j].clone();
    let all = |_: usize, _: usize, len: usize| (0..len).collect::<Vec<_>>();
    let Some((curves, t_slope, g_slope)) = fit_all(&ns, &ts, &cell, &all, target_gap) else {
        bail!("gap does not decrease with T on every n; cannot locate the target crossing");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tb = Vec::with_capacity(bootstrap);
    let mut gb = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let draws: Vec<Vec<Vec<usize>>> = cells
            .iter()
            .map(|row| row.iter().map(|c| (0..c.len()).map(|_| rng.random_range(0..c.len())).collect()).collect())
            .collect();
        let pick = |i: usize, j: usize, _: usize| draws[i][j].clone();
        if let Some((_, a, b)) = fit_all(&ns, &ts, &cell, &pick, target_gap) {
            tb.push(a);
            gb.push(b);
        }
    }
    let interval = |est: f64, v: &mut Vec<f64>| {
        if v.is_empty() {
            Interval { estimate: est, lo: est, hi: est }
        } else {
            Interval { estimate: est, lo: percentile(v, 0.025), hi: percentile(v, 0.975) }
        }
    };
    Ok(ScalingSummary {
        target_gap,
        curves,
        t_vs_n: interval(t_slope, &mut tb),
        gap_vs_t: interval(g_slope, &mut gb),
        bootstrap: tb.len(),
    })
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
