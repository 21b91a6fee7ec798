//! Task learning: find one channel that serves a family of input states and
//! readouts indexed by a classical variable `x`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::io::matrix_from_rows;
use crate::symplectic::{validate_state, GaussianChannel, GaussianState, GeneralDyneEffect, PSD_TOL};

use super::hypothesis::{minimal_noise, HypothesisClass, HypothesisParam, CHANNEL_CLAMP};
use super::optim::{minimize, EsConfig};
use super::sampling::HELD_OUT_STREAM;
use super::{probability, LearnObject, Probe, Readout};

/// Each output is `Σ_j c_j x^j` with at most `order + 1` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingPoly {
    pub order: usize,
    pub coeffs: Vec<Vec<f64>>,
}

impl EncodingPoly {
    pub fn new(order: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self { order, coeffs };
        p.validate()?;
        Ok(p)
    }

    /// Outputs that do not depend on `x`.
    pub fn constant(values: &[f64]) -> Self {
        Self { order: 0, coeffs: values.iter().map(|&v| vec![v]).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.len() > self.order + 1 {
                return Err(CvError::InvalidParameter(format!(
                    "output {i} has {} coefficients, order {} allows {}",
                    c.len(),
                    self.order,
                    self.order + 1
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(CvError::InvalidParameter(format!("output {i} has a non-finite coefficient")));
            }
        }
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.iter().rev().fold(0.0, |acc, &a| acc * x + a)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskReadout {
    /// Heterodyne on `mode`; success when the x outcome has the sign of `sign(x)`.
    SignX { mode: usize, sign: EncodingPoly },
    /// Heterodyne effect centred at `outcome(x)`.
    Heterodyne { outcome: EncodingPoly },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum XDistribution {
    Points { values: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

impl XDistribution {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            XDistribution::Points { values } => values[rng.random_range(0..values.len())],
            XDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub n: usize,
    /// Mean of `ρ_x`, `2n` outputs.
    pub mean: EncodingPoly,
    /// Covariance of `ρ_x`, shared by all `x`; vacuum when absent.
    #[serde(default)]
    pub cov: Option<Vec<Vec<f64>>>,
    pub readout: TaskReadout,
    pub xs: XDistribution,
}

impl TaskSpec {
    /// `ρ_x = |±α⟩`, success when the heterodyne x outcome has the sign of `x ∈ {−1, +1}`.
    pub fn binary_coherent(alpha: f64) -> Self {
        let s = std::f64::consts::SQRT_2 * alpha;
        Self {
            n: 1,
            mean: EncodingPoly { order: 1, coeffs: vec![vec![0.0, s], vec![0.0]] },
            cov: None,
            readout: TaskReadout::SignX { mode: 0, sign: EncodingPoly { order: 1, coeffs: vec![vec![0.0, 1.0]] } },
            xs: XDistribution::Points { values: vec![-1.0, 1.0] },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CvError::InvalidParameter("task needs at least one mode".into()));
        }
        self.mean.validate()?;
        if self.mean.outputs() != 2 * self.n {
            return Err(CvError::Shape(format!("mean encoding has {} outputs, expected {}", self.mean.outputs(), 2 * self.n)));
        }
        match &self.readout {
            TaskReadout::SignX { mode, sign } => {
                sign.validate()?;
                if sign.outputs() != 1 || *mode >= self.n {
                    return Err(CvError::Shape("sign readout needs one output and a valid mode".into()));
                }
            }
            TaskReadout::Heterodyne { outcome } => {
                outcome.validate()?;
                if outcome.outputs() != 2 * self.n {
                    return Err(CvError::Shape("heterodyne readout needs 2n outputs".into()));
                }
            }
        }
        if let XDistribution::Points { values } = &self.xs {
            if values.is_empty() {
                return Err(CvError::InvalidParameter("empty input set".into()));
            }
        }
        let s = self.state(0.0)?;
        if !validate_state(&s, PSD_TOL)?.ok {
            return Err(CvError::InvalidState("task covariance violates the uncertainty relation".into()));
        }
        Ok(())
    }

    pub fn state(&self, x: f64) -> Result<GaussianState> {
        let mean = DVector::from_vec(self.mean.eval(x));
        let cov = match &self.cov {
            Some(rows) => matrix_from_rows(rows)?,
            None => DMatrix::identity(2 * self.n, 2 * self.n) * 0.5,
        };
        GaussianState::new(mean, cov)
    }

    pub fn readout(&self, x: f64) -> Readout {
        match &self.readout {
            TaskReadout::SignX { mode, sign } => Readout::SignX { mode: *mode, positive: sign.eval(x)[0] > 0.0 },
            TaskReadout::Heterodyne { outcome } => {
                Readout::Dyne(GeneralDyneEffect::heterodyne(DVector::from_vec(outcome.eval(x))))
            }
        }
    }

    pub fn probe(&self, x: f64) -> Result<Probe> {
        Ok(Probe::ForChannel { state: self.state(x)?, readout: self.readout(x) })
    }

    /// One probe per support point of a finite input distribution; their
    /// plain average is the exact expectation over `x`.
    pub fn support_probes(&self) -> Result<Vec<Probe>> {
        match &self.xs {
            XDistribution::Points { values } => values.iter().map(|&x| self.probe(x)).collect(),
            XDistribution::Uniform { .. } => Err(CvError::Unsupported("continuous input distribution".into())),
        }
    }

    pub fn draw_xs(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.xs.draw(&mut rng)).collect()
    }
}

/// Mean success probability `E_x P(M_x | Φ, ρ_x)` over the given probes.
pub fn mean_success(ch: &GaussianChannel, probes: &[Probe]) -> Result<f64> {
    let obj = LearnObject::Channel(ch.clone());
    let mut total = 0.0;
    for p in probes {
        total += probability(&obj, p)?.clamp(0.0, 1.0);
    }
    Ok(total / probes.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub samples: usize,
    pub n_test: usize,
    pub seed: u64,
    pub es: EsConfig,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { samples: 200, n_test: 400, seed: 0, es: EsConfig { max_evals: 3000, ..Default::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub hypothesis: HypothesisParam,
    pub channel: GaussianChannel,
    /// Mean `1 − P` on the training inputs.
    pub train_loss: f64,
    /// Mean `1 − P` on fresh inputs.
    pub heldout_loss: f64,
    pub heldout_success: f64,
    pub evals: usize,
    pub converged: bool,
    pub wall_ms: f64,
}

/// Minimise the cumulative loss `Σ_t (1 − P(M_{x_t} | Φ, ρ_{x_t}))` over Gaussian channels.
pub fn task_learning_run(task: &TaskSpec, class: &HypothesisClass, cfg: &TaskConfig) -> Result<TaskReport> {
    task.validate()?;
    if !matches!(class, HypothesisClass::GaussianChannel { n } if *n == task.n) {
        return Err(CvError::InvalidParameter("task learning needs a Gaussian-channel class on the task's modes".into()));
    }
    if cfg.samples == 0 {
        return Err(CvError::InvalidParameter("task learning needs at least one input".into()));
    }
    let clock = Instant::now();
    let train: Vec<Probe> = task.draw_xs(cfg.samples, cfg.seed).into_iter().map(|x| task.probe(x)).collect::<Result<_>>()?;
    let objective = |theta: &[f64]| -> f64 {
        match class.decode(theta) {
            Ok(LearnObject::Channel(c)) => 1.0 - mean_success(&c, &train).unwrap_or(0.0),
            _ => f64::INFINITY,
        }
    };
    let res = minimize(objective, &vec![0.0; class.param_dim()], &EsConfig { seed: cfg.seed, ..cfg.es.clone() });
    let hypothesis = HypothesisParam { class: class.clone(), theta: res.x };
    let LearnObject::Channel(channel) = hypothesis.decode()? else { unreachable!() };
    let test = heldout_probes(task, cfg)?;
    let heldout_success = mean_success(&channel, &test)?;
    Ok(TaskReport {
        hypothesis,
        train_loss: res.f,
        heldout_loss: 1.0 - heldout_success,
        heldout_success,
        channel,
        evals: res.evals,
        converged: res.converged,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn heldout_probes(task: &TaskSpec, cfg: &TaskConfig) -> Result<Vec<Probe>> {
    task.draw_xs(cfg.n_test, cfg.seed ^ HELD_OUT_STREAM).into_iter().map(|x| task.probe(x)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub success: f64,
    pub channel: GaussianChannel,
    pub evaluated: usize,
}

/// Exhaustive single-mode search: every entry of `X` and the x-displacement
/// on `grid` points in `[−3, 3]`, noise fixed at the smallest allowed `Y`.
pub fn grid_oracle(task: &TaskSpec, probes: &[Probe], grid: usize) -> Result<GridOptimum> {
    if task.n != 1 {
        return Err(CvError::Unsupported("grid oracle is single-mode".into()));
    }
    if grid < 2 {
        return Err(CvError::InvalidParameter("grid needs at least two points".into()));
    }
    let pts: Vec<f64> = (0..grid).map(|i| -CHANNEL_CLAMP + 2.0 * CHANNEL_CLAMP * i as f64 / (grid - 1) as f64).collect();
    let mut best: Option<GridOptimum> = None;
    let mut evaluated = 0;
    for &a in &pts {
        for &b in &pts {
            for &c in &pts {
                for &d in &pts {
                    let x = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
                    let y = minimal_noise(&x);
                    for &d0 in &pts {
                        let ch = GaussianChannel { disp: DVector::from_vec(vec![d0, 0.0]), x_mat: x.clone(), y_mat: y.clone(), dilation: None };
                        let s = mean_success(&ch, probes)?;
                        evaluated += 1;
                        if best.as_ref().is_none_or(|g| s > g.success) {
                            best = Some(GridOptimum { success: s, channel: ch, evaluated: 0 });
                        }
                    }
                }
            }
        }
    }
    let mut best = best.unwrap();
    best.evaluated = evaluated;
    Ok(best)
}
