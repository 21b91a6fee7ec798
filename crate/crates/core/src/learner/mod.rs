//! Learning protocols: sampling of binary measurement outcomes, empirical
//! risk minimisation over physically valid hypotheses, held-out evaluation,
//! task learning and the sample-complexity calculator.

pub mod bounds;
pub mod erm;
pub mod hypothesis;
pub mod optim;
pub mod sampling;
pub mod task;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::gg::{gg_outcome_probability, gg_photocount_probability, GGChannel, GGEffect, GGState};
use crate::linalg;
use crate::photodetection::{gp_coarse_probability, PhotoCountEffect};
use crate::symplectic::{
    apply_gaussian_channel, apply_unchecked, gaussian_effect_probability, GaussianChannel, GaussianState,
    GeneralDyneEffect,
};

pub use bounds::*;
pub use erm::*;
pub use hypothesis::*;
pub use optim::{minimize, EsConfig, OptimResult};
pub use sampling::*;
pub use task::*;

/// Anything that can be learned or used as a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum LearnObject {
    State(GaussianState),
    GgState(GGState),
    Channel(GaussianChannel),
    Effect(GeneralDyneEffect),
}

impl LearnObject {
    pub fn n(&self) -> usize {
        match self {
            LearnObject::State(s) => s.n(),
            LearnObject::GgState(g) => g.n,
            LearnObject::Channel(c) => c.n(),
            LearnObject::Effect(e) => e.n(),
        }
    }
}

/// Binary measurement applied at the end of a probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Readout {
    Dyne(GeneralDyneEffect),
    Photocount(PhotoCountEffect),
    /// Heterodyne detection on `mode`, accepting when the x outcome has the given sign.
    SignX { mode: usize, positive: bool },
    Gg(GGEffect),
}

/// The known parts of one experiment; the unknown object fills the gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Probe {
    ForState { channel: GaussianChannel, readout: Readout },
    ForEffect { state: GaussianState, channel: GaussianChannel },
    ForChannel { state: GaussianState, readout: Readout },
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

fn sign_probability(out: &GaussianState, mode: usize, positive: bool) -> Result<f64> {
    if mode >= out.n() {
        return Err(CvError::Shape(format!("mode {mode} out of range for {} modes", out.n())));
    }
    let var = out.cov[(2 * mode, 2 * mode)] + 0.5;
    let z = out.mean[2 * mode] / var.sqrt();
    Ok(if positive { normal_cdf(z) } else { normal_cdf(-z) })
}

fn gaussian_readout(state: &GaussianState, ch: &GaussianChannel, readout: &Readout) -> Result<f64> {
    match readout {
        Readout::Dyne(e) => gaussian_effect_probability(state, ch, e),
        Readout::Photocount(e) => gp_coarse_probability(state, ch, e),
        Readout::SignX { mode, positive } => sign_probability(&apply_gaussian_channel(state, ch)?, *mode, *positive),
        Readout::Gg(e) => gg_outcome_probability(&GGState::from_gaussian(state), &GGChannel::from_gaussian(ch), e),
    }
}

/// Probability that the probe accepts when its gap is filled by `obj`.
pub fn probability(obj: &LearnObject, probe: &Probe) -> Result<f64> {
    match (obj, probe) {
        (LearnObject::State(s), Probe::ForState { channel, readout }) => gaussian_readout(s, channel, readout),
        (LearnObject::Channel(c), Probe::ForChannel { state, readout }) => gaussian_readout(state, c, readout),
        (LearnObject::Effect(e), Probe::ForEffect { state, channel }) => gaussian_effect_probability(state, channel, e),
        (LearnObject::GgState(g), Probe::ForState { channel, readout }) => {
            let ch = GGChannel::from_gaussian(channel);
            match readout {
                Readout::Dyne(e) => gg_outcome_probability(g, &ch, &GGEffect::from_dyne(e)),
                Readout::Gg(e) => gg_outcome_probability(g, &ch, e),
                Readout::Photocount(e) => gg_photocount_probability(g, &ch, e),
                Readout::SignX { .. } => Err(CvError::Unsupported("sign readout of a generalized-Gaussian state".into())),
            }
        }
        _ => Err(CvError::InvalidParameter("probe does not match the unknown object".into())),
    }
}

/// Probes prepared for repeated evaluation. When every probe is a dyne
/// readout behind one common channel with one common effect covariance,
/// only the outcome points differ and a hypothesis costs a single inverse.
#[derive(Clone, Debug)]
pub enum PreparedProbes {
    SharedDyne { channel: GaussianChannel, cov: DMatrix<f64>, points: Vec<f64>, dim: usize },
    General(Vec<Probe>),
}

impl PreparedProbes {
    pub fn new(probes: &[Probe]) -> Self {
        let shared = match probes.first() {
            Some(Probe::ForState { channel, readout: Readout::Dyne(e0) }) if e0.n() == channel.n() => {
                probes.iter().all(|p| {
                    matches!(p, Probe::ForState { channel: c, readout: Readout::Dyne(e) }
                        if c == channel && e.cov == e0.cov)
                })
            }
            _ => false,
        };
        if !shared {
            return PreparedProbes::General(probes.to_vec());
        }
        let Some(Probe::ForState { channel, readout: Readout::Dyne(e0) }) = probes.first() else { unreachable!() };
        let dim = e0.outcome.len();
        let mut points = Vec::with_capacity(dim * probes.len());
        for p in probes {
            if let Probe::ForState { readout: Readout::Dyne(e), .. } = p {
                points.extend_from_slice(e.outcome.as_slice());
            }
        }
        PreparedProbes::SharedDyne { channel: channel.clone(), cov: e0.cov.clone(), points, dim }
    }

    pub fn len(&self) -> usize {
        match self {
            PreparedProbes::SharedDyne { points, dim, .. } => points.len() / dim,
            PreparedProbes::General(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn probabilities(&self, obj: &LearnObject) -> Result<Vec<f64>> {
        match (self, obj) {
            (PreparedProbes::SharedDyne { channel, cov, points, dim }, LearnObject::State(s)) if s.mean.len() == *dim => {
                let d = crate::symplectic::validate_state(s, crate::symplectic::PSD_TOL)?;
                if !d.ok {
                    return Err(CvError::InvalidState(format!("min eigenvalue {:.3e}", d.min_eigenvalue)));
                }
                let out = apply_unchecked(s, channel);
                let (inv, det) = linalg::spd_inverse_det(&(&out.cov + cov))?;
                // (2π)ⁿ / √det(2πΣ) = 1/√det Σ
                let norm = 1.0 / det.sqrt();
                let m = out.mean.as_slice();
                let mut diff = vec![0.0; *dim];
                Ok(points
                    .chunks_exact(*dim)
                    .map(|pt| {
                        for k in 0..*dim {
                            diff[k] = pt[k] - m[k];
                        }
                        let mut q = 0.0;
                        for i in 0..*dim {
                            let mut row = 0.0;
                            for j in 0..*dim {
                                row += inv[(i, j)] * diff[j];
                            }
                            q += diff[i] * row;
                        }
                        norm * (-0.5 * q).exp()
                    })
                    .collect())
            }
            (PreparedProbes::SharedDyne { channel, cov, points, dim }, _) => points
                .chunks_exact(*dim)
                .map(|pt| {
                    let e = GeneralDyneEffect { outcome: DVector::from_column_slice(pt), cov: cov.clone() };
                    probability(obj, &Probe::ForState { channel: channel.clone(), readout: Readout::Dyne(e) })
                })
                .collect(),
            (PreparedProbes::General(probes), _) => probes.iter().map(|p| probability(obj, p)).collect(),
        }
    }
}

/// Probabilities of many probes at once, using the shared-dyne shortcut when it applies.
pub fn probabilities(obj: &LearnObject, probes: &[Probe]) -> Result<Vec<f64>> {
    PreparedProbes::new(probes).probabilities(obj)
}
