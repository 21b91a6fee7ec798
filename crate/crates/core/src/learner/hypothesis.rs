//! Unconstrained parameter vectors and their decoding into valid objects.
//!
//! * Gaussian state / effect, `θ = [m (2n), H (n(2n+1)), t (n)]`:
//!   `V = e^{ΩH} diag(ν) e^{ΩH}ᵀ` with `νᵢ = (1 + tᵢ²)/2`. Every decoded
//!   covariance satisfies the uncertainty relation exactly; `θ = 0` is the vacuum.
//! * Gaussian channel, `θ = [d (2n), X − I (4n²), L (n(2n+1))]`:
//!   `Y = ½|i(Ω − XΩXᵀ)| + LLᵀ`, the smallest noise making `X` completely
//!   positive plus a PSD excess. `θ = 0` is the identity channel.
//! * Fixed-coefficient GG state, `θ = [H (n(2n+1)), d (2n)]`: the template's
//!   components moved by the Gaussian unitary `r ↦ e^{ΩH} r + d`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::gg::GGState;
use crate::linalg::{self, omega};
use crate::symplectic::{GaussianChannel, GaussianState, GeneralDyneEffect};

use super::LearnObject;

/// Generator entries are clipped so that `e^{ΩH}` stays well conditioned.
pub const GENERATOR_CLAMP: f64 = 2.0;
/// Channel matrix entries are clipped to this box.
pub const CHANNEL_CLAMP: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum HypothesisClass {
    GaussianState { n: usize },
    GaussianChannel { n: usize },
    GaussianEffect { n: usize },
    GgFixedCoeff { template: GGState },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisParam {
    pub class: HypothesisClass,
    pub theta: Vec<f64>,
}

impl HypothesisParam {
    pub fn decode(&self) -> Result<LearnObject> {
        self.class.decode(&self.theta)
    }
}

fn sym_count(n: usize) -> usize {
    n * (2 * n + 1)
}

impl HypothesisClass {
    pub fn n(&self) -> usize {
        match self {
            HypothesisClass::GaussianState { n } | HypothesisClass::GaussianChannel { n } | HypothesisClass::GaussianEffect { n } => *n,
            HypothesisClass::GgFixedCoeff { template } => template.n,
        }
    }

    pub fn param_dim(&self) -> usize {
        let n = self.n();
        match self {
            HypothesisClass::GaussianState { .. } | HypothesisClass::GaussianEffect { .. } => 2 * n + sym_count(n) + n,
            HypothesisClass::GaussianChannel { .. } => 2 * n + 4 * n * n + sym_count(n),
            HypothesisClass::GgFixedCoeff { .. } => sym_count(n) + 2 * n,
        }
    }

    /// Short tag used in reports.
    pub fn tag(&self) -> &'static str {
        match self {
            HypothesisClass::GaussianState { .. } => "gaussian-state",
            HypothesisClass::GaussianChannel { .. } => "gaussian-channel",
            HypothesisClass::GaussianEffect { .. } => "gaussian-effect",
            HypothesisClass::GgFixedCoeff { .. } => "gg-fixed-coeff",
        }
    }

    pub fn decode(&self, theta: &[f64]) -> Result<LearnObject> {
        if theta.len() != self.param_dim() {
            return Err(CvError::Shape(format!("θ has {} entries, class needs {}", theta.len(), self.param_dim())));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(CvError::InvalidParameter("non-finite parameter".into()));
        }
        let n = self.n();
        Ok(match self {
            HypothesisClass::GaussianState { .. } => LearnObject::State(decode_state(n, theta)),
            HypothesisClass::GaussianEffect { .. } => {
                let s = decode_state(n, theta);
                LearnObject::Effect(GeneralDyneEffect { outcome: s.mean, cov: s.cov })
            }
            HypothesisClass::GaussianChannel { .. } => LearnObject::Channel(decode_channel(n, theta)),
            HypothesisClass::GgFixedCoeff { template } => {
                let s = symplectic_from(n, &theta[..sym_count(n)]);
                let d = DVector::from_column_slice(&theta[sym_count(n)..]);
                LearnObject::GgState(move_gg(template, &s, &d))
            }
        })
    }
}

/// `e^{ΩH}` from the upper triangle of `H`, row by row.
fn symplectic_from(n: usize, h: &[f64]) -> DMatrix<f64> {
    let d = 2 * n;
    let mut m = DMatrix::zeros(d, d);
    let mut it = h.iter();
    for i in 0..d {
        for j in i..d {
            let v = it.next().unwrap().clamp(-GENERATOR_CLAMP, GENERATOR_CLAMP);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    (omega(n) * m).exp()
}

fn decode_state(n: usize, theta: &[f64]) -> GaussianState {
    let d = 2 * n;
    let mean = DVector::from_column_slice(&theta[..d]);
    let s = symplectic_from(n, &theta[d..d + sym_count(n)]);
    let t = &theta[d + sym_count(n)..];
    let mut diag = DMatrix::zeros(d, d);
    for i in 0..n {
        let nu = 0.5 * (1.0 + t[i] * t[i]);
        diag[(2 * i, 2 * i)] = nu;
        diag[(2 * i + 1, 2 * i + 1)] = nu;
    }
    GaussianState { mean, cov: linalg::symmetrize(&(&s * diag * s.transpose())) }
}

/// Smallest `Y` with `Y + (i/2)(Ω − XΩXᵀ) ⪰ 0`.
pub fn minimal_noise(x: &DMatrix<f64>) -> DMatrix<f64> {
    let w = omega(x.nrows() / 2);
    let a = &w - x * &w * x.transpose();
    linalg::sym_sqrt(&(a.transpose() * &a)) * 0.5
}

fn decode_channel(n: usize, theta: &[f64]) -> GaussianChannel {
    let d = 2 * n;
    let disp = DVector::from_column_slice(&theta[..d]);
    let raw = &theta[d..d + d * d];
    let x = DMatrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (id + raw[i * d + j]).clamp(-CHANNEL_CLAMP, CHANNEL_CLAMP)
    });
    let mut l = DMatrix::zeros(d, d);
    let mut it = theta[d + d * d..].iter();
    for i in 0..d {
        for j in 0..=i {
            l[(i, j)] = it.next().unwrap().clamp(-CHANNEL_CLAMP, CHANNEL_CLAMP);
        }
    }
    let y = linalg::symmetrize(&(minimal_noise(&x) + &l * l.transpose()));
    GaussianChannel { disp, x_mat: x, y_mat: y, dilation: None }
}

/// Apply `r ↦ S r + d` to every component, keeping coefficients.
pub fn move_gg(template: &GGState, s: &DMatrix<f64>, d: &DVector<f64>) -> GGState {
    let sc = linalg::to_complex(s);
    let dc = linalg::to_complex_vec(d);
    let components = template
        .components
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.mean = &sc * &c.mean + &dc;
            c.cov = &sc * &c.cov * sc.transpose();
            c
        })
        .collect();
    GGState { n: template.n, components, kets: None }
}

/// Inverse of the state map for the mean, used to seed searches near a guess.
pub fn state_theta_from_mean(mean: &DVector<f64>) -> Vec<f64> {
    let n = mean.len() / 2;
    let mut theta = vec![0.0; 2 * n + sym_count(n) + n];
    theta[..2 * n].copy_from_slice(mean.as_slice());
    theta
}
