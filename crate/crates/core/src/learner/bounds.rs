//! Pseudo-dimension, covering-number and sample-complexity formulas.
//!
//! The asymptotic statements are evaluated with the constants that appear
//! explicitly in their derivations, logarithms in base 2, and the sum rule for
//! pseudo-dimensions applied as a plain sum.

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};

fn log2(x: f64) -> f64 {
    x.log2()
}

/// `2 d log(12 ℓ)` for classes polynomial of order `ℓ` in `d` parameters.
pub fn pdim_poly(d: f64, order: f64) -> f64 {
    2.0 * d * log2(12.0 * order)
}

/// Determinant class: order `2n` in `n(2n+1)` parameters.
pub fn pdim_f_d(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (2.0 * n * n + n) * log2(24.0 * n)
}

/// Quadratic-form class: order `4n−1` in `2n²+3n` parameters.
pub fn pdim_f_quad(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (2.0 * n * n + 3.0 * n) * log2(12.0 * (4.0 * n - 1.0))
}

/// Photon-count polynomial class: order `4nK` in `2n²+3n` parameters.
pub fn pdim_f_p(n: usize, k: usize) -> f64 {
    let n = n as f64;
    2.0 * (2.0 * n * n + 3.0 * n) * log2(28.0 * n * k as f64)
}

/// Gaussian outcome probabilities: `Pdim(F_quad) + 2 Pdim(F_d)`.
pub fn pdim_gaussian(n: usize) -> f64 {
    pdim_f_quad(n) + 2.0 * pdim_f_d(n)
}

pub fn pdim_gaussian_photocount(n: usize, k: usize) -> f64 {
    pdim_gaussian(n) + pdim_f_p(n, k)
}

/// `Re F̃_e`: order `4n+1` in `2(4n²+2n)` real parameters.
pub fn pdim_re_fe(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (4.0 * n * n + 2.0 * n) * log2(12.0 * (4.0 * n + 1.0))
}

/// `|F̃_d|²`: order `4n` in `8n²` real parameters.
pub fn pdim_abs_fd_sq(n: usize) -> f64 {
    let n = n as f64;
    16.0 * n * n * log2(48.0 * n)
}

/// `Re F̃_d`: order `2n` in `8n²` real parameters.
pub fn pdim_re_fd(n: usize) -> f64 {
    let n = n as f64;
    16.0 * n * n * log2(24.0 * n)
}

/// Exponential-factor class of the GG decomposition.
pub fn pdim_gg_exp(n: usize) -> f64 {
    pdim_re_fe(n) + pdim_abs_fd_sq(n)
}

/// Phase class `F_im + F_ang + F_const`.
pub fn pdim_gg_trig(n: usize) -> f64 {
    pdim_re_fe(n) + (pdim_re_fd(n) + pdim_abs_fd_sq(n)) + 1.0
}

/// The single `d` used in the GG covering bound: the larger of the two classes.
pub fn pdim_gg(n: usize) -> f64 {
    pdim_gg_exp(n).max(pdim_gg_trig(n))
}

/// Coarse-grained photon-count effects are linear in `(K+1)ⁿ` weights.
pub fn pdim_photocount_measurement(n: usize, k: usize) -> f64 {
    ((k + 1) as f64).powi(n as i32)
}

/// `Pdim · log(2eBk / (Pdim ε))`.
pub fn covering_bound_pdim(d: f64, b: f64, eps: f64, k: f64) -> Result<f64> {
    if !(d >= 1.0 && b > 0.0 && eps > 0.0 && k > 0.0) {
        return Err(CvError::InvalidParameter("covering bound needs d ≥ 1 and positive B, ε, k".into()));
    }
    Ok(d * log2(2.0 * std::f64::consts::E * b * k / (d * eps)))
}

/// `⌈(2B/ε)²⌉ d log(2ekB̃ / (dε))`.
pub fn covering_bound_gg(d: f64, b: f64, b_tilde: f64, eps: f64, k: f64) -> Result<f64> {
    if !(d >= 1.0 && b > 0.0 && b_tilde > 0.0 && eps > 0.0 && k > 0.0) {
        return Err(CvError::InvalidParameter("covering bound needs d ≥ 1 and positive B, B̃, ε, k".into()));
    }
    Ok((2.0 * b / eps).powi(2).ceil() * d * log2(2.0 * std::f64::consts::E * k * b_tilde / (d * eps)))
}

/// `B̃ = log₂(2 + B₁B)`, the documented choice for `O(log(B₁B))`.
pub fn b_tilde(b1: f64, b: f64) -> f64 {
    log2(2.0 + b1 * b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSetting {
    /// Gaussian states, channels and general-dyne measurements.
    Gaussian,
    /// Gaussian circuits read out by coarse-grained photon counting.
    GaussianPhotocount,
    /// Generalized-Gaussian states with fixed-coefficient probes.
    Gg,
    /// Learning the photon-count effect itself.
    PhotocountMeasurement,
    /// Generic p-concept bound for a class of given fat-shattering dimension.
    Pconcept,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundParams {
    pub n: usize,
    /// Photon-number cutoff `K`.
    pub k: usize,
    /// Encoding order `ℓ`; 0 means plain state/channel/effect learning.
    pub ell: usize,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub nu: f64,
    /// Dimension for the generic p-concept setting.
    pub dim: Option<f64>,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { n: 1, k: 5, ell: 0, b1: 1.0, b2: 1.0, b3: 1.0, eps: 0.1, gamma: 0.05, delta: 0.01, nu: 1.0, dim: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub setting: BoundSetting,
    pub t0: f64,
    /// Dimension entering the bound, after the encoding factor.
    pub dimension: f64,
    /// `d · log²(1/(νε)) / (ν⁴ε²)` or the GG analogue, without the confidence term.
    pub leading_term: f64,
    pub growth: String,
    pub formula: String,
}

fn check(p: &BoundParams) -> Result<()> {
    let pos = [p.eps, p.delta, p.nu, p.gamma];
    if p.n == 0 || pos.iter().any(|v| !(*v > 0.0)) {
        return Err(CvError::InvalidParameter("bounds need n ≥ 1 and positive ε, γ, δ, ν".into()));
    }
    if p.delta >= 1.0 {
        return Err(CvError::InvalidParameter("δ must be below 1".into()));
    }
    Ok(())
}

/// Encoding multiplies the parameter count by `ℓ`.
fn encoding_factor(ell: usize) -> f64 {
    ell.max(1) as f64
}

/// `(1/(ν⁴ε²)) (d log²(1/(νε)) + log(1/δ))`.
fn t_fat(d: f64, p: &BoundParams) -> (f64, f64) {
    let ne = p.nu * p.eps;
    let l = log2(1.0 / ne).max(1.0);
    let pre = 1.0 / (p.nu.powi(4) * p.eps * p.eps);
    let lead = pre * d * l * l;
    (lead + pre * log2(1.0 / p.delta), lead)
}

pub fn sample_complexity_bound(setting: BoundSetting, p: &BoundParams) -> Result<BoundReport> {
    check(p)?;
    let enc = encoding_factor(p.ell);
    let fat_formula = "(1/(nu^4 eps^2)) * (d * log2(1/(nu eps))^2 + log2(1/delta))";
    let (t0, dimension, leading_term, growth, formula) = match setting {
        BoundSetting::Gaussian => {
            let d = enc * pdim_gaussian(p.n);
            let (t, lead) = t_fat(d, p);
            (t, d, lead, "polynomial: n^2 log n".to_string(), format!("{fat_formula}, d = l*(Pdim F_quad + 2 Pdim F_d)"))
        }
        BoundSetting::GaussianPhotocount => {
            if p.k == 0 {
                return Err(CvError::InvalidParameter("photon cutoff K must be at least 1".into()));
            }
            let d = enc * pdim_gaussian_photocount(p.n, p.k);
            let (t, lead) = t_fat(d, p);
            (t, d, lead, "polynomial: n^2 log(nK)".to_string(), format!("{fat_formula}, d = l*(Pdim F_g + Pdim F_p)"))
        }
        BoundSetting::PhotocountMeasurement => {
            let d = enc * pdim_photocount_measurement(p.n, p.k);
            let (t, lead) = t_fat(d, p);
            (t, d, lead, "exponential in the number of modes: (K+1)^n".to_string(), format!("{fat_formula}, d = l*(K+1)^n"))
        }
        BoundSetting::Gg => {
            if !(p.b2 > 0.0 && p.b3 > 0.0 && p.b1 >= 0.0) {
                return Err(CvError::InvalidParameter("GG bound needs B1 ≥ 0 and positive B2, B3".into()));
            }
            let d = enc * pdim_gg(p.n);
            let e1 = p.nu * p.nu * p.eps;
            let b = p.b2 / p.b3;
            let bt = b_tilde(p.b1, b);
            let lead = d * b * b / e1.powi(4) * log2(b * bt / (e1 * d)).max(1.0);
            let t = lead + log2(1.0 / p.delta) / (e1 * e1);
            (
                t,
                d,
                lead,
                "polynomial: n^2 eps^-4 B^2".to_string(),
                "d*B^2/e'^4 * max(log2(B*Bt/(e' d)), 1) + log2(1/delta)/e'^2, e' = nu^2 eps, B = B2/B3, Bt = log2(2 + B1 B)"
                    .to_string(),
            )
        }
        BoundSetting::Pconcept => {
            let d = p.dim.ok_or_else(|| CvError::InvalidParameter("p-concept bound needs dim".into()))?;
            if !(d > 0.0) {
                return Err(CvError::InvalidParameter("dimension must be positive".into()));
            }
            let l = log2(d / (p.gamma * p.eps)).max(1.0);
            let lead = d * l * l / p.eps;
            (
                lead + log2(1.0 / p.delta) / p.eps,
                d,
                lead,
                "given dimension".to_string(),
                "(1/eps) * (d * log2(d/(gamma eps))^2 + log2(1/delta))".to_string(),
            )
        }
    };
    Ok(BoundReport { setting, t0, dimension, leading_term, growth, formula })
}
