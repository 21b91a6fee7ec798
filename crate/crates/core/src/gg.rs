//! Generalized-Gaussian objects: phase-space functions that are complex linear
//! combinations of complex Gaussians.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{self, omega, CMatrix, CVector, ComplexFactor};
use crate::photodetection::{all_patterns, PhotoCountEffect, PhotocountKernel};
use crate::symplectic::{GaussianChannel, GaussianState, GeneralDyneEffect};

pub const DEFAULT_COMPONENT_LIMIT: usize = 4096;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `c · G_{m,V}`; the coefficient is stored as its logarithm so that tiny
/// coefficients paired with huge complex Gaussians stay representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::ComponentWire", into = "crate::io::ComponentWire")]
pub struct GGComponent {
    pub log_coeff: Complex64,
    pub mean: CVector,
    pub cov: CMatrix,
}

impl GGComponent {
    pub fn new(coeff: Complex64, mean: CVector, cov: CMatrix) -> Self {
        Self { log_coeff: coeff.ln(), mean, cov }
    }

    pub fn from_log(log_coeff: Complex64, mean: CVector, cov: CMatrix) -> Self {
        Self { log_coeff, mean, cov }
    }

    pub fn coeff(&self) -> Complex64 {
        self.log_coeff.exp()
    }

    pub fn abs_coeff(&self) -> f64 {
        self.log_coeff.re.exp()
    }

    pub fn real_gaussian(mean: &DVector<f64>, cov: &nalgebra::DMatrix<f64>) -> Self {
        Self::new(Complex64::new(1.0, 0.0), linalg::to_complex_vec(mean), linalg::to_complex(cov))
    }

    /// `ln(c · G_{m,V}(point))`.
    pub fn ln_eval(&self, point: &CVector) -> Result<Complex64> {
        Ok(self.log_coeff + linalg::ln_complex_gaussian(&self.mean, &self.cov, point)?)
    }
}

/// Single-mode pure state `Σₐ wₐ S(r)|αₐ⟩` (unnormalised), where `S(r)` squeezes
/// the x quadrature by `e^{−r}`. Kept alongside constructed states so that
/// independent simulators can rebuild the density operator from kets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KetSuperposition {
    pub squeeze: f64,
    pub amplitudes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGState {
    pub n: usize,
    pub components: Vec<GGComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kets: Option<KetSuperposition>,
}

/// Same structure as a state; coefficients may sum to less than one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGEffect {
    pub n: usize,
    pub components: Vec<GGComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kets: Option<KetSuperposition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::BranchWire", into = "crate::io::BranchWire")]
pub struct GGBranch {
    pub coeff: Complex64,
    pub disp: CVector,
    pub x_mat: CMatrix,
    pub y_mat: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGChannel {
    pub n: usize,
    pub branches: Vec<GGBranch>,
}

impl GGState {
    pub fn from_gaussian(s: &GaussianState) -> Self {
        Self { n: s.n(), components: vec![GGComponent::real_gaussian(&s.mean, &s.cov)], kets: None }
    }

    pub fn coeff_sum(&self) -> Complex64 {
        self.components.iter().map(|c| c.coeff()).sum()
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.components.iter().map(|c| c.abs_coeff()).sum()
    }

    pub fn as_effect(&self) -> GGEffect {
        GGEffect { n: self.n, components: self.components.clone(), kets: self.kets.clone() }
    }
}

impl GGEffect {
    pub fn from_dyne(e: &GeneralDyneEffect) -> Self {
        Self { n: e.n(), components: vec![GGComponent::real_gaussian(&e.outcome, &e.cov)], kets: None }
    }

    pub fn as_state(&self) -> GGState {
        GGState { n: self.n, components: self.components.clone(), kets: self.kets.clone() }
    }
}

impl GGChannel {
    pub fn identity(n: usize) -> Self {
        Self::from_gaussian(&GaussianChannel::identity(n))
    }

    pub fn from_gaussian(c: &GaussianChannel) -> Self {
        Self {
            n: c.n(),
            branches: vec![GGBranch {
                coeff: Complex64::new(1.0, 0.0),
                disp: linalg::to_complex_vec(&c.disp),
                x_mat: linalg::to_complex(&c.x_mat),
                y_mat: linalg::to_complex(&c.y_mat),
            }],
        }
    }

    /// Mixture `Σ pₖ Φₖ` of Gaussian channels.
    pub fn mixture(parts: &[(f64, GaussianChannel)]) -> Self {
        let n = parts[0].1.n();
        let branches = parts
            .iter()
            .map(|(p, c)| {
                let mut b = Self::from_gaussian(c).branches.remove(0);
                b.coeff = Complex64::new(*p, 0.0);
                b
            })
            .collect();
        Self { n, branches }
    }
}

/// Coefficient sum, Re-covariance positivity, uncertainty, and reality checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGDiagnostic {
    pub ok: bool,
    pub coeff_sum: Complex64,
    pub min_re_cov_eig: f64,
    pub min_uncertainty_eig: f64,
    pub max_imag: f64,
}

fn component_checks(n: usize, comps: &[GGComponent]) -> Result<(f64, f64)> {
    let d = 2 * n;
    let mut min_re = f64::INFINITY;
    let mut total = CMatrix::zeros(d, d);
    for c in comps {
        if c.mean.len() != d || c.cov.nrows() != d || c.cov.ncols() != d {
            return Err(CvError::Shape(format!("component dimension differs from 2n = {d}")));
        }
        let re = c.cov.map(|z| z.re);
        min_re = min_re.min(linalg::min_eig_hermitian(&linalg::to_complex(&re)));
        total += &c.cov;
    }
    let w = omega(n).map(|x| Complex64::new(0.0, 0.5 * x));
    let unc = linalg::min_eig_hermitian(&(total + w));
    Ok((min_re, unc))
}

fn sample_points(n: usize, comps: &[GGComponent], count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let c = &comps[i % comps.len()];
            CVector::from_fn(2 * n, |r, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(c.mean[r].re + 1.5 * z, 0.0)
            })
        })
        .collect()
}

fn ln_sum_eval(comps: &[GGComponent], point: &CVector) -> Result<(Complex64, f64)> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for c in comps {
        let v = c.ln_eval(point)?.exp();
        mass += v.norm();
        total += v;
    }
    Ok((total, mass))
}

fn diagnose(n: usize, comps: &[GGComponent], normalized: bool, tol: f64) -> Result<GGDiagnostic> {
    if comps.is_empty() {
        return Err(CvError::InvalidState("no components".into()));
    }
    let (min_re, unc) = component_checks(n, comps)?;
    let coeff_sum: Complex64 = comps.iter().map(|c| c.coeff()).sum();
    let mut max_imag: f64 = 0.0;
    for p in sample_points(n, comps, 100, 17) {
        let (v, mass) = ln_sum_eval(comps, &p)?;
        max_imag = max_imag.max(v.im.abs() / mass.max(1.0));
    }
    let sum_ok = if normalized {
        (coeff_sum - 1.0).norm() <= 1e-6
    } else {
        coeff_sum.re <= 1.0 + 1e-6 && coeff_sum.im.abs() <= 1e-6
    };
    Ok(GGDiagnostic {
        ok: sum_ok && min_re >= -tol && unc >= -tol && max_imag <= 1e-9,
        coeff_sum,
        min_re_cov_eig: min_re,
        min_uncertainty_eig: unc,
        max_imag,
    })
}

pub fn validate_gg_state(state: &GGState, tol: f64) -> Result<GGDiagnostic> {
    diagnose(state.n, &state.components, true, tol)
}

pub fn validate_gg_effect(eff: &GGEffect, tol: f64) -> Result<GGDiagnostic> {
    diagnose(eff.n, &eff.components, false, tol)
}

fn reality(total: Complex64, mass: f64) -> Result<f64> {
    if total.im.abs() > 1e-9 * mass.max(1.0) {
        Err(CvError::Reality { imag: total.im })
    } else {
        Ok(total.re)
    }
}

/// Wigner function value `Σᵢ cᵢ G_{mᵢ,Vᵢ}(r)`.
pub fn gg_wigner_eval(state: &GGState, point: &DVector<f64>) -> Result<f64> {
    if point.len() != 2 * state.n {
        return Err(CvError::Shape("point dimension".into()));
    }
    let (v, mass) = ln_sum_eval(&state.components, &linalg::to_complex_vec(point))?;
    reality(v, mass)
}

/// Componentwise channel action; output has |state| × |branches| components.
pub fn gg_apply_channel(state: &GGState, ch: &GGChannel) -> Result<GGState> {
    gg_apply_channel_with_limit(state, ch, DEFAULT_COMPONENT_LIMIT)
}

pub fn gg_apply_channel_with_limit(state: &GGState, ch: &GGChannel, limit: usize) -> Result<GGState> {
    if state.n != ch.n {
        return Err(CvError::Shape(format!("mode counts differ: {} vs {}", state.n, ch.n)));
    }
    let count = state.components.len() * ch.branches.len();
    if count > limit {
        return Err(CvError::ComponentOverflow { count, limit });
    }
    let mut components = Vec::with_capacity(count);
    for c in &state.components {
        for b in &ch.branches {
            components.push(transform_component(c, b));
        }
    }
    let identity_like = ch.branches.len() == 1 && is_identity_branch(&ch.branches[0]);
    Ok(GGState { n: state.n, components, kets: if identity_like { state.kets.clone() } else { None } })
}

fn is_identity_branch(b: &GGBranch) -> bool {
    let d = b.disp.len();
    b.disp.norm() == 0.0 && b.y_mat.norm() == 0.0 && b.x_mat == CMatrix::identity(d, d)
}

fn transform_component(c: &GGComponent, b: &GGBranch) -> GGComponent {
    GGComponent {
        log_coeff: c.log_coeff + b.coeff.ln(),
        mean: &b.x_mat * &c.mean + &b.disp,
        cov: &b.x_mat * &c.cov * b.x_mat.transpose() + &b.y_mat,
    }
}

/// One `(i, j, k)` term of the triple sum before recombination.
#[derive(Clone, Debug)]
struct RawTerm {
    i: usize,
    j: usize,
    k: usize,
    log_coeff: Complex64,
    quad: Complex64,
    ln_det: Complex64,
}

fn raw_terms(state: &GGState, ch: &GGChannel, eff: &GGEffect) -> Result<Vec<RawTerm>> {
    if state.n != ch.n || state.n != eff.n {
        return Err(CvError::Shape("mode counts differ".into()));
    }
    let two_pi = Complex64::new(TWO_PI, 0.0);
    let mut out = Vec::with_capacity(state.components.len() * ch.branches.len() * eff.components.len());
    for (i, c) in state.components.iter().enumerate() {
        for (k, b) in ch.branches.iter().enumerate() {
            let t = transform_component(c, b);
            for (j, e) in eff.components.iter().enumerate() {
                let sigma = &t.cov + &e.cov;
                let f = ComplexFactor::new(&(&sigma * two_pi))
                    .map_err(|_| CvError::SingularTerm { i, j, k, cond: linalg::complex_condition(&sigma) })?;
                let diff = &e.mean - &t.mean;
                let quad = f.quad(&diff) * two_pi;
                out.push(RawTerm { i, j, k, log_coeff: t.log_coeff + e.log_coeff, quad, ln_det: f.ln_det });
            }
        }
    }
    Ok(out)
}

/// Outcome density of Eq.-(gg) type: `Σ cᵢc′ⱼc″ₖ G_{m_out, V_out+V′}(m′)`.
pub fn gg_outcome_density(state: &GGState, ch: &GGChannel, eff: &GGEffect) -> Result<f64> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for t in raw_terms(state, ch, eff)? {
        let v = (t.log_coeff - 0.5 * t.quad - 0.5 * t.ln_det).exp();
        mass += v.norm();
        total += v;
    }
    reality(total, mass)
}

/// `(2π)ⁿ` times [`gg_outcome_density`]: a probability for normalised effects.
pub fn gg_outcome_probability(state: &GGState, ch: &GGChannel, eff: &GGEffect) -> Result<f64> {
    Ok(TWO_PI.powi(state.n as i32) * gg_outcome_density(state, ch, eff)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGTerm {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Real part of the exponent `½ (m′−m_out)ᵀ(V_out+V′)⁻¹(m′−m_out)`.
    pub r: f64,
    /// Imaginary part of the same exponent.
    pub im: f64,
    /// `|det 2π(V_out+V′)|^{1/2}`.
    pub m: f64,
    /// `½ arg det 2π(V_out+V′)` (principal branch).
    pub a: f64,
    /// `|cᵢc′ⱼc″ₖ| / B₂`.
    pub p: f64,
    /// `ln p`, kept for terms where `p` underflows.
    pub ln_p: f64,
    /// `arg(cᵢc′ⱼc″ₖ)` in `[0, 2π)`.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGTermDecomposition {
    pub b2: f64,
    pub terms: Vec<GGTerm>,
}

impl GGTermDecomposition {
    /// `B₂ Σ p e^{−R}/M cos(I + A − θ)`.
    pub fn recompose(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| self.b2 * (t.ln_p - t.r).exp() / t.m * (t.im + t.a - t.theta).cos())
            .sum()
    }

    pub fn p_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.p).sum()
    }
}

pub fn gg_decompose_terms(state: &GGState, ch: &GGChannel, eff: &GGEffect) -> Result<GGTermDecomposition> {
    let raw = raw_terms(state, ch, eff)?;
    let b2: f64 = raw.iter().map(|t| t.log_coeff.re.exp()).sum();
    let ln_b2 = b2.ln();
    let terms = raw
        .into_iter()
        .map(|t| {
            let ln_p = t.log_coeff.re - ln_b2;
            GGTerm {
                i: t.i,
                j: t.j,
                k: t.k,
                r: 0.5 * t.quad.re,
                im: 0.5 * t.quad.im,
                m: (0.5 * t.ln_det.re).exp(),
                a: 0.5 * t.ln_det.im,
                p: ln_p.exp(),
                ln_p,
                theta: t.log_coeff.im.rem_euclid(TWO_PI),
            }
        })
        .collect();
    Ok(GGTermDecomposition { b2, terms })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGConstraintConstants {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

/// `b1 = max |quadratic form|`, `b2 = Σ|c c′ c″|`, `b3 = min |det 2π(V_out+V′)|^{1/2}`.
pub fn gg_b_constants(state: &GGState, ch: &GGChannel, eff: &GGEffect) -> Result<GGConstraintConstants> {
    let raw = raw_terms(state, ch, eff)?;
    let mut b1: f64 = 0.0;
    let mut b2 = 0.0;
    let mut b3 = f64::INFINITY;
    for t in &raw {
        b1 = b1.max(t.quad.norm());
        b2 += t.log_coeff.re.exp();
        b3 = b3.min((0.5 * t.ln_det.re).exp());
    }
    Ok(GGConstraintConstants { b1, b2, b3 })
}

/// Photon-count probability `Σ_k q_k P(k)` of a GG state after a GG channel.
pub fn gg_photocount_probability(state: &GGState, ch: &GGChannel, eff: &PhotoCountEffect) -> Result<f64> {
    eff.validate(1e-9)?;
    let out = gg_apply_channel(state, ch)?;
    let patterns = all_patterns(out.n, eff.cutoff);
    let mut totals = vec![Complex64::new(0.0, 0.0); patterns.len()];
    let mut mass = 0.0;
    for c in &out.components {
        let ker = PhotocountKernel::new(&c.mean, &c.cov)?;
        let scale = c.coeff();
        for (t, v) in totals.iter_mut().zip(ker.table(eff.cutoff)) {
            let z = scale * v;
            mass += z.norm();
            *t += z;
        }
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (k, p) in patterns.iter().zip(totals) {
        if let Some(q) = eff.weights.get(k) {
            total += q * p;
        }
    }
    reality(total, mass)
}

/// Components of `Σₐ_b wₐ w̄_b S(r)|αₐ⟩⟨α_b|S(r)†`, normalised to unit trace.
pub fn from_kets(kets: KetSuperposition) -> Result<GGState> {
    let n_k = kets.amplitudes.len();
    if n_k == 0 || n_k != kets.weights.len() {
        return Err(CvError::InvalidParameter("amplitudes and weights must be non-empty and equal length".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (zx, zp) = ((-kets.squeeze).exp(), kets.squeeze.exp());
    let cov = CMatrix::from_diagonal(&CVector::from_vec(vec![
        Complex64::new(zx * zx / 2.0, 0.0),
        Complex64::new(zp * zp / 2.0, 0.0),
    ]));
    let i = Complex64::new(0.0, 1.0);
    let mut raw = Vec::with_capacity(n_k * n_k);
    let mut norm = 0.0;
    for (a, (&al, &wa)) in kets.amplitudes.iter().zip(&kets.weights).enumerate() {
        for (b, (&be, &wb)) in kets.amplitudes.iter().zip(&kets.weights).enumerate() {
            // ⟨β|α⟩ = exp(−|α|²/2 − |β|²/2 + β̄α)
            let ln_overlap = -0.5 * al.norm_sqr() - 0.5 * be.norm_sqr() + be.conj() * al;
            let ln_c = wa.ln() + wb.conj().ln() + ln_overlap;
            if a == b || ln_c.re > -700.0 {
                norm += ln_c.exp().re;
            }
            let mean = CVector::from_vec(vec![(al + be.conj()) * s * zx, i * (be.conj() - al) * s * zp]);
            raw.push((ln_c, mean));
        }
    }
    if !(norm > 0.0) {
        return Err(CvError::InvalidState("superposition has zero norm".into()));
    }
    let ln_norm = norm.ln();
    let components = raw
        .into_iter()
        .map(|(ln_c, mean)| GGComponent::from_log(ln_c - ln_norm, mean, cov.clone()))
        .collect();
    Ok(GGState { n: 1, components, kets: Some(kets) })
}

/// Cat state `∝ |α⟩ + sign·|−α⟩` as four components.
pub fn make_cat_state(alpha: Complex64, sign: i32) -> Result<GGState> {
    if sign != 1 && sign != -1 {
        return Err(CvError::InvalidParameter(format!("sign must be ±1, got {sign}")));
    }
    if sign == -1 && alpha.norm() == 0.0 {
        return Err(CvError::InvalidState("odd cat with α = 0 is the zero vector".into()));
    }
    from_kets(KetSuperposition {
        squeeze: 0.0,
        amplitudes: vec![alpha, -alpha],
        weights: vec![Complex64::new(1.0, 0.0), Complex64::new(sign as f64, 0.0)],
    })
}

/// Finite-energy GKP `|0⟩` state `∝ e^{−εn̂} Σ_{s=−L}^{L} |x = 2s√π⟩`: a
/// superposition of `2L+1` squeezed states, `(2L+1)²` components.
pub fn make_gkp_state(epsilon: f64, lattice: usize) -> Result<GGState> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CvError::InvalidParameter(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    if lattice < 1 {
        return Err(CvError::InvalidParameter("lattice size must be at least 1".into()));
    }
    let t = epsilon.tanh();
    let r = -0.5 * t.ln();
    let l = lattice as i64;
    let mut amplitudes = Vec::new();
    let mut weights = Vec::new();
    for s in -l..=l {
        let x = 2.0 * s as f64 * std::f64::consts::PI.sqrt();
        let centre = x / epsilon.cosh();
        // pre-squeeze coherent amplitude with x-mean e^{−r}·√2·Re α = centre
        amplitudes.push(Complex64::new(centre * r.exp() / std::f64::consts::SQRT_2, 0.0));
        weights.push(Complex64::new((-t * x * x / 2.0).exp().max(f64::MIN_POSITIVE), 0.0));
    }
    from_kets(KetSuperposition { squeeze: r, amplitudes, weights })
}

/// Approximate Fock state `|K⟩` from `K+1` coherent states of radius `r` on a circle.
pub fn make_fock_approx(photons: usize, r: f64) -> Result<GGState> {
    if photons == 0 {
        return Ok(GGState::from_gaussian(&GaussianState::vacuum(1)));
    }
    if !(r > 0.0 && r < 1.0 / (photons as f64).sqrt()) {
        return Err(CvError::InvalidParameter(format!("need 0 < r < 1/√K, got r = {r}")));
    }
    let m = photons + 1;
    let mut amplitudes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for j in 0..m {
        let phase = TWO_PI * j as f64 / m as f64;
        amplitudes.push(Complex64::from_polar(r, phase));
        weights.push(Complex64::from_polar(1.0, -phase * photons as f64));
    }
    from_kets(KetSuperposition { squeeze: 0.0, amplitudes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_ket_gives_real_mean() {
        let a = Complex64::new(0.7, -0.3);
        let s = from_kets(KetSuperposition { squeeze: 0.0, amplitudes: vec![a], weights: vec![Complex64::new(2.0, 1.0)] })
            .unwrap();
        assert_eq!(s.components.len(), 1);
        let c = &s.components[0];
        assert!((c.coeff() - 1.0).norm() < 1e-12);
        assert!((c.mean[0] - Complex64::new(0.7 * 2f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((c.mean[1] - Complex64::new(-0.3 * 2f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn odd_cat_coefficient_mass() {
        let s = make_cat_state(Complex64::new(1.0, 0.0), -1).unwrap();
        let e = (-2.0f64).exp();
        assert!((s.abs_coeff_sum() - (1.0 + e) / (1.0 - e)).abs() < 1e-12);
        assert!((s.coeff_sum() - 1.0).norm() < 1e-12);
    }
}
