//! Gaussian states, channels and general-dyne effects.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{self, omega};

/// Default absolute tolerance for positivity checks.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    pub n: usize,
    pub omega: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        Self { n, omega: omega(n) }
    }
}

/// Outcome of a validity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub ok: bool,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::StateWire", into = "crate::io::StateWire")]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn check_shapes(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<usize> {
    let d = mean.len();
    if d == 0 || d % 2 != 0 {
        return Err(CvError::Shape(format!("vector length {d} is not 2n")));
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(CvError::Shape(format!(
            "matrix is {}x{}, expected {d}x{d}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    Ok(d / 2)
}

impl GaussianState {
    /// Build a state, checking shapes only. Use [`validate_state`] for physicality.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_shapes(&mean, &cov)?;
        Ok(Self { mean, cov })
    }

    pub fn n(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n),
            cov: DMatrix::identity(2 * n, 2 * n) * 0.5,
        }
    }

    /// Product of coherent states with the given amplitudes.
    pub fn coherent(alphas: &[Complex64]) -> Self {
        let n = alphas.len();
        let mut s = Self::vacuum(n);
        for (i, a) in alphas.iter().enumerate() {
            s.mean[2 * i] = std::f64::consts::SQRT_2 * a.re;
            s.mean[2 * i + 1] = std::f64::consts::SQRT_2 * a.im;
        }
        s
    }

    /// Product of thermal states with the given mean photon numbers.
    pub fn thermal(nbar: &[f64]) -> Self {
        let n = nbar.len();
        let mut s = Self::vacuum(n);
        for (i, nb) in nbar.iter().enumerate() {
            s.cov[(2 * i, 2 * i)] = nb + 0.5;
            s.cov[(2 * i + 1, 2 * i + 1)] = nb + 0.5;
        }
        s
    }

    /// Single-mode squeezed vacuum, x-quadrature variance `e^{-2r}/2`, rotated by `phi`.
    pub fn squeezed_vacuum(r: f64, phi: f64) -> Self {
        let d = DMatrix::from_row_slice(2, 2, &[(-2.0 * r).exp() / 2.0, 0.0, 0.0, (2.0 * r).exp() / 2.0]);
        let rot = rotation(phi);
        Self {
            mean: DVector::zeros(2),
            cov: &rot * d * rot.transpose(),
        }
    }

    /// Mean total photon number.
    pub fn mean_photon_number(&self) -> f64 {
        let n = self.n() as f64;
        (self.cov.trace() - n) / 2.0 + self.mean.norm_squared() / 2.0
    }

    /// Variance of the total photon number.
    pub fn photon_number_variance(&self) -> f64 {
        let n = self.n() as f64;
        let v2 = (&self.cov * &self.cov).trace();
        0.5 * v2 - n / 4.0 + (self.mean.transpose() * &self.cov * &self.mean)[(0, 0)]
    }
}

/// Single-mode phase rotation acting on (x, p).
pub fn rotation(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Recorded physical realisation of a Gaussian channel:
/// unitary `pre`, then per-mode pure loss `eta[i]`, then per-mode
/// quantum-limited amplification `gain[i]`, then unitary `post`, then displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::DilationWire", into = "crate::io::DilationWire")]
pub struct ChannelDilation {
    pub pre: DMatrix<f64>,
    pub eta: Vec<f64>,
    pub gain: Vec<f64>,
    pub post: DMatrix<f64>,
    pub disp: DVector<f64>,
}

impl ChannelDilation {
    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn is_unitary(&self) -> bool {
        self.eta.iter().all(|&e| e == 1.0) && self.gain.iter().all(|&g| g == 1.0)
    }

    /// The (d, X, Y) triple this dilation realises.
    pub fn to_xy(&self) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        let mut noise = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let (e, g) = (self.eta[i], self.gain[i]);
            let s = (g * e).sqrt();
            let y = (g * (1.0 - e) + g - 1.0) / 2.0;
            for k in 0..2 {
                t[(2 * i + k, 2 * i + k)] = s;
                noise[(2 * i + k, 2 * i + k)] = y;
            }
        }
        let x = &self.post * t * &self.pre;
        let y = &self.post * noise * self.post.transpose();
        (self.disp.clone(), x, linalg::symmetrize(&y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::ChannelWire", into = "crate::io::ChannelWire")]
pub struct GaussianChannel {
    pub disp: DVector<f64>,
    pub x_mat: DMatrix<f64>,
    pub y_mat: DMatrix<f64>,
    pub dilation: Option<ChannelDilation>,
}

impl GaussianChannel {
    pub fn new(disp: DVector<f64>, x_mat: DMatrix<f64>, y_mat: DMatrix<f64>) -> Result<Self> {
        check_shapes(&disp, &x_mat)?;
        check_shapes(&disp, &y_mat)?;
        Ok(Self { disp, x_mat, y_mat, dilation: None })
    }

    pub fn n(&self) -> usize {
        self.disp.len() / 2
    }

    pub fn from_dilation(dil: ChannelDilation) -> Self {
        let (disp, x_mat, y_mat) = dil.to_xy();
        Self { disp, x_mat, y_mat, dilation: Some(dil) }
    }

    fn per_mode(n: usize, eta: f64, gain: f64) -> Self {
        Self::from_dilation(ChannelDilation {
            pre: DMatrix::identity(2 * n, 2 * n),
            eta: vec![eta; n],
            gain: vec![gain; n],
            post: DMatrix::identity(2 * n, 2 * n),
            disp: DVector::zeros(2 * n),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::per_mode(n, 1.0, 1.0)
    }

    /// Pure loss with transmissivity `eta` on every mode.
    pub fn pure_loss(n: usize, eta: f64) -> Self {
        Self::per_mode(n, eta, 1.0)
    }

    /// Quantum-limited amplifier with gain `g ≥ 1` on every mode.
    pub fn amplifier(n: usize, g: f64) -> Self {
        Self::per_mode(n, 1.0, g)
    }

    /// Thermal loss: transmissivity `eta`, environment with `nbar` mean photons.
    pub fn thermal_loss(n: usize, eta: f64, nbar: f64) -> Self {
        let g = 1.0 + (1.0 - eta) * nbar;
        Self::per_mode(n, eta / g, g)
    }

    /// Classical additive noise `Y = y·I`, `X = I`.
    pub fn additive_noise(n: usize, y: f64) -> Self {
        Self::per_mode(n, 1.0 / (1.0 + y), 1.0 + y)
    }

    pub fn displacement(d: DVector<f64>) -> Self {
        let n = d.len() / 2;
        let mut ch = Self::identity(n);
        ch.disp = d.clone();
        if let Some(dil) = ch.dilation.as_mut() {
            dil.disp = d;
        }
        ch
    }

    /// Gaussian unitary with symplectic matrix `s`.
    pub fn symplectic(s: DMatrix<f64>) -> Self {
        let n = s.nrows() / 2;
        Self::from_dilation(ChannelDilation {
            pre: s,
            eta: vec![1.0; n],
            gain: vec![1.0; n],
            post: DMatrix::identity(2 * n, 2 * n),
            disp: DVector::zeros(2 * n),
        })
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &GaussianChannel) -> GaussianChannel {
        let x = &next.x_mat * &self.x_mat;
        let y = &next.x_mat * &self.y_mat * next.x_mat.transpose() + &next.y_mat;
        let d = &next.x_mat * &self.disp + &next.disp;
        let dilation = match (&self.dilation, &next.dilation) {
            (Some(a), Some(b)) if a.is_unitary() => {
                let s1 = &a.post * &a.pre;
                Some(ChannelDilation {
                    pre: &b.pre * s1,
                    eta: b.eta.clone(),
                    gain: b.gain.clone(),
                    post: b.post.clone(),
                    disp: d.clone(),
                })
            }
            (Some(a), Some(b)) if b.is_unitary() => {
                let s2 = &b.post * &b.pre;
                Some(ChannelDilation {
                    pre: a.pre.clone(),
                    eta: a.eta.clone(),
                    gain: a.gain.clone(),
                    post: s2 * &a.post,
                    disp: d.clone(),
                })
            }
            _ => None,
        };
        GaussianChannel { disp: d, x_mat: x, y_mat: linalg::symmetrize(&y), dilation }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::EffectWire", into = "crate::io::EffectWire")]
pub struct GeneralDyneEffect {
    pub outcome: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GeneralDyneEffect {
    pub fn new(outcome: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_shapes(&outcome, &cov)?;
        Ok(Self { outcome, cov })
    }

    pub fn n(&self) -> usize {
        self.outcome.len() / 2
    }

    /// Heterodyne (coherent-state projector) effect at the given phase-space point.
    pub fn heterodyne(outcome: DVector<f64>) -> Self {
        let d = outcome.len();
        Self { outcome, cov: DMatrix::identity(d, d) * 0.5 }
    }

    /// The Gaussian state whose density operator equals this effect.
    pub fn as_state(&self) -> GaussianState {
        GaussianState { mean: self.outcome.clone(), cov: self.cov.clone() }
    }
}

fn cov_diagnostic(cov: &DMatrix<f64>, tol: f64) -> Diagnostic {
    let n = cov.nrows() / 2;
    let min = linalg::min_eig_uncertainty(cov, &omega(n));
    Diagnostic {
        ok: linalg::is_symmetric(cov, 1e-9 * (1.0 + cov.amax())) && min >= -tol,
        min_eigenvalue: min,
    }
}

/// Uncertainty check `V + (i/2)Ω ⪰ −tol`.
pub fn validate_state(state: &GaussianState, tol: f64) -> Result<Diagnostic> {
    check_shapes(&state.mean, &state.cov)?;
    Ok(cov_diagnostic(&state.cov, tol))
}

pub fn validate_effect(eff: &GeneralDyneEffect, tol: f64) -> Result<Diagnostic> {
    check_shapes(&eff.outcome, &eff.cov)?;
    Ok(cov_diagnostic(&eff.cov, tol))
}

/// Complete-positivity check `Y + (i/2)(Ω − XΩXᵀ) ⪰ −tol`.
pub fn validate_channel(ch: &GaussianChannel, tol: f64) -> Result<Diagnostic> {
    check_shapes(&ch.disp, &ch.x_mat)?;
    check_shapes(&ch.disp, &ch.y_mat)?;
    let w = omega(ch.n());
    let a = &w - &ch.x_mat * &w * ch.x_mat.transpose();
    let min = linalg::min_eig_uncertainty(&ch.y_mat, &a);
    Ok(Diagnostic {
        ok: linalg::is_symmetric(&ch.y_mat, 1e-9 * (1.0 + ch.y_mat.amax())) && min >= -tol,
        min_eigenvalue: min,
    })
}

fn require_state(s: &GaussianState) -> Result<()> {
    let d = validate_state(s, PSD_TOL)?;
    if d.ok {
        Ok(())
    } else {
        Err(CvError::InvalidState(format!("uncertainty violated (min eigenvalue {:.3e})", d.min_eigenvalue)))
    }
}

fn require_channel(c: &GaussianChannel) -> Result<()> {
    let d = validate_channel(c, PSD_TOL)?;
    if d.ok {
        Ok(())
    } else {
        Err(CvError::InvalidChannel(format!("not completely positive (min eigenvalue {:.3e})", d.min_eigenvalue)))
    }
}

fn require_effect(e: &GeneralDyneEffect) -> Result<()> {
    let d = validate_effect(e, PSD_TOL)?;
    if d.ok {
        Ok(())
    } else {
        Err(CvError::InvalidEffect(format!("uncertainty violated (min eigenvalue {:.3e})", d.min_eigenvalue)))
    }
}

fn same_n(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(CvError::Shape(format!("mode counts differ: {a} vs {b}")))
    }
}

/// `(Xm + d, XVXᵀ + Y)`.
pub fn apply_gaussian_channel(state: &GaussianState, ch: &GaussianChannel) -> Result<GaussianState> {
    same_n(state.n(), ch.n())?;
    require_state(state)?;
    require_channel(ch)?;
    Ok(apply_unchecked(state, ch))
}

pub(crate) fn apply_unchecked(state: &GaussianState, ch: &GaussianChannel) -> GaussianState {
    let mean = &ch.x_mat * &state.mean + &ch.disp;
    let cov = &ch.x_mat * &state.cov * ch.x_mat.transpose() + &ch.y_mat;
    GaussianState { mean, cov: linalg::symmetrize(&cov) }
}

/// Normalised Gaussian `exp(−½(r−m)ᵀV⁻¹(r−m)) / √det(2πV)`.
pub fn gaussian_density(mean: &DVector<f64>, cov: &DMatrix<f64>, point: &DVector<f64>) -> Result<f64> {
    check_shapes(mean, cov)?;
    if point.len() != mean.len() {
        return Err(CvError::Shape(format!("point length {} vs {}", point.len(), mean.len())));
    }
    let (inv, det) = linalg::spd_inverse_det(cov)?;
    let diff = point - mean;
    let q = (diff.transpose() * inv * &diff)[(0, 0)];
    let d = mean.len() as i32;
    let norm = ((2.0 * std::f64::consts::PI).powi(d) * det).sqrt();
    Ok((-0.5 * q).exp() / norm)
}

/// Outcome density `G_{m_out, V_out + V′}(m′)`.
pub fn gaussian_outcome_density(
    state: &GaussianState,
    ch: &GaussianChannel,
    eff: &GeneralDyneEffect,
) -> Result<f64> {
    same_n(state.n(), eff.n())?;
    require_effect(eff)?;
    let out = apply_gaussian_channel(state, ch)?;
    gaussian_density(&out.mean, &(&out.cov + &eff.cov), &eff.outcome)
}

/// Binary effect probability `(2π)ⁿ · G_{m_out, V_out + V′}(m′)`.
pub fn gaussian_effect_probability(
    state: &GaussianState,
    ch: &GaussianChannel,
    eff: &GeneralDyneEffect,
) -> Result<f64> {
    let dens = gaussian_outcome_density(state, ch, eff)?;
    Ok((2.0 * std::f64::consts::PI).powi(state.n() as i32) * dens)
}

/// Random symplectic matrix `exp(ΩH)` with `H` symmetric, entries of size `scale`.
pub fn random_symplectic<R: Rng>(n: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let d = 2 * n;
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (omega(n) * h).exp()
}

fn random_vector<R: Rng>(d: usize, radius: f64, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm().max(1e-12);
    v * (radius * rng.random::<f64>() / norm)
}

/// Random mixed state `S·diag(ν)·Sᵀ` with mean of norm at most `radius`
/// and excess trace `tr V − n` at most `energy`.
pub fn random_state<R: Rng>(n: usize, energy: f64, radius: f64, rng: &mut R) -> GaussianState {
    let mut scale = 0.35;
    let nus: Vec<f64> = (0..n).map(|_| 0.5 + 0.25 * energy.min(1.0) * rng.random::<f64>() / n as f64).collect();
    loop {
        let s = random_symplectic(n, scale, rng);
        let mut diag = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            diag[(2 * i, 2 * i)] = nus[i];
            diag[(2 * i + 1, 2 * i + 1)] = nus[i];
        }
        let cov = linalg::symmetrize(&(&s * diag * s.transpose()));
        if cov.trace() - n as f64 <= energy || scale < 1e-3 {
            return GaussianState { mean: random_vector(2 * n, radius, rng), cov };
        }
        scale *= 0.5;
    }
}

/// Random channel with a recorded dilation (unitaries, loss, amplification).
pub fn random_channel<R: Rng>(n: usize, energy: f64, rng: &mut R) -> GaussianChannel {
    let pre = random_symplectic(n, 0.1, rng);
    let post = random_symplectic(n, 0.1, rng);
    let eta = (0..n).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
    let gain = (0..n).map(|_| 1.0 + 0.2 * rng.random::<f64>()).collect();
    let disp = random_vector(2 * n, energy / 2.0, rng);
    GaussianChannel::from_dilation(ChannelDilation { pre, eta, gain, post, disp })
}

/// Deterministic random (state, channel, effect) triple with `‖m‖ ≤ energy_bound`
/// and `tr V − n ≤ energy_bound`. The effect is centred near the channel output.
pub fn random_physical_instance(
    n: usize,
    energy_bound: f64,
    seed: u64,
) -> (GaussianState, GaussianChannel, GeneralDyneEffect) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = random_state(n, energy_bound, energy_bound, &mut rng);
    let ch = random_channel(n, energy_bound, &mut rng);
    let out = apply_unchecked(&state, &ch);
    let shape = random_state(n, energy_bound, 0.0, &mut rng);
    let outcome = &out.mean + random_vector(2 * n, 1.0, &mut rng);
    (state, ch, GeneralDyneEffect { outcome, cov: shape.cov })
}

/// Williamson form `V = S·diag(ν₁,ν₁,…)·Sᵀ`; returns `(S, ν)`.
pub fn williamson(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = cov.nrows();
    let n = d / 2;
    let cond = linalg::spd_condition(cov);
    if !(cond <= linalg::MAX_CONDITION) {
        return Err(CvError::Singular { cond });
    }
    let half = linalg::sym_sqrt(cov);
    let inv_half = linalg::sym_fn(cov, |x| 1.0 / x.sqrt());
    let m = &inv_half * omega(n) * &inv_half;
    let im = m.map(|x| Complex64::new(0.0, x));
    let eig = nalgebra::SymmetricEigen::new(im);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut o = DMatrix::zeros(d, d);
    let mut nus = Vec::with_capacity(n);
    let mut dinv = DMatrix::zeros(d, d);
    for (j, &idx) in order.iter().take(n).enumerate() {
        let mu = eig.eigenvalues[idx];
        let nu = 1.0 / mu;
        let u = eig.eigenvectors.column(idx);
        for r in 0..d {
            let e = std::f64::consts::SQRT_2 * u[r].re;
            let f = std::f64::consts::SQRT_2 * u[r].im;
            o[(r, 2 * j)] = f;
            o[(r, 2 * j + 1)] = e;
        }
        nus.push(nu);
        dinv[(2 * j, 2 * j)] = 1.0 / nu.sqrt();
        dinv[(2 * j + 1, 2 * j + 1)] = 1.0 / nu.sqrt();
    }
    let s = half * o * dinv;
    Ok((s, nus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn williamson_recovers_symplectic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let st = random_state(n, 2.0, 1.0, &mut rng);
            let (s, nu) = williamson(&st.cov).unwrap();
            let w = omega(n);
            assert!((&s * &w * s.transpose() - &w).amax() < 1e-9);
            let mut diag = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                diag[(2 * i, 2 * i)] = nu[i];
                diag[(2 * i + 1, 2 * i + 1)] = nu[i];
                assert!(nu[i] >= 0.5 - 1e-9);
            }
            assert!((&s * diag * s.transpose() - &st.cov).amax() < 1e-9);
        }
    }

    #[test]
    fn thermal_loss_matches_closed_form() {
        let ch = GaussianChannel::thermal_loss(1, 0.6, 0.8);
        let expect = 0.6 * 0.5 + 0.4 * 1.3;
        let out = apply_gaussian_channel(&GaussianState::vacuum(1), &ch).unwrap();
        assert!((out.cov[(0, 0)] - expect).abs() < 1e-12);
        assert!((ch.x_mat[(0, 0)] - 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn composed_dilation_matches_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = GaussianChannel::symplectic(random_symplectic(2, 0.3, &mut rng));
        let c = random_channel(2, 1.0, &mut rng);
        for ch in [u.then(&c), c.then(&u)] {
            let (d, x, y) = ch.dilation.as_ref().unwrap().to_xy();
            assert!((d - &ch.disp).amax() < 1e-12);
            assert!((x - &ch.x_mat).amax() < 1e-12);
            assert!((y - &ch.y_mat).amax() < 1e-12);
        }
    }
}
