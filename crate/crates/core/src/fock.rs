//! Truncated Fock-space simulator used as a brute-force reference for the
//! phase-space engines (desk scale: n ≤ 2, cutoff ≤ 40).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CvError, Result};
use crate::gg::{GGEffect, GGState, KetSuperposition};
use crate::linalg::{self, omega, CMatrix, CVector};
use crate::photodetection::{all_patterns, PhotoCountEffect};
use crate::symplectic::{williamson, ChannelDilation, GaussianChannel, GaussianState, GeneralDyneEffect};

/// Largest accepted trace deficit for truncated density matrices.
pub const TRUNCATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub n: usize,
    pub cutoff: usize,
    pub mat: CMatrix,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

impl FockOperator {
    pub fn zeros(n: usize, cutoff: usize) -> Self {
        let dim = cutoff.pow(n as u32);
        Self { n, cutoff, mat: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(n: usize, cutoff: usize) -> Self {
        let dim = cutoff.pow(n as u32);
        Self { n, cutoff, mat: CMatrix::identity(dim, dim) }
    }

    pub fn vacuum(n: usize, cutoff: usize) -> Self {
        let mut r = Self::zeros(n, cutoff);
        r.mat[(0, 0)] = ONE;
        r
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }

    /// Embed into a larger cutoff (zero padding) or truncate to a smaller one.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(self.n, cutoff);
        let keep = self.cutoff.min(cutoff);
        let src = all_patterns(self.n, keep - 1);
        for a in &src {
            for b in &src {
                out.mat[(index(a, cutoff), index(b, cutoff))] = self.mat[(index(a, self.cutoff), index(b, self.cutoff))];
            }
        }
        out
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eig_hermitian(&self.mat)
    }
}

fn index(k: &[usize], cutoff: usize) -> usize {
    k.iter().fold(0, |acc, &x| acc * cutoff + x)
}

/// `D ≥ E[N] + 8·sd(N) + 10`.
pub fn auto_cutoff(state: &GaussianState) -> usize {
    let mean = state.mean_photon_number().max(0.0);
    let sd = state.photon_number_variance().max(0.0).sqrt();
    (mean + 8.0 * sd + 10.0).ceil() as usize
}

fn working_dim(cutoff: usize) -> usize {
    2 * cutoff + 40
}

#[cfg(test)]
fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Displacement `exp(αa† − ᾱa)` in the `cutoff` box, column by column from
/// `D|0⟩ = |α⟩` and `D a† = (a† − ᾱ) D`. Only raising steps are used, so the
/// truncated block is exact.
pub fn displacement_matrix(alpha: Complex64, cutoff: usize) -> CMatrix {
    let mut m = CMatrix::zeros(cutoff, cutoff);
    m.set_column(0, &coherent_ket(alpha, cutoff));
    for c in 1..cutoff {
        let norm = (c as f64).sqrt();
        for r in 0..cutoff {
            let up = if r > 0 { m[(r - 1, c - 1)] * (r as f64).sqrt() } else { ZERO };
            m[(r, c)] = (up - alpha.conj() * m[(r, c - 1)]) / norm;
        }
    }
    m
}

/// Squeezer `exp(r/2 (a² − a†²))`, mapping x ↦ e^{−r}x. Row zero is the
/// conjugate squeezed vacuum; further rows follow from
/// `S a = (cosh r·a + sinh r·a†) S`, which only ever looks upwards.
pub fn squeeze_matrix(r: f64, cutoff: usize) -> CMatrix {
    let (ch, sh, th) = (r.cosh(), r.sinh(), r.tanh());
    let mut m = DMatrix::<f64>::zeros(cutoff, cutoff);
    let mut amp = 1.0 / ch.sqrt();
    for k in (0..cutoff).step_by(2) {
        m[(0, k)] = amp;
        amp *= th * (((k + 1) as f64) / ((k + 2) as f64)).sqrt();
    }
    for n in 0..cutoff {
        for row in 0..cutoff - 1 {
            let left = if n > 0 { (n as f64).sqrt() * m[(row, n - 1)] } else { 0.0 };
            let above = if row > 0 { sh * (row as f64).sqrt() * m[(row - 1, n)] } else { 0.0 };
            m[(row + 1, n)] = (left - above) / (ch * ((row + 1) as f64).sqrt());
        }
    }
    linalg::to_complex(&m)
}

/// Coherent-state vector `e^{−|α|²/2} Σ αᵏ/√k! |k⟩`.
pub fn coherent_ket(alpha: Complex64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut term = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..dim {
        v[k] = term;
        term = term * alpha / ((k + 1) as f64).sqrt();
    }
    v
}

/// `A_j ρ A_j†` for a single-mode operator acting on `mode`.
fn conj_mode(rho: &CMatrix, op: &CMatrix, mode: usize, n: usize, cutoff: usize) -> CMatrix {
    let left = mul_mode_left(rho, op, mode, n, cutoff);
    mul_mode_right_adjoint(&left, op, mode, n, cutoff)
}

fn mode_bases(mode: usize, n: usize, cutoff: usize) -> (usize, Vec<usize>) {
    let stride = cutoff.pow((n - 1 - mode) as u32);
    let dim = cutoff.pow(n as u32);
    let bases = (0..dim).filter(|r| (r / stride) % cutoff == 0).collect();
    (stride, bases)
}

fn mul_mode_left(rho: &CMatrix, op: &CMatrix, mode: usize, n: usize, cutoff: usize) -> CMatrix {
    if n == 1 {
        return op * rho;
    }
    let (stride, bases) = mode_bases(mode, n, cutoff);
    let dim = rho.ncols();
    let mut out = CMatrix::zeros(rho.nrows(), dim);
    for &base in &bases {
        for c in 0..dim {
            for a in 0..cutoff {
                let mut acc = ZERO;
                for b in 0..cutoff {
                    let o = op[(a, b)];
                    if o != ZERO {
                        acc += o * rho[(base + b * stride, c)];
                    }
                }
                out[(base + a * stride, c)] = acc;
            }
        }
    }
    out
}

fn mul_mode_right_adjoint(rho: &CMatrix, op: &CMatrix, mode: usize, n: usize, cutoff: usize) -> CMatrix {
    if n == 1 {
        return rho * op.adjoint();
    }
    let (stride, bases) = mode_bases(mode, n, cutoff);
    let dim = rho.nrows();
    let mut out = CMatrix::zeros(dim, rho.ncols());
    for &base in &bases {
        for r in 0..dim {
            for a in 0..cutoff {
                let mut acc = ZERO;
                for b in 0..cutoff {
                    let o = op[(a, b)];
                    if o != ZERO {
                        acc += rho[(r, base + b * stride)] * o.conj();
                    }
                }
                out[(r, base + a * stride)] = acc;
            }
        }
    }
    out
}

/// Passive (photon-number preserving) unitary `exp(−i a†ha)` realising the
/// orthosymplectic matrix `o`, stored as blocks of fixed total photon number.
struct PassiveUnitary {
    blocks: Vec<(Vec<usize>, CMatrix)>,
}

impl PassiveUnitary {
    fn new(o: &DMatrix<f64>, n: usize, cutoff: usize) -> Self {
        let mut u = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                u[(i, j)] = Complex64::new(o[(2 * i, 2 * j)], o[(2 * i + 1, 2 * j)]);
            }
        }
        // h = i·log u through the Schur form of the (normal) matrix u
        let schur = nalgebra::Schur::new(u);
        let (q, t) = schur.unpack();
        let mut lg = CMatrix::zeros(n, n);
        for i in 0..n {
            lg[(i, i)] = Complex64::new(0.0, t[(i, i)].arg());
        }
        let h = &q * lg * q.adjoint() * Complex64::new(0.0, 1.0);

        let patterns = all_patterns(n, cutoff - 1);
        let mut by_total: Vec<Vec<usize>> = vec![Vec::new(); n * (cutoff - 1) + 1];
        for p in &patterns {
            by_total[p.iter().sum::<usize>()].push(index(p, cutoff));
        }
        let mut blocks = Vec::new();
        for members in by_total.into_iter().filter(|m| !m.is_empty()) {
            let pos: std::collections::HashMap<usize, usize> =
                members.iter().enumerate().map(|(i, &g)| (g, i)).collect();
            let size = members.len();
            let mut hb = CMatrix::zeros(size, size);
            for (col, &g) in members.iter().enumerate() {
                let k = unindex(g, n, cutoff);
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            hb[(col, col)] += h[(i, i)] * k[i] as f64;
                        } else if k[j] > 0 && k[i] + 1 < cutoff {
                            let mut k2 = k.clone();
                            k2[j] -= 1;
                            k2[i] += 1;
                            let row = pos[&index(&k2, cutoff)];
                            hb[(row, col)] += h[(i, j)] * ((k[j] * (k[i] + 1)) as f64).sqrt();
                        }
                    }
                }
            }
            blocks.push((members, linalg::unitary_from_hermitian(&hb, 1.0)));
        }
        Self { blocks }
    }

    fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(v.len());
        for (idx, u) in &self.blocks {
            for (a, &ga) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for (b, &gb) in idx.iter().enumerate() {
                    acc += u[(a, b)] * v[gb];
                }
                out[ga] = acc;
            }
        }
        out
    }

    fn conj(&self, rho: &CMatrix) -> CMatrix {
        let dim = rho.nrows();
        let mut left = CMatrix::zeros(dim, dim);
        for (idx, u) in &self.blocks {
            for c in 0..dim {
                for (a, &ga) in idx.iter().enumerate() {
                    let mut acc = ZERO;
                    for (b, &gb) in idx.iter().enumerate() {
                        acc += u[(a, b)] * rho[(gb, c)];
                    }
                    left[(ga, c)] = acc;
                }
            }
        }
        let mut out = CMatrix::zeros(dim, dim);
        for (idx, u) in &self.blocks {
            for r in 0..dim {
                for (a, &ga) in idx.iter().enumerate() {
                    let mut acc = ZERO;
                    for (b, &gb) in idx.iter().enumerate() {
                        acc += left[(r, gb)] * u[(a, b)].conj();
                    }
                    out[(r, ga)] = acc;
                }
            }
        }
        out
    }
}

fn unindex(mut g: usize, n: usize, cutoff: usize) -> Vec<usize> {
    let mut k = vec![0; n];
    for i in (0..n).rev() {
        k[i] = g % cutoff;
        g /= cutoff;
    }
    k
}

/// `S = K·Z·Kᵀ·O′` with `K`, `O′` orthosymplectic and `Z = ⊕ diag(λᵢ, 1/λᵢ)`, `λᵢ ≤ 1`.
fn symplectic_factors(s: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let d = s.nrows();
    let n = d / 2;
    let p = linalg::sym_sqrt(&(s * s.transpose()));
    let p_inv = linalg::sym_fn(&(s * s.transpose()), |x| 1.0 / x.sqrt());
    let o_prime = p_inv * s;
    let eig = SymmetricEigen::new(linalg::symmetrize(&p));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let wt = omega(n).transpose();
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut lambdas = Vec::new();
    let mut k = DMatrix::zeros(d, d);
    for &idx in &order {
        if lambdas.len() == n {
            break;
        }
        let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        for c in &chosen {
            let proj = c.dot(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm < 0.5 {
            continue;
        }
        v /= norm;
        let b = &wt * &v;
        let j = lambdas.len();
        k.set_column(2 * j, &v);
        k.set_column(2 * j + 1, &b);
        lambdas.push((v.transpose() * &p * &v)[(0, 0)]);
        chosen.push(v);
        chosen.push(b);
    }
    (k, lambdas, o_prime)
}

/// `ρ ↦ U_S ρ U_S†` where `U_S† ξ U_S = S ξ`.
fn apply_symplectic(rho: &CMatrix, s: &DMatrix<f64>, n: usize, cutoff: usize) -> CMatrix {
    let (k, lambdas, o_prime) = symplectic_factors(s);
    let first = k.transpose() * o_prime;
    let mut out = PassiveUnitary::new(&first, n, cutoff).conj(rho);
    for (i, &l) in lambdas.iter().enumerate() {
        let r = -l.ln();
        if r.abs() > 1e-14 {
            out = conj_mode(&out, &squeeze_matrix(r, cutoff), i, n, cutoff);
        }
    }
    PassiveUnitary::new(&k, n, cutoff).conj(&out)
}

fn apply_displacement(rho: &CMatrix, d: &DVector<f64>, n: usize, cutoff: usize) -> CMatrix {
    let mut out = rho.clone();
    for i in 0..n {
        let alpha = Complex64::new(d[2 * i], d[2 * i + 1]) / std::f64::consts::SQRT_2;
        if alpha.norm() > 0.0 {
            out = conj_mode(&out, &displacement_matrix(alpha, cutoff), i, n, cutoff);
        }
    }
    out
}

fn thermal_diag(nbar: f64, cutoff: usize) -> Vec<f64> {
    (0..cutoff).map(|k| nbar.powi(k as i32) / (1.0 + nbar).powi(k as i32 + 1)).collect()
}

/// Single-mode operator applied to one mode of a ket in the `cutoff`-per-mode box.
fn mode_apply(v: &CVector, op: &CMatrix, mode: usize, n: usize, cutoff: usize) -> CVector {
    let (stride, bases) = mode_bases(mode, n, cutoff);
    let mut out = CVector::zeros(v.len());
    for &base in &bases {
        for a in 0..cutoff {
            let mut acc = ZERO;
            for b in 0..cutoff {
                acc += op[(a, b)] * v[base + b * stride];
            }
            out[base + a * stride] = acc;
        }
    }
    out
}

/// `D(d)·U_S` acting on kets of a `w`-per-mode working box.
struct GaussianUnitary {
    n: usize,
    w: usize,
    first: PassiveUnitary,
    squeezes: Vec<(usize, CMatrix)>,
    second: PassiveUnitary,
    disps: Vec<(usize, CMatrix)>,
}

impl GaussianUnitary {
    fn new(s: &DMatrix<f64>, d: &DVector<f64>, w: usize) -> Self {
        let n = s.nrows() / 2;
        let (k, lambdas, o_prime) = symplectic_factors(s);
        let first = PassiveUnitary::new(&(k.transpose() * o_prime), n, w);
        let squeezes = lambdas
            .iter()
            .enumerate()
            .filter(|(_, l)| l.ln().abs() > 1e-14)
            .map(|(i, l)| (i, squeeze_matrix(-l.ln(), w)))
            .collect();
        let second = PassiveUnitary::new(&k, n, w);
        let disps = (0..n)
            .map(|i| (i, Complex64::new(d[2 * i], d[2 * i + 1]) / std::f64::consts::SQRT_2))
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, a)| (i, displacement_matrix(a, w)))
            .collect();
        Self { n, w, first, squeezes, second, disps }
    }

    fn apply(&self, v: &CVector) -> CVector {
        let mut out = self.first.apply(v);
        for (i, op) in &self.squeezes {
            out = mode_apply(&out, op, *i, self.n, self.w);
        }
        out = self.second.apply(&out);
        for (i, op) in &self.disps {
            out = mode_apply(&out, op, *i, self.n, self.w);
        }
        out
    }
}

/// `ρ = Ψ Ψ†` with the columns of `Ψ` the weighted kets of a Gaussian state.
#[derive(Clone, Debug)]
pub struct GaussianFactor {
    pub n: usize,
    pub cutoff: usize,
    pub psi: CMatrix,
}

impl GaussianFactor {
    /// `tr(ρ σ) = ‖Ψ_σ† Ψ_ρ‖²`.
    pub fn overlap(&self, other: &GaussianFactor) -> Result<f64> {
        if self.n != other.n || self.cutoff != other.cutoff {
            return Err(CvError::Shape("factors differ in mode count or cutoff".into()));
        }
        Ok((other.psi.adjoint() * &self.psi).norm_squared())
    }
}

pub fn gaussian_factor(state: &GaussianState, cutoff: usize) -> Result<GaussianFactor> {
    let n = state.n();
    let (s, nus) = williamson(&state.cov)?;
    let w = cutoff + 20;
    let u = GaussianUnitary::new(&s, &state.mean, w);
    let diags: Vec<Vec<f64>> = nus.iter().map(|&nu| thermal_diag((nu - 0.5).max(0.0), w)).collect();
    let dim = cutoff.pow(n as u32);
    let inner = all_patterns(n, cutoff - 1);
    // keep the heaviest thermal kets; the dropped mass is at most 1e-12
    let mut weighted: Vec<(f64, Vec<usize>)> = all_patterns(n, w - 1)
        .into_iter()
        .map(|p| (p.iter().enumerate().map(|(i, &k)| diags[i][k]).product(), p))
        .collect();
    weighted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut dropped: f64 = weighted.iter().map(|x| x.0).sum::<f64>();
    let mut cols = Vec::new();
    for (weight, p) in weighted {
        if dropped <= 1e-12 {
            break;
        }
        dropped -= weight;
        let mut e = CVector::zeros(w.pow(n as u32));
        e[index(&p, w)] = ONE;
        let psi = u.apply(&e);
        let scale = Complex64::new(weight.sqrt(), 0.0);
        cols.push(CVector::from_iterator(dim, inner.iter().map(|k| psi[index(k, w)] * scale)));
    }
    let psi = CMatrix::from_columns(&cols);
    let lost = 1.0 - psi.norm_squared();
    if lost > TRUNCATION_TOL {
        return Err(CvError::Cutoff { cutoff, lost, suggested: auto_cutoff(state).max(cutoff + 10) });
    }
    Ok(GaussianFactor { n, cutoff, psi })
}

/// Density matrix of a Gaussian state: each significant thermal basis ket is
/// pushed through the Gaussian unitary in a padded box, then truncated.
pub fn fock_from_gaussian(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    let f = gaussian_factor(state, cutoff)?;
    Ok(FockOperator { n: f.n, cutoff, mat: &f.psi * f.psi.adjoint() })
}

/// [`fock_from_gaussian`] starting at `max(auto_cutoff, min_cutoff)` and
/// growing the cutoff until the truncation deficit is below tolerance (or
/// `max_cutoff` is hit).
pub fn fock_from_gaussian_auto(state: &GaussianState, min_cutoff: usize, max_cutoff: usize) -> Result<FockOperator> {
    let mut cutoff = auto_cutoff(state).max(min_cutoff).min(max_cutoff);
    loop {
        match fock_from_gaussian(state, cutoff) {
            Err(CvError::Cutoff { suggested, .. }) if cutoff < max_cutoff => cutoff = suggested.min(max_cutoff),
            other => return other,
        }
    }
}

/// Factors of several Gaussian states at one shared cutoff, grown until
/// every one of them is within the truncation tolerance.
pub fn gaussian_factors_auto(states: &[&GaussianState], min_cutoff: usize, max_cutoff: usize) -> Result<Vec<GaussianFactor>> {
    let mut cutoff = states.iter().map(|s| auto_cutoff(s)).max().unwrap_or(1).max(min_cutoff).min(max_cutoff);
    'grow: loop {
        let mut out = Vec::with_capacity(states.len());
        for s in states {
            match gaussian_factor(s, cutoff) {
                Ok(r) => out.push(r),
                Err(CvError::Cutoff { suggested, .. }) if cutoff < max_cutoff => {
                    cutoff = suggested.min(max_cutoff);
                    continue 'grow;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(out);
    }
}

/// [`gaussian_factors_auto`] expanded to density matrices.
pub fn fock_from_gaussians_auto(states: &[&GaussianState], min_cutoff: usize, max_cutoff: usize) -> Result<Vec<FockOperator>> {
    Ok(gaussian_factors_auto(states, min_cutoff, max_cutoff)?
        .into_iter()
        .map(|f| FockOperator { n: f.n, cutoff: f.cutoff, mat: &f.psi * f.psi.adjoint() })
        .collect())
}

/// Effect operator of a general-dyne outcome (a Gaussian state operator).
pub fn fock_from_dyne(eff: &GeneralDyneEffect, cutoff: usize) -> Result<FockOperator> {
    fock_from_gaussian(&eff.as_state(), cutoff)
}

fn kets_to_rho(kets: &KetSuperposition, cutoff: usize) -> Result<FockOperator> {
    let w = working_dim(cutoff);
    let squeezed: CVector = squeeze_matrix(kets.squeeze, w).column(0).into_owned();
    let (zx, zp) = ((-kets.squeeze).exp(), kets.squeeze.exp());
    let mut psi = CVector::zeros(w);
    for (a, wt) in kets.amplitudes.iter().zip(&kets.weights) {
        let beta = Complex64::new(zx * a.re, zp * a.im);
        psi += displacement_matrix(beta, w) * &squeezed * *wt;
    }
    let norm = psi.norm_squared();
    if !(norm > 0.0) {
        return Err(CvError::InvalidState("zero vector".into()));
    }
    let head = psi.rows(0, cutoff).into_owned();
    let mat = &head * head.adjoint() / Complex64::new(norm, 0.0);
    let out = FockOperator { n: 1, cutoff, mat };
    let lost = 1.0 - out.trace().re;
    if lost > TRUNCATION_TOL {
        return Err(CvError::Cutoff { cutoff, lost, suggested: cutoff + 10 });
    }
    Ok(out)
}

/// Density matrix of a GG state. States built from ket superpositions are
/// rebuilt from the kets; otherwise every component must be a real Gaussian.
pub fn fock_from_gg(state: &GGState, cutoff: usize) -> Result<FockOperator> {
    if let Some(k) = &state.kets {
        return kets_to_rho(k, cutoff);
    }
    let mut total = FockOperator::zeros(state.n, cutoff);
    for c in &state.components {
        if c.mean.iter().any(|z| z.im != 0.0) || c.cov.iter().any(|z| z.im != 0.0) {
            return Err(CvError::Unsupported("complex components without ket provenance".into()));
        }
        let g = GaussianState::new(c.mean.map(|z| z.re), c.cov.map(|z| z.re))?;
        total.mat += fock_from_gaussian(&g, cutoff)?.mat * c.coeff();
    }
    let herm = total.hermiticity_error();
    if herm > 1e-8 {
        return Err(CvError::InvalidState(format!("Hermiticity deviation {herm:.3e}")));
    }
    total.mat = (&total.mat + total.mat.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(total)
}

pub fn fock_from_gg_effect(eff: &GGEffect, cutoff: usize) -> Result<FockOperator> {
    fock_from_gg(&eff.as_state(), cutoff)
}

/// Diagonal effect `Σ q_k |k⟩⟨k|`.
pub fn fock_from_photocount(eff: &PhotoCountEffect, n: usize, cutoff: usize) -> FockOperator {
    let mut out = FockOperator::zeros(n, cutoff);
    for (k, &q) in &eff.weights {
        if k.iter().all(|&x| x < cutoff) {
            let g = index(k, cutoff);
            out.mat[(g, g)] = Complex64::new(q, 0.0);
        }
    }
    out
}

/// `Re tr(M ρ)`.
pub fn fock_probability(rho: &FockOperator, eff: &FockOperator) -> Result<f64> {
    if rho.n != eff.n || rho.cutoff != eff.cutoff {
        return Err(CvError::Shape(format!(
            "operators differ: n {} vs {}, cutoff {} vs {}",
            rho.n, eff.n, rho.cutoff, eff.cutoff
        )));
    }
    let mut acc = ZERO;
    let dim = rho.mat.nrows();
    for i in 0..dim {
        for j in 0..dim {
            acc += eff.mat[(i, j)] * rho.mat[(j, i)];
        }
    }
    Ok(acc.re)
}

/// Wigner function `π⁻ⁿ tr(ρ D(α) Π D(α)†)` at a phase-space point.
pub fn fock_wigner(rho: &FockOperator, point: &DVector<f64>) -> f64 {
    let n = rho.n;
    let shifted = apply_displacement(&rho.mat, &(-point), n, rho.cutoff);
    let mut acc = 0.0;
    for p in all_patterns(n, rho.cutoff - 1) {
        let g = index(&p, rho.cutoff);
        let sign = if p.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * shifted[(g, g)].re;
    }
    acc / std::f64::consts::PI.powi(n as i32)
}

fn loss_kraus(eta: f64, cutoff: usize) -> Vec<CMatrix> {
    (0..cutoff)
        .map(|l| {
            let mut k = CMatrix::zeros(cutoff, cutoff);
            for m in l..cutoff {
                let v = binom(m, l) * eta.powi((m - l) as i32) * (1.0 - eta).powi(l as i32);
                k[(m - l, m)] = Complex64::new(v.sqrt(), 0.0);
            }
            k
        })
        .collect()
}

fn amp_kraus(gain: f64, cutoff: usize) -> Vec<CMatrix> {
    let x = (gain - 1.0) / gain;
    (0..cutoff)
        .map(|l| {
            let mut k = CMatrix::zeros(cutoff, cutoff);
            for m in 0..cutoff.saturating_sub(l) {
                let v = binom(m + l, l) * gain.powi(-(m as i32) - 1) * x.powi(l as i32);
                k[(m + l, m)] = Complex64::new(v.sqrt(), 0.0);
            }
            k
        })
        .collect()
}

fn binom(m: usize, l: usize) -> f64 {
    (0..l).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

fn apply_kraus(rho: &CMatrix, ops: &[CMatrix], mode: usize, n: usize, cutoff: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for k in ops {
        if k.camax() > 0.0 {
            out += conj_mode(rho, k, mode, n, cutoff);
        }
    }
    out
}

fn is_symplectic(x: &DMatrix<f64>, tol: f64) -> bool {
    let w = omega(x.nrows() / 2);
    (x * &w * x.transpose() - w).amax() <= tol
}

fn resolve_dilation(ch: &GaussianChannel) -> Result<ChannelDilation> {
    let n = ch.n();
    let dil = match &ch.dilation {
        Some(d) => d.clone(),
        None if ch.y_mat.amax() <= 1e-12 && is_symplectic(&ch.x_mat, 1e-10) => ChannelDilation {
            pre: ch.x_mat.clone(),
            eta: vec![1.0; n],
            gain: vec![1.0; n],
            post: DMatrix::identity(2 * n, 2 * n),
            disp: ch.disp.clone(),
        },
        None => {
            return Err(CvError::Unsupported(
                "channel has no recorded dilation and is not a Gaussian unitary".into(),
            ))
        }
    };
    let (d, x, y) = dil.to_xy();
    let err = (d - &ch.disp).amax().max((x - &ch.x_mat).amax()).max((y - &ch.y_mat).amax());
    if err > 1e-9 {
        return Err(CvError::Unsupported(format!("recorded dilation deviates from (d, X, Y) by {err:.3e}")));
    }
    Ok(dil)
}

/// Channel action through its dilation: unitary, per-mode loss and amplifier
/// Kraus maps, unitary, displacement.
pub fn fock_apply_gaussian_channel(rho: &FockOperator, ch: &GaussianChannel, cutoff: usize) -> Result<FockOperator> {
    if rho.n != ch.n() {
        return Err(CvError::Shape("mode counts differ".into()));
    }
    let dil = resolve_dilation(ch)?;
    let n = rho.n;
    let start = rho.resized(cutoff);
    let mut m = apply_symplectic(&start.mat, &dil.pre, n, cutoff);
    for i in 0..n {
        if dil.eta[i] != 1.0 {
            m = apply_kraus(&m, &loss_kraus(dil.eta[i], cutoff), i, n, cutoff);
        }
        if dil.gain[i] != 1.0 {
            m = apply_kraus(&m, &amp_kraus(dil.gain[i], cutoff), i, n, cutoff);
        }
    }
    m = apply_symplectic(&m, &dil.post, n, cutoff);
    m = apply_displacement(&m, &dil.disp, n, cutoff);
    let out = FockOperator { n, cutoff, mat: m };
    let lost = start.trace().re - out.trace().re;
    if lost > 1e-6 {
        return Err(CvError::Cutoff { cutoff, lost, suggested: cutoff + 10 });
    }
    Ok(out)
}
