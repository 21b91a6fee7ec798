//! Photon-counting probabilities of Gaussian (and complex-Gaussian) phase-space
//! functions via multivariate Hermite recurrences.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{self, CMatrix, CVector, ComplexFactor};
use crate::symplectic::{apply_gaussian_channel, GaussianChannel, GaussianState};

static CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of negative round-off probabilities clamped to zero so far.
pub fn clamped_count() -> u64 {
    CLAMPED.load(Ordering::Relaxed)
}

fn clamp(p: f64) -> f64 {
    if p < 0.0 {
        if p < -1e-12 {
            log::warn!("clamping negative photocount probability {p:.3e}");
        }
        CLAMPED.fetch_add(1, Ordering::Relaxed);
        0.0
    } else {
        p
    }
}

/// Per-mode photon numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HermiteIndex {
    pub k: Vec<usize>,
}

impl HermiteIndex {
    pub fn new(k: Vec<usize>) -> Self {
        Self { k }
    }

    fn doubled(&self) -> Vec<usize> {
        self.k.iter().flat_map(|&x| [x, x]).collect()
    }
}

/// Coarse-grained photodetection effect `Σ_k q_k |k⟩⟨k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhotoCountWire", into = "PhotoCountWire")]
pub struct PhotoCountEffect {
    pub cutoff: usize,
    pub weights: BTreeMap<Vec<usize>, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightEntry {
    k: Vec<usize>,
    q: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotoCountWire {
    cutoff: usize,
    weights: Vec<WeightEntry>,
}

impl TryFrom<PhotoCountWire> for PhotoCountEffect {
    type Error = CvError;
    fn try_from(w: PhotoCountWire) -> Result<Self> {
        let eff = PhotoCountEffect {
            cutoff: w.cutoff,
            weights: w.weights.into_iter().map(|e| (e.k, e.q)).collect(),
        };
        eff.validate(1e-9)?;
        Ok(eff)
    }
}

impl From<PhotoCountEffect> for PhotoCountWire {
    fn from(e: PhotoCountEffect) -> Self {
        PhotoCountWire {
            cutoff: e.cutoff,
            weights: e.weights.into_iter().map(|(k, q)| WeightEntry { k, q }).collect(),
        }
    }
}

impl PhotoCountEffect {
    /// Projector onto a single photon-number pattern.
    pub fn single(k: Vec<usize>) -> Self {
        let cutoff = k.iter().cloned().max().unwrap_or(0);
        Self { cutoff, weights: [(k, 1.0)].into_iter().collect() }
    }

    /// Even photon numbers up to `cutoff` (single mode), each with weight
    /// `1/count` so the total weight stays at 1.
    pub fn parity_even(cutoff: usize) -> Self {
        let q = 1.0 / (cutoff / 2 + 1) as f64;
        Self {
            cutoff,
            weights: (0..=cutoff).step_by(2).map(|k| (vec![k], q)).collect(),
        }
    }

    /// Weight `q` on every pattern in `{0..K}ⁿ`.
    pub fn uniform(n: usize, cutoff: usize, q: f64) -> Self {
        let weights = all_patterns(n, cutoff).into_iter().map(|k| (k, q)).collect();
        Self { cutoff, weights }
    }

    pub fn n(&self) -> Option<usize> {
        self.weights.keys().next().map(|k| k.len())
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.n();
        let mut total = 0.0;
        for (k, &q) in &self.weights {
            if Some(k.len()) != n {
                return Err(CvError::InvalidEffect("inconsistent mode count in weights".into()));
            }
            if k.iter().any(|&x| x > self.cutoff) {
                return Err(CvError::InvalidEffect(format!("pattern {k:?} exceeds cutoff {}", self.cutoff)));
            }
            if !(q >= 0.0) {
                return Err(CvError::InvalidEffect(format!("negative weight {q} at {k:?}")));
            }
            total += q;
        }
        if total > 1.0 + tol {
            return Err(CvError::InvalidEffect(format!("weights sum to {total} > 1")));
        }
        Ok(())
    }
}

/// All patterns in `{0..K}ⁿ`, first mode slowest.
pub fn all_patterns(n: usize, cutoff: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=cutoff).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Table of `∂^μ exp(bᵀz + ½zᵀAz)` at `z = 0` for all `μ ≤ bound` (componentwise).
struct HermiteTable {
    bound: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<Complex64>,
}

impl HermiteTable {
    fn new(a: &CMatrix, b: &CVector, bound: Vec<usize>) -> Self {
        let d = bound.len();
        let mut strides = vec![1; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * (bound[j + 1] + 1);
        }
        let size = if d == 0 { 1 } else { strides[0] * (bound[0] + 1) };
        let mut values = vec![Complex64::new(0.0, 0.0); size];
        values[0] = Complex64::new(1.0, 0.0);
        let mut mu = vec![0usize; d];
        for idx in 1..size {
            let mut rem = idx;
            for j in 0..d {
                mu[j] = rem / strides[j];
                rem %= strides[j];
            }
            let j = mu.iter().position(|&x| x > 0).unwrap();
            let prev = idx - strides[j];
            let mut v = b[j] * values[prev];
            mu[j] -= 1;
            for l in 0..d {
                if mu[l] > 0 {
                    v += a[(j, l)] * Complex64::new(mu[l] as f64, 0.0) * values[prev - strides[l]];
                }
            }
            values[idx] = v;
        }
        Self { bound, strides, values }
    }

    fn get(&self, mu: &[usize]) -> Complex64 {
        debug_assert!(mu.iter().zip(&self.bound).all(|(m, b)| m <= b));
        let idx: usize = mu.iter().zip(&self.strides).map(|(m, s)| m * s).sum();
        self.values[idx]
    }
}

/// Multivariate Hermite polynomial
/// `G_{0,V}(m)⁻¹ ∏ᵢ(−∂_{2i−1})^{kᵢ}(−∂_{2i})^{kᵢ} G_{0,V}(m)`.
pub fn hermite_multi(v_mat: &DMatrix<f64>, m: &DVector<f64>, k: &HermiteIndex) -> Result<f64> {
    let z = hermite_multi_complex(&linalg::to_complex(v_mat), &linalg::to_complex_vec(m), k)?;
    Ok(z.re)
}

/// [`hermite_multi`] for complex symmetric `V` and complex `m`.
pub fn hermite_multi_complex(v_mat: &CMatrix, m: &CVector, k: &HermiteIndex) -> Result<Complex64> {
    if v_mat.nrows() != 2 * k.k.len() || m.len() != v_mat.nrows() {
        return Err(CvError::Shape("Hermite index / matrix size mismatch".into()));
    }
    let f = ComplexFactor::new(v_mat)?;
    let a = -f.inverse.clone();
    let b = &f.inverse * m;
    let mu = k.doubled();
    let table = HermiteTable::new(&a, &b, mu.clone());
    Ok(table.get(&mu))
}

fn mode_transform(n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        t[(2 * i, 2 * i)] = Complex64::new(s, 0.0);
        t[(2 * i, 2 * i + 1)] = Complex64::new(s, 0.0);
        t[(2 * i + 1, 2 * i)] = Complex64::new(0.0, -s);
        t[(2 * i + 1, 2 * i + 1)] = Complex64::new(0.0, s);
    }
    t
}

/// Photon-count generating data of a (complex) Gaussian phase-space function:
/// `P(k) = F₀ · ∂^μ exp(bᵀz + ½zᵀAz)|₀ / ∏kᵢ!` with `μ = (k₁,k₁,k₂,k₂,…)`.
#[derive(Clone, Debug)]
pub struct PhotocountKernel {
    pub n: usize,
    pub a: CMatrix,
    pub b: CVector,
    pub ln_f0: Complex64,
}

impl PhotocountKernel {
    pub fn new(mean: &CVector, cov: &CMatrix) -> Result<Self> {
        let d = mean.len();
        let n = d / 2;
        let sigma = cov + CMatrix::identity(d, d) * Complex64::new(0.5, 0.0);
        let f = ComplexFactor::new(&sigma)?;
        let t = mode_transform(n);
        let a = t.transpose() * (CMatrix::identity(d, d) - &f.inverse) * &t;
        let b = t.transpose() * (&f.inverse * mean);
        let ln_f0 = -0.5 * f.quad(mean) - 0.5 * f.ln_det;
        Ok(Self { n, a, b, ln_f0 })
    }

    /// Unclamped complex value for a single pattern.
    pub fn value(&self, k: &[usize]) -> Complex64 {
        let mu: Vec<usize> = k.iter().flat_map(|&x| [x, x]).collect();
        let table = HermiteTable::new(&self.a, &self.b, mu.clone());
        self.ln_f0.exp() * table.get(&mu) / factorial_product(k)
    }

    /// Unclamped complex values for every pattern in `{0..K}ⁿ` (order of [`all_patterns`]).
    pub fn table(&self, cutoff: usize) -> Vec<Complex64> {
        let table = HermiteTable::new(&self.a, &self.b, vec![cutoff; 2 * self.n]);
        let f0 = self.ln_f0.exp();
        all_patterns(self.n, cutoff)
            .into_iter()
            .map(|k| {
                let mu: Vec<usize> = k.iter().flat_map(|&x| [x, x]).collect();
                f0 * table.get(&mu) / factorial_product(&k)
            })
            .collect()
    }

    /// The Hermite-form parameters `(Ṽ, m̃) = (−A⁻¹, −A⁻¹b)` when `A` is invertible.
    pub fn tilde_parameters(&self) -> Option<(CMatrix, CVector)> {
        let inv = self.a.clone().try_inverse()?;
        let v = -inv;
        let m = &v * &self.b;
        Some((v, m))
    }
}

fn factorial_product(k: &[usize]) -> f64 {
    k.iter().map(|&x| (1..=x).map(|i| i as f64).product::<f64>()).product()
}

fn output_kernel(state: &GaussianState, ch: &GaussianChannel) -> Result<PhotocountKernel> {
    let out = apply_gaussian_channel(state, ch)?;
    PhotocountKernel::new(&linalg::to_complex_vec(&out.mean), &linalg::to_complex(&out.cov))
}

fn check_index(n: usize, k: &HermiteIndex) -> Result<()> {
    if k.k.len() != n {
        return Err(CvError::Shape(format!("pattern has {} modes, state has {n}", k.k.len())));
    }
    Ok(())
}

/// Probability of detecting the photon pattern `k` at the channel output.
pub fn gp_outcome_probability(state: &GaussianState, ch: &GaussianChannel, k: &HermiteIndex) -> Result<f64> {
    check_index(state.n(), k)?;
    let ker = output_kernel(state, ch)?;
    Ok(clamp(ker.value(&k.k).re))
}

/// Full photon distribution over `{0..K}ⁿ` (order of [`all_patterns`]).
pub fn gp_distribution(state: &GaussianState, ch: &GaussianChannel, cutoff: usize) -> Result<Vec<f64>> {
    let ker = output_kernel(state, ch)?;
    Ok(ker.table(cutoff).into_iter().map(|z| clamp(z.re)).collect())
}

/// `Σ_k q_k P(k)`.
pub fn gp_coarse_probability(state: &GaussianState, ch: &GaussianChannel, eff: &PhotoCountEffect) -> Result<f64> {
    eff.validate(1e-9)?;
    if let Some(n) = eff.n() {
        if n != state.n() {
            return Err(CvError::Shape(format!("effect has {n} modes, state has {}", state.n())));
        }
    } else {
        return Ok(0.0);
    }
    let ker = output_kernel(state, ch)?;
    let probs = ker.table(eff.cutoff);
    let patterns = all_patterns(state.n(), eff.cutoff);
    let mut total = 0.0;
    for (k, p) in patterns.iter().zip(probs) {
        if let Some(q) = eff.weights.get(k) {
            total += q * clamp(p.re);
        }
    }
    Ok(total)
}

/// Markov/union bound on the probability that some mode holds more than `K` photons.
pub fn tail_bound(state: &GaussianState, cutoff: usize) -> f64 {
    let n = state.n();
    (0..n)
        .map(|i| {
            let v = state.cov[(2 * i, 2 * i)] + state.cov[(2 * i + 1, 2 * i + 1)];
            let m2 = state.mean[2 * i].powi(2) + state.mean[2 * i + 1].powi(2);
            ((v - 1.0) / 2.0 + m2 / 2.0).max(0.0)
        })
        .sum::<f64>()
        / (cutoff as f64 + 1.0)
}
