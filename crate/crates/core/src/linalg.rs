//! Small dense linear-algebra helpers shared by the engines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CvError, Result};

/// Largest condition number accepted before a matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Block-diagonal symplectic form with 2×2 blocks `[[0,1],[-1,0]]`.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(2 * i, 2 * i + 1)] = 1.0;
        w[(2 * i + 1, 2 * i)] = -1.0;
    }
    w
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eig_hermitian(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the Hermitian matrix `a + (i/2)·b` for real `a`, `b`.
pub fn min_eig_uncertainty(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
        Complex64::new(a[(r, c)], 0.5 * b[(r, c)])
    });
    min_eig_hermitian(&m)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Apply `f` to the eigenvalues of a real symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, |x| x.max(0.0).sqrt())
}

/// Condition number of a symmetric matrix (infinite if not positive definite).
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m));
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse and determinant of a symmetric positive-definite matrix.
pub fn spd_inverse_det(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let cond = spd_condition(m);
    if !(cond <= MAX_CONDITION) {
        return Err(CvError::Singular { cond });
    }
    let chol = nalgebra::Cholesky::new(symmetrize(m)).ok_or(CvError::Singular { cond })?;
    let det = chol.l_dirty().diagonal().iter().map(|x| x * x).product();
    Ok((chol.inverse(), det))
}

/// Condition number of a general complex matrix from its singular values.
pub fn complex_condition(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Factorised complex symmetric matrix: inverse and principal log-determinant.
#[derive(Clone, Debug)]
pub struct ComplexFactor {
    pub inverse: CMatrix,
    /// Principal branch of `ln det`, imaginary part in (−π, π].
    pub ln_det: Complex64,
    pub cond: f64,
}

impl ComplexFactor {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let cond = complex_condition(m);
        if !(cond <= MAX_CONDITION) {
            return Err(CvError::Singular { cond });
        }
        let lu = m.clone().lu();
        let u = lu.u();
        let mut ln_det = u.diagonal().iter().map(|z| z.ln()).sum::<Complex64>();
        // row swaps flip the sign of the determinant
        if lu.p().determinant::<f64>() < 0.0 {
            ln_det += Complex64::new(0.0, std::f64::consts::PI);
        }
        ln_det.im = wrap_pi(ln_det.im);
        let inverse = lu.try_inverse().ok_or(CvError::Singular { cond })?;
        Ok(Self { inverse, ln_det, cond })
    }

    /// Quadratic form `vᵀ M⁻¹ v` (plain transpose).
    pub fn quad(&self, v: &CVector) -> Complex64 {
        (v.transpose() * &self.inverse * v)[(0, 0)]
    }
}

/// Log of a normalised complex Gaussian `exp(−½ (r−m)ᵀV⁻¹(r−m)) / √det(2πV)`,
/// using the principal square root of the determinant.
pub fn ln_complex_gaussian(mean: &CVector, cov: &CMatrix, point: &CVector) -> Result<Complex64> {
    let two_pi = Complex64::new(2.0 * std::f64::consts::PI, 0.0);
    let f = ComplexFactor::new(&(cov * two_pi))?;
    let diff = point - mean;
    let q = (diff.transpose() * &f.inverse * &diff)[(0, 0)] * two_pi;
    Ok(-0.5 * q - 0.5 * f.ln_det)
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn unitary_from_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let hh = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hh);
    let phases = eig
        .eigenvalues
        .map(|l| Complex64::from_polar(1.0, -t * l));
    let d = CMatrix::from_diagonal(&phases);
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}
