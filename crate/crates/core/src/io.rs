//! JSON wire formats: row-major nested arrays, complex numbers as `[re, im]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::gg::{GGBranch, GGComponent};
use crate::symplectic::{ChannelDilation, GaussianChannel, GaussianState, GeneralDyneEffect};

pub fn matrix_rows<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

pub fn matrix_from_rows<T: nalgebra::Scalar + Copy>(rows: &[Vec<T>]) -> Result<DMatrix<T>> {
    let r = rows.len();
    let c = rows.first().map(|x| x.len()).unwrap_or(0);
    if rows.iter().any(|x| x.len() != c) {
        return Err(CvError::Shape("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn check_n(n: usize, len: usize, what: &str) -> Result<()> {
    if len != 2 * n {
        return Err(CvError::Shape(format!("{what} has length {len}, expected {}", 2 * n)));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateWire {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl TryFrom<StateWire> for GaussianState {
    type Error = CvError;
    fn try_from(w: StateWire) -> Result<Self> {
        check_n(w.n, w.mean.len(), "mean")?;
        GaussianState::new(DVector::from_vec(w.mean), matrix_from_rows(&w.cov)?)
    }
}

impl From<GaussianState> for StateWire {
    fn from(s: GaussianState) -> Self {
        StateWire { n: s.n(), mean: s.mean.iter().cloned().collect(), cov: matrix_rows(&s.cov) }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectWire {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl TryFrom<EffectWire> for GeneralDyneEffect {
    type Error = CvError;
    fn try_from(w: EffectWire) -> Result<Self> {
        check_n(w.n, w.mean.len(), "mean")?;
        GeneralDyneEffect::new(DVector::from_vec(w.mean), matrix_from_rows(&w.cov)?)
    }
}

impl From<GeneralDyneEffect> for EffectWire {
    fn from(e: GeneralDyneEffect) -> Self {
        EffectWire { n: e.n(), mean: e.outcome.iter().cloned().collect(), cov: matrix_rows(&e.cov) }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationWire {
    pub pre: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
    pub gain: Vec<f64>,
    pub post: Vec<Vec<f64>>,
    pub disp: Vec<f64>,
}

impl TryFrom<DilationWire> for ChannelDilation {
    type Error = CvError;
    fn try_from(w: DilationWire) -> Result<Self> {
        let n = w.eta.len();
        if w.gain.len() != n {
            return Err(CvError::Shape("eta and gain lengths differ".into()));
        }
        check_n(n, w.disp.len(), "disp")?;
        if w.eta.iter().any(|&e| !(0.0..=1.0).contains(&e)) || w.gain.iter().any(|&g| !(g >= 1.0)) {
            return Err(CvError::InvalidChannel("dilation needs 0 ≤ eta ≤ 1 and gain ≥ 1".into()));
        }
        Ok(ChannelDilation {
            pre: matrix_from_rows(&w.pre)?,
            eta: w.eta,
            gain: w.gain,
            post: matrix_from_rows(&w.post)?,
            disp: DVector::from_vec(w.disp),
        })
    }
}

impl From<ChannelDilation> for DilationWire {
    fn from(d: ChannelDilation) -> Self {
        DilationWire {
            pre: matrix_rows(&d.pre),
            eta: d.eta,
            gain: d.gain,
            post: matrix_rows(&d.post),
            disp: d.disp.iter().cloned().collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelWire {
    pub n: usize,
    pub disp: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<ChannelDilation>,
}

impl TryFrom<ChannelWire> for GaussianChannel {
    type Error = CvError;
    fn try_from(w: ChannelWire) -> Result<Self> {
        check_n(w.n, w.disp.len(), "disp")?;
        let mut ch = GaussianChannel::new(DVector::from_vec(w.disp), matrix_from_rows(&w.x)?, matrix_from_rows(&w.y)?)?;
        ch.dilation = w.dilation;
        Ok(ch)
    }
}

impl From<GaussianChannel> for ChannelWire {
    fn from(c: GaussianChannel) -> Self {
        ChannelWire {
            n: c.n(),
            disp: c.disp.iter().cloned().collect(),
            x: matrix_rows(&c.x_mat),
            y: matrix_rows(&c.y_mat),
            dilation: c.dilation,
        }
    }
}

/// Component wire form. `coeff` is written when representable in double
/// precision, `log_coeff` otherwise; either is accepted on input.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_coeff: Option<Complex64>,
    pub mean: Vec<Complex64>,
    pub cov: Vec<Vec<Complex64>>,
}

impl TryFrom<ComponentWire> for GGComponent {
    type Error = CvError;
    fn try_from(w: ComponentWire) -> Result<Self> {
        let log_coeff = match (w.coeff, w.log_coeff) {
            (Some(c), None) => c.ln(),
            (None, Some(l)) => l,
            _ => return Err(CvError::InvalidParameter("component needs exactly one of coeff, log_coeff".into())),
        };
        let d = w.mean.len();
        let cov = matrix_from_rows(&w.cov)?;
        if cov.nrows() != d || cov.ncols() != d {
            return Err(CvError::Shape("component covariance size".into()));
        }
        Ok(GGComponent::from_log(log_coeff, DVector::from_vec(w.mean), cov))
    }
}

impl From<GGComponent> for ComponentWire {
    fn from(c: GGComponent) -> Self {
        let (coeff, log_coeff) = if c.log_coeff.re.abs() < 600.0 { (Some(c.coeff()), None) } else { (None, Some(c.log_coeff)) };
        ComponentWire { coeff, log_coeff, mean: c.mean.iter().cloned().collect(), cov: matrix_rows(&c.cov) }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchWire {
    pub coeff: Complex64,
    pub disp: Vec<Complex64>,
    pub x: Vec<Vec<Complex64>>,
    pub y: Vec<Vec<Complex64>>,
}

impl TryFrom<BranchWire> for GGBranch {
    type Error = CvError;
    fn try_from(w: BranchWire) -> Result<Self> {
        let d = w.disp.len();
        let x = matrix_from_rows(&w.x)?;
        let y = matrix_from_rows(&w.y)?;
        if x.shape() != (d, d) || y.shape() != (d, d) {
            return Err(CvError::Shape("branch matrix size".into()));
        }
        Ok(GGBranch { coeff: w.coeff, disp: DVector::from_vec(w.disp), x_mat: x, y_mat: y })
    }
}

impl From<GGBranch> for BranchWire {
    fn from(b: GGBranch) -> Self {
        BranchWire { coeff: b.coeff, disp: b.disp.iter().cloned().collect(), x: matrix_rows(&b.x_mat), y: matrix_rows(&b.y_mat) }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable value")
}

pub fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| CvError::InvalidParameter(format!("JSON: {e}")))
}
