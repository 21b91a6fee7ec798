//! Browser bindings: Wigner maps, photon-number distributions and sample
//! complexity curves for a handful of single-mode states.
//!
//! The plain functions are usable natively; the `js_*` wrappers are what the
//! page calls.

use cvlearn_core::fock::fock_from_gg;
use cvlearn_core::gg::{gg_wigner_eval, make_cat_state, make_fock_approx, make_gkp_state, GGState};
use cvlearn_core::learner::{sample_complexity_bound, BoundParams, BoundSetting};
use cvlearn_core::symplectic::GaussianState;
use cvlearn_core::{Complex64, DVector};
use serde::Deserialize;
use wasm_bindgen::prelude::*;

/// Largest photon cutoff the page may ask for.
pub const MAX_CUTOFF: usize = 60;
/// Largest Wigner grid side.
pub const MAX_GRID: usize = 256;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemoState {
    Vacuum,
    Coherent { re: f64, im: f64 },
    Squeezed { r: f64, #[serde(default)] phi: f64 },
    Thermal { nbar: f64 },
    Cat { alpha: f64, sign: i32 },
    Gkp { epsilon: f64, lattice: usize },
    FockApprox { photons: usize, r: f64 },
}

impl DemoState {
    pub fn parse(json: &str) -> Result<Self, String> {
        serde_json::from_str(json).map_err(|e| format!("bad state spec: {e}"))
    }

    pub fn build(&self) -> Result<GGState, String> {
        let gaussian = |s: GaussianState| Ok(GGState::from_gaussian(&s));
        let built = match *self {
            DemoState::Vacuum => return gaussian(GaussianState::vacuum(1)),
            DemoState::Coherent { re, im } => return gaussian(GaussianState::coherent(&[Complex64::new(re, im)])),
            DemoState::Squeezed { r, phi } => return gaussian(GaussianState::squeezed_vacuum(r, phi)),
            DemoState::Thermal { nbar } if nbar >= 0.0 => return gaussian(GaussianState::thermal(&[nbar])),
            DemoState::Thermal { nbar } => return Err(format!("negative mean photon number {nbar}")),
            DemoState::Cat { alpha, sign } => make_cat_state(Complex64::new(alpha, 0.0), sign),
            DemoState::Gkp { epsilon, lattice } => make_gkp_state(epsilon, lattice),
            DemoState::FockApprox { photons, r } => make_fock_approx(photons, r),
        };
        built.map_err(|e| e.to_string())
    }
}

/// Wigner values on a `size × size` grid over `[-extent, extent]²`, rows
/// running over p from top (largest) to bottom, columns over x.
pub fn wigner_grid(state: &GGState, extent: f64, size: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_GRID).contains(&size) || !(extent > 0.0) {
        return Err(format!("grid needs 2..={MAX_GRID} points and a positive extent"));
    }
    let step = 2.0 * extent / (size - 1) as f64;
    let mut out = Vec::with_capacity(size * size);
    for row in 0..size {
        let p = extent - row as f64 * step;
        for col in 0..size {
            let x = -extent + col as f64 * step;
            out.push(gg_wigner_eval(state, &DVector::from_vec(vec![x, p])).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Photon-number probabilities `P(0..=cutoff)`.
pub fn photon_distribution(state: &GGState, cutoff: usize) -> Result<Vec<f64>, String> {
    if cutoff > MAX_CUTOFF {
        return Err(format!("cutoff above {MAX_CUTOFF}"));
    }
    // Build with headroom so the truncation does not distort the shown entries.
    let rho = fock_from_gg(state, (cutoff + 20).min(MAX_CUTOFF + 20)).map_err(|e| e.to_string())?;
    Ok(rho.diagonal().into_iter().take(cutoff + 1).map(|p| p.max(0.0)).collect())
}

/// `(ε, T₀)` pairs on a log grid from `eps_max` down to `eps_min`.
pub fn bound_curve(setting: &str, params: &BoundParams, eps_min: f64, eps_max: f64, points: usize) -> Result<Vec<(f64, f64)>, String> {
    let setting: BoundSetting = serde_json::from_value(serde_json::Value::String(setting.into())).map_err(|e| e.to_string())?;
    if !(eps_min > 0.0 && eps_max > eps_min && points >= 2) {
        return Err("need 0 < eps_min < eps_max and at least two points".into());
    }
    let ratio = (eps_min / eps_max).powf(1.0 / (points - 1) as f64);
    (0..points)
        .map(|i| {
            let eps = eps_max * ratio.powi(i as i32);
            let p = BoundParams { eps, ..params.clone() };
            sample_complexity_bound(setting, &p).map(|r| (eps, r.t0)).map_err(|e| e.to_string())
        })
        .collect()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = wignerGrid)]
pub fn js_wigner_grid(spec: &str, extent: f64, size: usize) -> Result<Vec<f64>, JsError> {
    let state = DemoState::parse(spec).and_then(|s| s.build()).map_err(js)?;
    wigner_grid(&state, extent, size).map_err(js)
}

#[wasm_bindgen(js_name = photonDistribution)]
pub fn js_photon_distribution(spec: &str, cutoff: usize) -> Result<Vec<f64>, JsError> {
    let state = DemoState::parse(spec).and_then(|s| s.build()).map_err(js)?;
    photon_distribution(&state, cutoff).map_err(js)
}

/// Flattened `[ε₀, T₀, ε₁, T₁, …]`.
#[wasm_bindgen(js_name = boundCurve)]
#[allow(clippy::too_many_arguments)]
pub fn js_bound_curve(setting: &str, n: usize, k: usize, b2: f64, delta: f64, eps_min: f64, eps_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let params = BoundParams { n, k, b2, delta, ..Default::default() };
    let curve = bound_curve(setting, &params, eps_min, eps_max, points).map_err(js)?;
    Ok(curve.into_iter().flat_map(|(e, t)| [e, t]).collect())
}
