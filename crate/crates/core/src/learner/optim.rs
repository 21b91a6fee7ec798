//! Derivative-free minimiser: CMA-ES with cumulative step-size
//! adaptation and increasing-population restarts, followed by a short
//! coordinate-descent polish.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsConfig {
    /// Offspring per generation; 0 picks `4 + ⌊3 ln d⌋`.
    pub population: usize,
    pub sigma0: f64,
    pub max_evals: usize,
    /// Extra runs with doubled population after the first one stalls.
    pub restarts: usize,
    pub seed: u64,
    /// Share of the budget reserved for coordinate descent.
    pub refine_fraction: f64,
    /// Stop as soon as the objective reaches this value.
    pub target: Option<f64>,
    /// Step-size and fitness-spread tolerance.
    pub tol: f64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: 0,
            sigma0: 0.5,
            max_evals: 4000,
            restarts: 2,
            seed: 0,
            refine_fraction: 0.2,
            target: None,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// Best value after each generation or refinement sweep.
    pub trace: Vec<f64>,
    /// False when the budget ran out before any stopping tolerance was met.
    pub converged: bool,
}

struct Tracker<F> {
    f: F,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        v
    }
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], cfg: &EsConfig) -> OptimResult {
    let dim = x0.len();
    let mut t = Tracker { f, evals: 0, best_x: x0.to_vec(), best_f: f64::INFINITY, trace: Vec::new() };
    t.eval(x0);
    if dim == 0 {
        return OptimResult { x: vec![], f: t.best_f, evals: t.evals, trace: vec![t.best_f], converged: true };
    }
    let hit = |v: f64| cfg.target.is_some_and(|g| v <= g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let es_budget = ((1.0 - cfg.refine_fraction.clamp(0.0, 1.0)) * cfg.max_evals as f64) as usize;
    let base_pop = if cfg.population == 0 { 4 + (3.0 * (dim as f64).ln()).floor() as usize } else { cfg.population };

    let mut converged = false;
    let mut pop = base_pop.max(4);
    for run in 0..=cfg.restarts {
        if t.evals >= es_budget || hit(t.best_f) {
            break;
        }
        let start = if run == 0 { x0.to_vec() } else { t.best_x.clone() };
        converged = cma_run(&mut t, &start, cfg.sigma0, pop, es_budget, cfg, &mut rng);
        pop *= 2;
    }
    let refined = coordinate_descent(&mut t, cfg.max_evals, cfg.sigma0 * 0.1, cfg);
    converged = converged || refined || hit(t.best_f);
    OptimResult { x: t.best_x, f: t.best_f, evals: t.evals, trace: t.trace, converged }
}

/// One CMA run; returns true if it stopped on a tolerance rather than the budget.
fn cma_run<F: FnMut(&[f64]) -> f64>(
    t: &mut Tracker<F>,
    start: &[f64],
    sigma0: f64,
    lambda: usize,
    budget: usize,
    cfg: &EsConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = start.len();
    let nf = n as f64;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let sw: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / sw).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff)).min(1.0 - c1);
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(start);
    let mut sigma = sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scales = DVector::<f64>::from_element(n, 1.0);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);
    let mut history: Vec<f64> = Vec::new();
    let mut gen = 0usize;

    loop {
        if t.evals + lambda > budget {
            return false;
        }
        let mut offspring: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = &basis * z.component_mul(&scales);
            let x = &mean + &y * sigma;
            let v = t.eval(x.as_slice());
            offspring.push((v, y, z));
        }
        offspring.sort_by(|a, b| a.0.total_cmp(&b.0));
        t.trace.push(t.best_f);
        gen += 1;

        let mut yw = DVector::zeros(n);
        let mut zw = DVector::zeros(n);
        for (wi, (_, y, z)) in w.iter().zip(&offspring) {
            yw += y * *wi;
            zw += z * *wi;
        }
        mean += &yw * sigma;
        // C^{-1/2} y_w = B z_w
        let cs = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        p_sigma = p_sigma * (1.0 - c_sigma) + (&basis * &zw) * cs;
        let ps_norm = p_sigma.norm();
        let denom = (1.0 - (1.0 - c_sigma).powi(2 * gen as i32)).sqrt();
        let h_sigma = if ps_norm / denom < (1.4 + 2.0 / (nf + 1.0)) * chi_n { 1.0 } else { 0.0 };
        let cc = (c_c * (2.0 - c_c) * mu_eff).sqrt();
        p_c = p_c * (1.0 - c_c) + &yw * (h_sigma * cc);
        let mut rank_mu = DMatrix::zeros(n, n);
        for (wi, (_, y, _)) in w.iter().zip(&offspring) {
            rank_mu += y * y.transpose() * *wi;
        }
        cov = &cov * (1.0 - c1 - c_mu + (1.0 - h_sigma) * c1 * c_c * (2.0 - c_c))
            + &p_c * p_c.transpose() * c1
            + rank_mu * c_mu;
        cov = (&cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(cov.clone());
        basis = eig.eigenvectors;
        scales = eig.eigenvalues.map(|e| e.max(1e-20).sqrt());
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).min(1.0).exp();

        if cfg.target.is_some_and(|g| t.best_f <= g) {
            return true;
        }
        let spread = sigma * scales.max();
        if spread < cfg.tol || !sigma.is_finite() || scales.max() / scales.min() > 1e14 {
            return true;
        }
        history.push(offspring[0].0);
        let window = 10 + (30.0 * nf / lambda as f64).ceil() as usize;
        if history.len() > window {
            let recent = &history[history.len() - window..];
            let hi = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = recent.iter().cloned().fold(f64::INFINITY, f64::min);
            let flat = hi - lo <= cfg.tol * (1.0 + lo.abs());
            if flat && offspring.last().unwrap().0 - offspring[0].0 <= cfg.tol * (1.0 + lo.abs()) {
                return true;
            }
        }
    }
}

/// Compass search around the incumbent; returns true if every step shrank below `tol`.
fn coordinate_descent<F: FnMut(&[f64]) -> f64>(t: &mut Tracker<F>, budget: usize, step0: f64, cfg: &EsConfig) -> bool {
    let n = t.best_x.len();
    let mut steps = vec![step0.max(1e-3); n];
    let mut x = t.best_x.clone();
    let mut fx = t.best_f;
    loop {
        if cfg.target.is_some_and(|g| fx <= g) {
            return true;
        }
        if steps.iter().all(|&s| s < cfg.tol.max(1e-12)) {
            return true;
        }
        for k in 0..n {
            if steps[k] < cfg.tol.max(1e-12) {
                continue;
            }
            let mut improved = false;
            for dir in [1.0, -1.0] {
                if t.evals >= budget {
                    return false;
                }
                let mut y = x.clone();
                y[k] += dir * steps[k];
                let v = t.eval(&y);
                if v < fx {
                    x = y;
                    fx = v;
                    improved = true;
                    break;
                }
            }
            if improved {
                steps[k] *= 2.0;
            } else {
                steps[k] *= 0.5;
            }
        }
        t.trace.push(t.best_f);
    }
}
