use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use cvlearn_core::fock::{auto_cutoff, fock_from_gaussian_auto, fock_from_gg, fock_from_photocount, fock_probability};
use cvlearn_core::gg::{gg_photocount_probability, make_cat_state, GGChannel};
use cvlearn_core::photodetection::*;
use cvlearn_core::symplectic::*;
use cvlearn_core::{Complex64, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[test]
fn hermite_zero_index_is_one() {
    let v = DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.7]);
    let m = DVector::from_vec(vec![0.4, -1.1]);
    assert_eq!(hermite_multi(&v, &m, &HermiteIndex::new(vec![0])).unwrap(), 1.0);
}

#[test]
fn hermite_rejects_singular() {
    let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(hermite_multi(&v, &DVector::zeros(2), &HermiteIndex::new(vec![1])).is_err());
}

/// Polynomials in (x, p) as exponent → coefficient maps.
type Poly = BTreeMap<(u32, u32), f64>;

fn eval(p: &Poly, m: &DVector<f64>) -> f64 {
    p.iter().map(|(&(a, b), c)| c * m[0].powi(a as i32) * m[1].powi(b as i32)).sum()
}

/// `−∂_j (poly·G)/G` where `∂_j ln G = −(P m)_j`.
fn neg_derivative(poly: &Poly, pm: &DMatrix<f64>, j: usize) -> Poly {
    let mut out = Poly::new();
    for (&(a, b), &c) in poly {
        let e = if j == 0 { a } else { b };
        if e > 0 {
            let key = if j == 0 { (a - 1, b) } else { (a, b - 1) };
            *out.entry(key).or_default() -= c * e as f64;
        }
        // + poly · (P m)_j
        *out.entry((a + 1, b)).or_default() += c * pm[(j, 0)];
        *out.entry((a, b + 1)).or_default() += c * pm[(j, 1)];
    }
    out
}

#[test]
fn hermite_matches_symbolic_differentiation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let a: f64 = rng.random_range(0.5..2.0);
        let c: f64 = rng.random_range(0.5..2.0);
        let b: f64 = rng.random_range(-0.3..0.3);
        let v = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
        let pm = v.clone().try_inverse().unwrap();
        let m = DVector::from_vec(vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]);
        let mut poly = Poly::from([((0, 0), 1.0)]);
        for k in 1..=3usize {
            poly = neg_derivative(&neg_derivative(&poly, &pm, 0), &pm, 1);
            let want = eval(&poly, &m);
            let got = hermite_multi(&v, &m, &HermiteIndex::new(vec![k])).unwrap();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn vacuum_has_no_photons() {
    let p = gp_outcome_probability(&GaussianState::vacuum(1), &GaussianChannel::identity(1), &HermiteIndex::new(vec![0])).unwrap();
    assert_abs_diff_eq!(p, 1.0, epsilon = 1e-14);
}

#[test]
fn coherent_is_poisson() {
    let s = GaussianState::coherent(&[Complex64::new(1.0, 0.0)]);
    let dist = gp_distribution(&s, &GaussianChannel::identity(1), 10).unwrap();
    for (j, p) in dist.iter().enumerate() {
        assert_abs_diff_eq!(*p, (-1f64).exp() / fact(j), epsilon = 1e-8);
    }
    // phase does not matter
    let s = GaussianState::coherent(&[Complex64::from_polar(1.7, 0.9)]);
    let mu = 1.7f64 * 1.7;
    for j in 0..=10 {
        let p = gp_outcome_probability(&s, &GaussianChannel::identity(1), &HermiteIndex::new(vec![j])).unwrap();
        assert_abs_diff_eq!(p, (-mu).exp() * mu.powi(j as i32) / fact(j), epsilon = 1e-8);
    }
}

#[test]
fn thermal_is_geometric() {
    for nbar in [0.3, 1.0, 2.5] {
        let s = GaussianState::thermal(&[nbar]);
        let dist = gp_distribution(&s, &GaussianChannel::identity(1), 10).unwrap();
        for (j, p) in dist.iter().enumerate() {
            assert_abs_diff_eq!(*p, nbar.powi(j as i32) / (1.0 + nbar).powi(j as i32 + 1), epsilon = 1e-8);
        }
    }
}

#[test]
fn squeezed_vacuum_has_even_support() {
    for r in [0.3, 0.5, 1.0] {
        let s = GaussianState::squeezed_vacuum(r, 0.4);
        let dist = gp_distribution(&s, &GaussianChannel::identity(1), 10).unwrap();
        let t = r.tanh();
        for (j, p) in dist.iter().enumerate() {
            let want = if j % 2 == 1 {
                0.0
            } else {
                let h = j / 2;
                fact(j) / (4f64.powi(h as i32) * fact(h).powi(2)) * t.powi(j as i32) / r.cosh()
            };
            assert_abs_diff_eq!(*p, want, epsilon = 1e-8);
        }
    }
}

#[test]
fn two_mode_product_factorises() {
    let s1 = GaussianState::coherent(&[Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.5)]);
    let dist = gp_distribution(&s1, &GaussianChannel::identity(2), 4).unwrap();
    let (m1, m2) = (0.65f64, 0.34f64);
    for (k, p) in all_patterns(2, 4).iter().zip(dist) {
        let want = (-m1 - m2).exp() * m1.powi(k[0] as i32) * m2.powi(k[1] as i32) / (fact(k[0]) * fact(k[1]));
        assert_abs_diff_eq!(p, want, epsilon = 1e-12);
    }
}

#[test]
fn normalization_with_tail_bound() {
    for seed in 0..20 {
        let (s, c, _) = random_physical_instance(1 + seed as usize % 2, 1.0, seed);
        let out = apply_gaussian_channel(&s, &c).unwrap();
        let k = ((out.mean_photon_number() * 1e6).ceil() as usize).min(40).max(auto_cutoff(&out) * 2);
        let total: f64 = gp_distribution(&s, &c, k).unwrap().iter().sum();
        assert!(total + tail_bound(&out, k) >= 1.0 - 1e-6, "seed {seed}: {total}");
        assert!(total <= 1.0 + 1e-9);
    }
}

#[test]
fn matches_fock_oracle_single_mode() {
    for seed in 0..100 {
        let (s, c, _) = random_physical_instance(1, 1.0, seed);
        let out = apply_gaussian_channel(&s, &c).unwrap();
        let rho = fock_from_gaussian_auto(&out, 25, 80).unwrap();
        let diag = rho.diagonal();
        let dist = gp_distribution(&s, &c, 10).unwrap();
        for (j, p) in dist.iter().enumerate() {
            assert!((p - diag[j]).abs() < 1e-6, "seed {seed} k={j}: {p} vs {}", diag[j]);
        }
    }
}

#[test]
fn matches_fock_oracle_two_modes() {
    for seed in 0..10 {
        let (s, c, _) = random_physical_instance(2, 0.5, seed);
        let out = apply_gaussian_channel(&s, &c).unwrap();
        let rho = fock_from_gaussian_auto(&out, 10, 40).unwrap();
        let cutoff = rho.cutoff;
        let diag = rho.diagonal();
        let dist = gp_distribution(&s, &c, 6).unwrap();
        for (k, p) in all_patterns(2, 6).iter().zip(dist) {
            let o = diag[k[0] * cutoff + k[1]];
            assert!((p - o).abs() < 1e-6, "seed {seed} k={k:?}: {p} vs {o}");
        }
    }
}

#[test]
fn coarse_grained_effects() {
    let s = GaussianState::coherent(&[Complex64::new(0.6, -0.2)]);
    let id = GaussianChannel::identity(1);
    let single = gp_coarse_probability(&s, &id, &PhotoCountEffect::single(vec![2])).unwrap();
    let direct = gp_outcome_probability(&s, &id, &HermiteIndex::new(vec![2])).unwrap();
    assert_abs_diff_eq!(single, direct, epsilon = 1e-15);

    let uniform = PhotoCountEffect::uniform(1, 7, 1.0 / 8.0);
    assert_abs_diff_eq!(gp_coarse_probability(&GaussianState::vacuum(1), &id, &uniform).unwrap(), 1.0 / 8.0, epsilon = 1e-12);

    let mut all = PhotoCountEffect::uniform(2, 7, 1.0);
    all.weights.values_mut().for_each(|q| *q = 1.0);
    assert!(all.validate(1e-9).is_err());
    let mut ok = PhotoCountEffect::uniform(2, 3, 1.0 / 16.0);
    assert!(ok.validate(1e-9).is_ok());
    ok.weights.insert(vec![0, 0], -0.1);
    assert!(ok.validate(1e-9).is_err());
}

#[test]
fn parity_on_odd_cat_via_gg_and_oracle() {
    let cat = make_cat_state(Complex64::new(1.2, 0.0), -1).unwrap();
    let even = PhotoCountEffect::parity_even(20);
    let p = gg_photocount_probability(&cat, &GGChannel::identity(1), &even).unwrap();
    assert!(p.abs() < 1e-9, "{p}");
    let rho = fock_from_gg(&cat, 40).unwrap();
    let oracle = fock_probability(&rho, &fock_from_photocount(&even, 1, 40)).unwrap();
    assert!((p - oracle).abs() < 1e-8);
    let plus = make_cat_state(Complex64::new(1.2, 0.0), 1).unwrap();
    let p = gg_photocount_probability(&plus, &GGChannel::identity(1), &even).unwrap();
    // ten even weights of 1/11 up to 20 photons
    let q = 1.0 / 11.0;
    let rho = fock_from_gg(&plus, 40).unwrap();
    let direct: f64 = rho.diagonal().iter().take(21).step_by(2).map(|d| q * d).sum();
    assert!((p - direct).abs() < 1e-8, "{p} vs {direct}");
    assert!((p - q).abs() < 1e-8);
}

#[test]
fn photocount_effect_json_round_trip() {
    let e = PhotoCountEffect::parity_even(3);
    let s = serde_json::to_string(&e).unwrap();
    assert!(s.contains("\"cutoff\":3"));
    assert!(s.contains("\"weights\""));
    let back: PhotoCountEffect = serde_json::from_str(&s).unwrap();
    assert_eq!(back, e);
    let bad = r#"{"cutoff":1,"weights":[{"k":[0],"q":-1.0}]}"#;
    assert!(serde_json::from_str::<PhotoCountEffect>(bad).is_err());
}

#[test]
fn negative_roundoff_is_counted_not_returned() {
    let before = clamped_count();
    let s = GaussianState::squeezed_vacuum(1.2, 0.0);
    let dist = gp_distribution(&s, &GaussianChannel::identity(1), 30).unwrap();
    assert!(dist.iter().all(|&p| p >= 0.0));
    assert!(clamped_count() >= before);
}
