use approx::assert_abs_diff_eq;
use cvlearn_core::fock::*;
use cvlearn_core::gg::*;
use cvlearn_core::symplectic::*;
use cvlearn_core::{Complex64, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn het(x: f64, p: f64) -> GeneralDyneEffect {
    GeneralDyneEffect::heterodyne(DVector::from_vec(vec![x, p]))
}

#[test]
fn single_component_reduces_to_gaussian() {
    for seed in 0..30 {
        let (s, ch, e) = random_physical_instance(1 + seed as usize % 2, 1.0, seed);
        let g = GGState::from_gaussian(&s);
        let p = gg_outcome_probability(&g, &GGChannel::from_gaussian(&ch), &GGEffect::from_dyne(&e)).unwrap();
        let want = gaussian_effect_probability(&s, &ch, &e).unwrap();
        assert!((p - want).abs() < 1e-12, "{p} vs {want}");
        let pt = DVector::from_fn(2 * s.n(), |i, _| 0.3 * i as f64 - 0.2);
        let w = gg_wigner_eval(&g, &pt).unwrap();
        assert!((w - gaussian_density(&s.mean, &s.cov, &pt).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn odd_cat_wigner_negative_at_origin() {
    let cat = make_cat_state(c(2.0), -1).unwrap();
    let origin = DVector::zeros(2);
    let w = gg_wigner_eval(&cat, &origin).unwrap();
    assert!(w < 0.0);
    let rho = fock_from_gg(&cat, 40).unwrap();
    assert_abs_diff_eq!(w, fock_wigner(&rho, &origin), epsilon = 1e-6);
    assert_abs_diff_eq!(w, -1.0 / std::f64::consts::PI, epsilon = 1e-6);
    for pt in [[0.5, -0.3], [1.2, 0.7], [-2.0, 0.1]] {
        let pt = DVector::from_vec(pt.to_vec());
        assert_abs_diff_eq!(gg_wigner_eval(&cat, &pt).unwrap(), fock_wigner(&rho, &pt), epsilon = 1e-6);
    }
}

#[test]
fn cat_wigner_integrates_to_one() {
    for (a, sign) in [(1.0, 1), (1.5, -1), (0.7, -1)] {
        let cat = make_cat_state(Complex64::new(a, 0.3), sign).unwrap();
        let h = 0.05;
        let mut total = 0.0;
        let mut x = -9.0;
        while x < 9.0 {
            let mut p = -9.0;
            while p < 9.0 {
                total += gg_wigner_eval(&cat, &DVector::from_vec(vec![x, p])).unwrap();
                p += h;
            }
            x += h;
        }
        assert_abs_diff_eq!(total * h * h, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn channel_component_counting() {
    let cat = make_cat_state(c(1.3), 1).unwrap();
    let same = gg_apply_channel(&cat, &GGChannel::identity(1)).unwrap();
    assert_eq!(same, cat);

    let loss = GaussianChannel::pure_loss(1, 0.6);
    let out = gg_apply_channel(&cat, &GGChannel::from_gaussian(&loss)).unwrap();
    assert_eq!(out.components.len(), 4);
    let x = 0.6f64.sqrt();
    for (a, b) in cat.components.iter().zip(&out.components) {
        assert!((b.mean.clone() - a.mean.clone() * c(x)).norm() < 1e-12);
        let want = &a.cov * c(0.6) + DMatrix::identity(2, 2).map(c) * c(0.2);
        assert!((&b.cov - want).norm() < 1e-12);
    }
    assert!(validate_gg_state(&out, PSD_TOL).unwrap().ok);

    let mix = GGChannel::mixture(&[(0.3, loss), (0.7, GaussianChannel::additive_noise(1, 0.2))]);
    let out = gg_apply_channel(&cat, &mix).unwrap();
    assert_eq!(out.components.len(), 8);
    assert!((out.coeff_sum() - 1.0).norm() < 1e-12);
    assert!(validate_gg_state(&out, PSD_TOL).unwrap().ok);

    let many = GGChannel::mixture(&vec![(0.01, GaussianChannel::identity(1)); 100]);
    let err = gg_apply_channel_with_limit(&make_gkp_state(0.2, 4).unwrap(), &many, 4096).unwrap_err();
    assert!(matches!(err, cvlearn_core::CvError::ComponentOverflow { count: 8100, limit: 4096 }));
}

#[test]
fn plus_cat_against_heterodyne_matches_oracle() {
    let cat = make_cat_state(c(1.0), 1).unwrap();
    let e = het(0.0, 0.0);
    let p = gg_outcome_probability(&cat, &GGChannel::identity(1), &GGEffect::from_dyne(&e)).unwrap();
    let rho = fock_from_gg(&cat, 30).unwrap();
    let oracle = fock_probability(&rho, &fock_from_dyne(&e, 30).unwrap()).unwrap();
    assert_abs_diff_eq!(p, oracle, epsilon = 1e-6);
    // |⟨0|cat⟩|² = 2e^{-1}/(1+e^{-2})
    let want = 2.0 * (-1f64).exp() / (1.0 + (-2f64).exp());
    assert_abs_diff_eq!(p, want, epsilon = 1e-12);
}

#[test]
fn vacuum_effect_on_odd_cat_is_zero() {
    let vac = make_fock_approx(0, 0.1).unwrap().as_effect();
    assert_eq!(vac.components.len(), 1);
    let cat = make_cat_state(Complex64::new(0.8, -0.4), -1).unwrap();
    let p = gg_outcome_probability(&cat, &GGChannel::identity(1), &vac).unwrap();
    assert!(p.abs() < 1e-12, "{p}");
}

fn dilated_channel(seed: u64) -> GaussianChannel {
    random_physical_instance(1, 0.8, seed).1
}

fn oracle_probability(state: &GGState, ch: &GaussianChannel, e: &GeneralDyneEffect, cutoff: usize) -> f64 {
    let rho = fock_from_gg(state, cutoff).unwrap();
    let out = fock_apply_gaussian_channel(&rho, ch, cutoff).unwrap();
    fock_probability(&out, &fock_from_dyne(e, cutoff).unwrap()).unwrap()
}

#[test]
fn cat_probabilities_match_oracle_through_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..12 {
        let alpha = Complex64::from_polar(rng.random_range(0.4..1.5), rng.random_range(0.0..6.28));
        let sign = if seed % 2 == 0 { 1 } else { -1 };
        let cat = make_cat_state(alpha, sign).unwrap();
        let ch = dilated_channel(seed);
        let e = het(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let p = gg_outcome_probability(&cat, &GGChannel::from_gaussian(&ch), &GGEffect::from_dyne(&e)).unwrap();
        let o = oracle_probability(&cat, &ch, &e, 40);
        assert!((p - o).abs() < 1e-6, "seed {seed}: {p} vs {o}");
    }
}

#[test]
fn gkp_and_fock_approx_match_oracle() {
    let states = [make_gkp_state(0.4, 1).unwrap(), make_fock_approx(2, 0.3).unwrap(), make_fock_approx(1, 0.5).unwrap()];
    for (i, s) in states.iter().enumerate() {
        for (x, p) in [(0.0, 0.0), (0.8, -0.4), (-1.5, 1.0)] {
            let e = het(x, p);
            let g = gg_outcome_probability(s, &GGChannel::identity(1), &GGEffect::from_dyne(&e)).unwrap();
            let rho = fock_from_gg(s, 40).unwrap();
            let o = fock_probability(&rho, &fock_from_dyne(&e, 40).unwrap()).unwrap();
            assert!((g - o).abs() < 1e-6, "state {i} at ({x},{p}): {g} vs {o}");
        }
    }
}

#[test]
fn gg_effect_against_gaussian_state_matches_oracle() {
    let eff = make_cat_state(c(1.1), -1).unwrap().as_effect();
    for seed in 0..5 {
        let (s, ch, _) = random_physical_instance(1, 0.8, seed);
        let p = gg_outcome_probability(&GGState::from_gaussian(&s), &GGChannel::from_gaussian(&ch), &eff).unwrap();
        let out = apply_gaussian_channel(&s, &ch).unwrap();
        let rho = fock_from_gaussian_auto(&out, 30, 60).unwrap();
        let m = fock_from_gg_effect(&eff, rho.cutoff).unwrap();
        let o = fock_probability(&rho, &m).unwrap();
        assert!((p - o).abs() < 1e-6, "seed {seed}: {p} vs {o}");
    }
}

#[test]
fn cat_constructor_properties() {
    for a in [0.3, 1.0, 2.5] {
        let s = make_cat_state(Complex64::from_polar(a, 0.4), 1).unwrap();
        assert_eq!(s.components.len(), 4);
        assert_abs_diff_eq!(s.abs_coeff_sum(), 1.0, epsilon = 1e-12);
        assert!((s.coeff_sum() - 1.0).norm() < 1e-12);
        let s = make_cat_state(c(a), -1).unwrap();
        let e = (-2.0 * a * a).exp();
        assert_abs_diff_eq!(s.abs_coeff_sum(), (1.0 + e) / (1.0 - e), epsilon = 1e-10);
        assert!(validate_gg_state(&s, PSD_TOL).unwrap().ok);
    }
    assert_abs_diff_eq!(make_cat_state(c(1.0), -1).unwrap().abs_coeff_sum(), 1.313_035, epsilon = 1e-6);
    assert!(make_cat_state(c(0.0), -1).is_err());
    assert!(make_cat_state(c(1.0), 2).is_err());
}

#[test]
fn cat_matches_explicit_density_matrix() {
    let alpha = Complex64::new(1.0, 0.0);
    let cat = make_cat_state(alpha, 1).unwrap();
    let rho = fock_from_gg(&cat, 30).unwrap();
    let ket = coherent_ket(alpha, 30) + coherent_ket(-alpha, 30);
    let ket = &ket / Complex64::new(ket.norm(), 0.0);
    let fid = (ket.adjoint() * &rho.mat * &ket)[(0, 0)].re;
    assert_abs_diff_eq!(fid, 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(rho.trace().re, cat.coeff_sum().re, epsilon = 1e-6);
}

#[test]
fn gkp_constructor_properties() {
    for l in 1..=3 {
        let s = make_gkp_state(0.1, l).unwrap();
        assert_eq!(s.components.len(), (2 * l + 1).pow(2));
        assert!((s.coeff_sum() - 1.0).norm() < 1e-10);
        let bound = 2.0 * l as f64 * std::f64::consts::PI.sqrt();
        assert!(s.components.iter().all(|c| c.mean[0].re.abs() <= bound + 1e-9));
        assert!(validate_gg_state(&s, PSD_TOL).unwrap().ok);
    }
    for eps in [0.05, 0.1] {
        let s = make_gkp_state(eps, 2).unwrap();
        let min = s
            .components
            .iter()
            .map(|c| c.cov.map(|z| z.re).symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.45 * eps, "ε = {eps}: {min}");
    }
    assert!(make_gkp_state(0.0, 2).is_err());
    assert!(make_gkp_state(1.5, 2).is_err());
    assert!(make_gkp_state(0.1, 0).is_err());
}

#[test]
fn fock_approx_converges_to_number_state() {
    assert_eq!(make_fock_approx(0, 0.3).unwrap(), GGState::from_gaussian(&GaussianState::vacuum(1)));
    let fid = |r: f64| fock_from_gg(&make_fock_approx(1, r).unwrap(), 20).unwrap().mat[(1, 1)].re;
    assert!(fid(0.1) > fid(0.2));
    assert!(fid(0.1) > 0.99);
    let fid3 = |r: f64| fock_from_gg(&make_fock_approx(3, r).unwrap(), 20).unwrap().mat[(3, 3)].re;
    assert!(fid3(0.1) > fid3(0.3));
    assert!(make_fock_approx(4, 0.5).is_err());
    assert!(make_fock_approx(1, -0.1).is_err());
    let s = make_fock_approx(2, 0.3).unwrap();
    assert!(validate_gg_state(&s, PSD_TOL).unwrap().ok);
}

fn random_gg_state(rng: &mut ChaCha8Rng) -> GGState {
    match rng.random_range(0..4) {
        0 => make_cat_state(Complex64::from_polar(rng.random_range(0.3..2.0), rng.random_range(0.0..6.28)), 1).unwrap(),
        1 => make_cat_state(Complex64::from_polar(rng.random_range(0.3..2.0), rng.random_range(0.0..6.28)), -1).unwrap(),
        2 => make_fock_approx(rng.random_range(1..3), rng.random_range(0.2..0.5)).unwrap(),
        _ => make_gkp_state(rng.random_range(0.2..0.5), 1).unwrap(),
    }
}

fn random_gg_channel(rng: &mut ChaCha8Rng) -> GGChannel {
    let w: f64 = rng.random_range(0.1..0.9);
    let a = dilated_channel(rng.random());
    let b = dilated_channel(rng.random());
    if rng.random_bool(0.5) {
        GGChannel::from_gaussian(&a)
    } else {
        GGChannel::mixture(&[(w, a), (1.0 - w, b)])
    }
}

fn random_gg_effect(rng: &mut ChaCha8Rng) -> GGEffect {
    if rng.random_bool(0.5) {
        GGEffect::from_dyne(&het(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    } else {
        random_gg_state(rng).as_effect()
    }
}

#[test]
fn decomposition_recomposes_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 0..100 {
        let (s, ch, e) = (random_gg_state(&mut rng), random_gg_channel(&mut rng), random_gg_effect(&mut rng));
        let dec = gg_decompose_terms(&s, &ch, &e).unwrap();
        let direct = gg_outcome_density(&s, &ch, &e).unwrap();
        assert!((dec.recompose() - direct).abs() < 1e-9, "instance {t}: {} vs {direct}", dec.recompose());
        assert!(dec.p_sum() <= 1.0 + 1e-12);
        assert!(dec.terms.iter().all(|t| t.p >= 0.0 && (0.0..std::f64::consts::TAU).contains(&t.theta)));
    }
}

#[test]
fn real_decomposition_has_no_phases() {
    let (s, ch, e) = random_physical_instance(1, 1.0, 4);
    let dec = gg_decompose_terms(&GGState::from_gaussian(&s), &GGChannel::from_gaussian(&ch), &GGEffect::from_dyne(&e)).unwrap();
    assert_eq!(dec.terms.len(), 1);
    let t = &dec.terms[0];
    assert_eq!((t.im, t.a, t.theta), (0.0, 0.0, 0.0));
    assert_abs_diff_eq!(t.p, 1.0, epsilon = 1e-15);
}

#[test]
fn b_constants_trivial_case() {
    let b = gg_b_constants(
        &GGState::from_gaussian(&GaussianState::vacuum(1)),
        &GGChannel::identity(1),
        &GGEffect::from_dyne(&het(0.0, 0.0)),
    )
    .unwrap();
    assert_eq!(b.b1, 0.0);
    assert_abs_diff_eq!(b.b2, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b.b3, std::f64::consts::TAU, epsilon = 1e-12);
}

fn state_constants(s: &GGState) -> GGConstraintConstants {
    gg_b_constants(s, &GGChannel::identity(1), &GGEffect::from_dyne(&het(0.0, 0.0))).unwrap()
}

#[test]
fn b_constant_regression() {
    // Cat: b2 → 1 with the odd-cat closed form, b1 = 2|α|² at a centred heterodyne.
    for a in [1.0, 2.0, 3.0, 4.0] {
        let b = state_constants(&make_cat_state(c(a), -1).unwrap());
        let e = (-2.0 * a * a).exp();
        assert_abs_diff_eq!(b.b2, (1.0 + e) / (1.0 - e), epsilon = 1e-9);
        assert_abs_diff_eq!(b.b1, 2.0 * a * a, epsilon = 1e-9);
    }
    // Fock approximation: b2 ≈ K!/(r^{2K}(K+1)^{...}) grows as r shrinks.
    let mut last = 0.0;
    for r in [0.4, 0.2, 0.1, 0.05] {
        let b = state_constants(&make_fock_approx(2, r).unwrap());
        assert!(b.b2 > last);
        last = b.b2;
    }
    // GKP: all coefficients are positive (b2 = 1) and b1 grows quadratically in L.
    let gkp: Vec<_> = [1, 2, 4, 8].iter().map(|&l| state_constants(&make_gkp_state(0.1, l).unwrap())).collect();
    for w in gkp.windows(2) {
        assert_abs_diff_eq!(w[1].b1 / w[0].b1, 4.0, epsilon = 1e-3);
        assert_abs_diff_eq!(w[1].b2, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w[1].b3, w[0].b3, epsilon = 1e-9);
    }
}

#[test]
fn singular_term_is_named() {
    let s = GGState::from_gaussian(&GaussianState::vacuum(1));
    let mut eff = GGEffect::from_dyne(&het(0.0, 0.0));
    eff.components[0].cov = DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, -0.5]).map(c);
    match gg_outcome_probability(&s, &GGChannel::identity(1), &eff) {
        Err(cvlearn_core::CvError::SingularTerm { i: 0, j: 0, k: 0, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn gg_json_round_trip() {
    let s = make_gkp_state(0.1, 1).unwrap();
    let txt = serde_json::to_string(&s).unwrap();
    let back: GGState = serde_json::from_str(&txt).unwrap();
    assert_eq!(back.components.len(), s.components.len());
    for (a, b) in s.components.iter().zip(&back.components) {
        assert!((a.coeff() - b.coeff()).norm() < 1e-12);
        assert!((&a.cov - &b.cov).norm() < 1e-15);
    }
    let ch = GGChannel::mixture(&[(0.5, GaussianChannel::identity(1)), (0.5, GaussianChannel::pure_loss(1, 0.5))]);
    let back: GGChannel = serde_json::from_str(&serde_json::to_string(&ch).unwrap()).unwrap();
    assert_eq!(back, ch);
}
