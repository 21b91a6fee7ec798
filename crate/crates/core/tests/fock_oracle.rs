use approx::assert_abs_diff_eq;
use cvlearn_core::fock::*;
use cvlearn_core::symplectic::*;
use cvlearn_core::{Complex64, CvError, DVector};

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[test]
fn vacuum_is_a_single_entry() {
    let rho = fock_from_gaussian(&GaussianState::vacuum(1), 12).unwrap();
    assert_abs_diff_eq!(rho.mat[(0, 0)].re, 1.0, epsilon = 1e-12);
    assert!(rho.mat.iter().skip(1).all(|z| z.norm() < 1e-12));
    assert_eq!(rho, {
        let mut v = FockOperator::vacuum(1, 12);
        v.mat = rho.mat.clone();
        v
    });
}

#[test]
fn coherent_and_squeezed_diagonals() {
    let rho = fock_from_gaussian(&GaussianState::coherent(&[Complex64::new(1.0, 0.0)]), 30).unwrap();
    for (k, d) in rho.diagonal().iter().take(12).enumerate() {
        assert_abs_diff_eq!(*d, (-1f64).exp() / fact(k), epsilon = 1e-10);
    }
    let rho = fock_from_gaussian(&GaussianState::squeezed_vacuum(0.5, 0.0), 40).unwrap();
    for (k, d) in rho.diagonal().iter().enumerate() {
        if k % 2 == 1 {
            assert!(d.abs() < 1e-12);
        }
    }
    assert!(rho.hermiticity_error() < 1e-12);
    assert!(rho.min_eigenvalue() > -1e-10);
}

#[test]
fn trace_rule_basics() {
    let rho = fock_from_gaussian(&GaussianState::thermal(&[0.4]), 40).unwrap();
    let id = FockOperator::identity(1, 40);
    assert_abs_diff_eq!(fock_probability(&rho, &id).unwrap(), rho.trace().re, epsilon = 1e-14);
    let a = Complex64::new(0.6, -0.9);
    let coh = GaussianState::coherent(&[a]);
    let rho = fock_from_gaussian(&coh, 30).unwrap();
    let proj = fock_from_dyne(&GeneralDyneEffect::heterodyne(coh.mean.clone()), 30).unwrap();
    assert_abs_diff_eq!(fock_probability(&rho, &proj).unwrap(), 1.0, epsilon = 1e-8);
    assert!(fock_probability(&rho, &FockOperator::identity(1, 20)).is_err());
}

#[test]
fn channel_actions() {
    let a = Complex64::new(1.2, 0.4);
    let rho = fock_from_gaussian(&GaussianState::coherent(&[a]), 30).unwrap();
    let same = fock_apply_gaussian_channel(&rho, &GaussianChannel::identity(1), 30).unwrap();
    assert!((&same.mat - &rho.mat).camax() < 1e-12);

    let eta: f64 = 0.55;
    let out = fock_apply_gaussian_channel(&rho, &GaussianChannel::pure_loss(1, eta), 30).unwrap();
    let want = fock_from_gaussian(&GaussianState::coherent(&[a * eta.sqrt()]), 30).unwrap();
    assert!((&out.mat - &want.mat).camax() < 1e-9);
    assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = 1e-6);

    let noisy = GaussianChannel::thermal_loss(1, 0.7, 0.5);
    let s = GaussianState::coherent(&[Complex64::new(0.5, 0.0)]);
    let out = fock_apply_gaussian_channel(&fock_from_gaussian(&s, 30).unwrap(), &noisy, 30).unwrap();
    let nbar: f64 = out.diagonal().iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let g = apply_gaussian_channel(&s, &noisy).unwrap();
    let moment = (g.cov.trace() - 1.0) / 2.0 + g.mean.norm_squared() / 2.0;
    assert_abs_diff_eq!(nbar, moment, epsilon = 1e-6);
}

#[test]
fn non_unitary_channel_without_dilation_is_rejected() {
    let rho = FockOperator::vacuum(1, 10);
    let (d, x, y) = (DVector::zeros(2), cvlearn_core::DMatrix::identity(2, 2) * 0.5, cvlearn_core::DMatrix::identity(2, 2) * 0.5);
    let ch = GaussianChannel::new(d, x, y).unwrap();
    assert!(matches!(fock_apply_gaussian_channel(&rho, &ch, 10), Err(CvError::Unsupported(_))));
}

#[test]
fn small_cutoff_reports_suggestion() {
    let s = GaussianState::coherent(&[Complex64::new(3.0, 0.0)]);
    match fock_from_gaussian(&s, 10) {
        Err(CvError::Cutoff { cutoff: 10, suggested, .. }) => assert!(suggested > 10),
        other => panic!("unexpected {other:?}"),
    }
    assert!(fock_from_gaussian_auto(&s, 0, 80).is_ok());
}

#[test]
fn cutoff_growth_is_stable() {
    for seed in 0..10 {
        let (s, c, e) = random_physical_instance(1, 1.0, seed);
        let out = apply_gaussian_channel(&s, &c).unwrap();
        let ops = fock_from_gaussians_auto(&[&out, &e.as_state()], 0, 80).unwrap();
        let d = ops[0].cutoff;
        let p1 = fock_probability(&ops[0], &ops[1]).unwrap();
        let p2 = fock_probability(&fock_from_gaussian(&out, d + 10).unwrap(), &fock_from_dyne(&e, d + 10).unwrap()).unwrap();
        assert!((p1 - p2).abs() < 1e-8, "seed {seed}: {p1} vs {p2}");
    }
}

#[test]
fn wigner_of_vacuum_and_number_state() {
    let vac = FockOperator::vacuum(1, 20);
    assert_abs_diff_eq!(fock_wigner(&vac, &DVector::zeros(2)), 1.0 / std::f64::consts::PI, epsilon = 1e-12);
    let mut one = FockOperator::zeros(1, 20);
    one.mat[(1, 1)] = Complex64::new(1.0, 0.0);
    assert_abs_diff_eq!(fock_wigner(&one, &DVector::zeros(2)), -1.0 / std::f64::consts::PI, epsilon = 1e-12);
}

#[test]
fn two_mode_oracle_agreement() {
    for seed in 0..8 {
        let (s, c, e) = random_physical_instance(2, 0.5, 1000 + seed);
        let out = apply_gaussian_channel(&s, &c).unwrap();
        let ops = fock_from_gaussians_auto(&[&out, &e.as_state()], 0, 40).unwrap();
        let p = gaussian_effect_probability(&s, &c, &e).unwrap();
        let o = fock_probability(&ops[0], &ops[1]).unwrap();
        assert!((p - o).abs() < 1e-6, "seed {seed}: {p} vs {o}");
    }
}
