use cvlearn_core::dims::*;

#[test]
fn constant_class_shatters_one_point_only() {
    for gamma in [0.1, 0.3, 0.45] {
        let cfg = ShatterConfig { gamma, k_max: 3, budget: 200_000, ..Default::default() };
        let r = fat_shattering_lower_bound(&ConstantClass, &cfg).unwrap();
        assert_eq!(r.k_certified, 1, "gamma {gamma}");
        assert!(r.exhaustive);
        assert!(verify_certificate(&ConstantClass, r.certificate.as_ref().unwrap()));
    }
    let r = fat_shattering_lower_bound(&ConstantClass, &ShatterConfig { gamma: 0.55, k_max: 2, ..Default::default() }).unwrap();
    assert_eq!(r.k_certified, 0);
}

#[test]
fn displacement_class_shatters_two_chosen_probes() {
    let class = GaussianStateClass { n: 1, displacement_only: true };
    let cert = shatter_inputs(&class, &[vec![0.0, 0.0], vec![1.5, 0.0]], 0.1, 2000, 0).unwrap().expect("certificate");
    assert_eq!(cert.k(), 2);
    assert!(verify_certificate(&class, &cert));
    // Tampering with a witness breaks verification.
    let mut bad = cert.clone();
    bad.witnesses[3] = vec![50.0, 50.0];
    assert!(!verify_certificate(&class, &bad));
}

#[test]
fn fat_shattering_is_monotone_in_gamma_and_below_formula() {
    let class = GaussianStateClass { n: 1, displacement_only: true };
    let bound = pdim_upper_bound(ClassTag::FG, 1, 0, 0).unwrap();
    let mut last = usize::MAX;
    for gamma in [0.05, 0.15, 0.3] {
        let cfg = ShatterConfig { gamma, k_max: 4, budget: 300_000, seed: 1, ..Default::default() };
        let r = fat_shattering_lower_bound(&class, &cfg).unwrap();
        assert!(r.k_certified <= last);
        assert!((r.k_certified as f64) <= bound);
        last = r.k_certified;
    }
}

#[test]
fn formula_bounds() {
    assert!(pdim_upper_bound(ClassTag::Synthetic, 1, 0, 0).is_err());
    assert!(pdim_upper_bound(ClassTag::FGp, 1, 0, 0).is_err());
    let g = pdim_upper_bound(ClassTag::FG, 1, 0, 0).unwrap();
    assert_eq!(pdim_upper_bound(ClassTag::FG, 1, 0, 3).unwrap(), 3.0 * g);
    assert!(pdim_upper_bound(ClassTag::FGp, 1, 5, 0).unwrap() > g);
    assert!("f_gg".parse::<ClassTag>().is_ok() && "f_x".parse::<ClassTag>().is_err());
}

#[test]
fn singleton_cover_has_size_one() {
    for eps in [0.001, 0.1, 1.0] {
        let c = covering_number_estimate(&SingletonClass, eps, 5, 100, CoverMetric::Euclidean, 0).unwrap();
        assert_eq!(c.size, 1);
        assert!(c.verified);
    }
}

#[test]
fn cover_size_is_non_increasing_in_eps() {
    let class = GaussianStateClass { n: 1, displacement_only: false };
    let mut last = usize::MAX;
    for eps in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let c = covering_number_estimate(&class, eps, 6, 800, CoverMetric::Scaled1Norm, 3).unwrap();
        assert!(c.verified);
        assert!(c.size <= last, "eps {eps}: {} > {last}", c.size);
        last = c.size;
    }
}

#[test]
fn gg_cover_stays_below_the_formula() {
    let class = GgMovedClass::cat(1.0).unwrap();
    let cmp = gg_cover_vs_bound(&class, 0.1, 8, 500, 2).unwrap();
    assert!(cmp.estimate.verified);
    assert!(cmp.within_bound);
    assert!(cmp.b2 > 0.0 && cmp.b3 > 0.0);
}

#[test]
fn product_rule_holds_on_synthetic_classes() {
    for (s1, s2) in [(1.0, 1.0), (1.0, 3.0), (0.5, 2.0)] {
        let chk = product_cover_check(&ScaledWaveClass { scale: s1 }, &ScaledWaveClass { scale: s2 }, 0.1, 0.2, 5, 400, 7).unwrap();
        assert!(chk.holds, "{chk:?}");
        assert_eq!(chk.product_size, chk.size_1 * chk.size_2);
    }
}
