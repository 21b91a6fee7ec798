use cvlearn_core::gg::make_cat_state;
use cvlearn_core::learner::*;
use cvlearn_core::symplectic::{random_physical_instance, GaussianChannel, GaussianState, GeneralDyneEffect};
use nalgebra::DVector;
use num_complex::Complex64;

fn vacuum_target() -> LearnObject {
    LearnObject::State(GaussianState::vacuum(1))
}

#[test]
fn vacuum_heterodyne_at_origin_always_accepts() {
    let dist = SampleDistribution::heterodyne(0.0, 3);
    let set = draw_training_set(&vacuum_target(), &dist, 200).unwrap();
    assert!(set.iter().all(|s| s.outcome == 1));
}

#[test]
fn bernoulli_frequency_matches_probability() {
    // Fixed probe at distance 1 from a coherent state: P = e^{-1/2}.
    let dist = SampleDistribution { center: vec![1.0, 0.0], spread: 0.0, seed: 11, ..Default::default() };
    let t = 100_000;
    let set = draw_training_set(&vacuum_target(), &dist, t).unwrap();
    let p = (-0.5f64).exp();
    let freq = set.iter().filter(|s| s.outcome == 1).count() as f64 / t as f64;
    let sigma = (p * (1.0 - p) / t as f64).sqrt();
    assert!((freq - p).abs() < 3.0 * sigma, "{freq} vs {p}");
}

#[test]
fn sampling_is_seed_deterministic() {
    let target = LearnObject::State(random_physical_instance(1, 1.0, 5).0);
    let dist = SampleDistribution::heterodyne(1.0, 42);
    assert_eq!(draw_training_set(&target, &dist, 50).unwrap(), draw_training_set(&target, &dist, 50).unwrap());
    assert_ne!(draw_training_set(&target, &dist, 50).unwrap(), draw_training_set(&target, &dist.with_seed(43), 50).unwrap());
}

#[test]
fn loss_values() {
    assert!((sample_loss(LossKind::Quadratic, 0.7, 1) - 0.09).abs() < 1e-12);
    assert!((sample_loss(LossKind::Linear, 0.3, 0) - 0.3).abs() < 1e-12);
    assert!((misclassification(1.0, 0.7) - 0.3).abs() < 1e-12);
    for kind in [LossKind::Quadratic, LossKind::Linear, LossKind::TotalVariation] {
        assert_eq!(sample_loss(kind, 1.0, 1), 0.0);
        assert_eq!(sample_loss(kind, 0.0, 0), 0.0);
    }
}

#[test]
fn prepared_probes_match_direct_evaluation() {
    let target = LearnObject::State(random_physical_instance(2, 1.0, 9).0);
    let probes = SampleDistribution::heterodyne(1.0, 1).draw_probes(2, 50).unwrap();
    let prepared = PreparedProbes::new(&probes);
    assert!(matches!(prepared, PreparedProbes::SharedDyne { .. }));
    let fast = prepared.probabilities(&target).unwrap();
    for (p, probe) in fast.iter().zip(&probes) {
        assert!((p - probability(&target, probe).unwrap()).abs() < 1e-12);
    }
    let mixed = SampleDistribution { kind: SampleKind::GeneralDyne, ..Default::default() }.draw_probes(2, 5).unwrap();
    assert!(matches!(PreparedProbes::new(&mixed), PreparedProbes::General(_)));
}

#[test]
fn hypothesis_equal_to_target_has_zero_gap() {
    let target = LearnObject::State(random_physical_instance(1, 1.0, 2).0);
    let gap = evaluate_generalization(&target, &target, &SampleDistribution::heterodyne(1.0, 0), 200, &[0.01], 0.0).unwrap();
    assert_eq!(gap.max, 0.0);
    assert_eq!(gap.exceed_at(0.01), Some(0.0));
    assert!(evaluate_generalization(&target, &target, &SampleDistribution::default(), 50, &[0.1], 0.0).is_err());
}

#[test]
fn realizable_vacuum_is_learned() {
    let mut cfg = LearnRunConfig { samples: 1000, n_test: 300, ..Default::default() };
    cfg.erm.es.max_evals = 2000;
    let run = learn(&vacuum_target(), &HypothesisClass::GaussianState { n: 1 }, &SampleDistribution::heterodyne(1.0, 4), &cfg)
        .unwrap();
    assert!(run.gap.mean < 0.05, "{:?}", run.gap);
}

#[test]
fn single_sample_is_fitted() {
    let set = draw_training_set(&vacuum_target(), &SampleDistribution::heterodyne(1.0, 8), 1).unwrap();
    let mut cfg = ErmConfig::default();
    cfg.es.max_evals = 500;
    let (_, report) = erm_search(&HypothesisClass::GaussianState { n: 1 }, &set, &cfg).unwrap();
    assert!(report.eta <= 0.5, "{}", report.eta);
}

#[test]
fn exceedance_shrinks_with_more_samples() {
    let target = LearnObject::State(random_physical_instance(1, 1.0, 101).0);
    let class = HypothesisClass::GaussianState { n: 1 };
    let mean_gap = |t: usize| -> f64 {
        (0..3u64)
            .map(|seed| {
                let mut cfg = LearnRunConfig { samples: t, n_test: 400, ..Default::default() };
                cfg.erm.es.max_evals = 2000;
                cfg.erm.es.seed = seed;
                learn(&target, &class, &SampleDistribution::heterodyne(1.5, seed), &cfg).unwrap().gap.mean
            })
            .sum::<f64>()
            / 3.0
    };
    let small = mean_gap(100);
    let large = mean_gap(4000);
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn agnostic_cat_has_a_positive_floor() {
    let cat = LearnObject::GgState(make_cat_state(Complex64::new(1.5, 0.0), 1).unwrap());
    let mut cfg = LearnRunConfig { samples: 1000, n_test: 300, ..Default::default() };
    cfg.erm.es.max_evals = 1500;
    let run = learn(&cat, &HypothesisClass::GaussianState { n: 1 }, &SampleDistribution::heterodyne(2.0, 1), &cfg).unwrap();
    assert!(run.report.mean_loss > 0.01);
    assert!(run.gap.mean > 0.005);
}

#[test]
fn task_learning_reaches_the_grid_optimum() {
    let task = TaskSpec::binary_coherent(0.3);
    let report = task_learning_run(&task, &HypothesisClass::GaussianChannel { n: 1 }, &TaskConfig::default()).unwrap();
    let grid = grid_oracle(&task, &task.support_probes().unwrap(), 7).unwrap();
    let learned = mean_success(&report.channel, &task.support_probes().unwrap()).unwrap();
    assert!(learned > grid.success - 0.05, "{learned} vs {}", grid.success);
}

#[test]
fn trivial_task_is_solved_by_the_identity() {
    // Large displacement makes the sign readout almost certain without help.
    let task = TaskSpec::binary_coherent(3.0);
    let probes = task.support_probes().unwrap();
    assert!(1.0 - mean_success(&GaussianChannel::identity(1), &probes).unwrap() <= 0.02);
    let report = task_learning_run(&task, &HypothesisClass::GaussianChannel { n: 1 }, &TaskConfig::default()).unwrap();
    assert!(report.heldout_loss <= 0.02);
}

#[test]
fn constant_encoding_task() {
    let task = TaskSpec {
        n: 1,
        mean: EncodingPoly::constant(&[0.0, 0.0]),
        cov: None,
        readout: TaskReadout::Heterodyne { outcome: EncodingPoly::constant(&[0.0, 0.0]) },
        xs: XDistribution::Uniform { lo: -1.0, hi: 1.0 },
    };
    task.validate().unwrap();
    let p = probability(
        &LearnObject::Channel(GaussianChannel::identity(1)),
        &task.probe(0.3).unwrap(),
    )
    .unwrap();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn effect_probe_round_trip() {
    let eff = GeneralDyneEffect::heterodyne(DVector::zeros(2));
    let probe = Probe::ForEffect { state: GaussianState::vacuum(1), channel: GaussianChannel::identity(1) };
    assert!((probability(&LearnObject::Effect(eff), &probe).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bound_golden_values() {
    assert!((pdim_f_d(1) - 27.509775004326936).abs() < 1e-9);
    assert!((pdim_f_quad(1) - 51.69925001442312).abs() < 1e-9);
    assert!((pdim_f_p(1, 5) - 71.29283016944966).abs() < 1e-9);
    assert!((pdim_gg(1) - 305.48417431768144).abs() < 1e-9);
    let p = BoundParams { n: 1, k: 5, eps: 0.1, delta: 0.01, ..Default::default() };
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(sample_complexity_bound(BoundSetting::Gaussian, &p).unwrap().t0, 118430.78270753959) < 1e-12);
    assert!(rel(sample_complexity_bound(BoundSetting::GaussianPhotocount, &p).unwrap().t0, 197103.89133963903) < 1e-12);
    let gg = BoundParams { b2: 2.0, ..p.clone() };
    assert!(rel(sample_complexity_bound(BoundSetting::Gg, &gg).unwrap().t0, 12220031.358326232) < 1e-12);
    let p2 = BoundParams { n: 2, eps: 0.05, delta: 0.001, ..Default::default() };
    assert!(rel(sample_complexity_bound(BoundSetting::Gaussian, &p2).unwrap().t0, 3010444.087222673) < 1e-12);
}

#[test]
fn bounds_are_monotone() {
    let t = |s: BoundSetting, p: &BoundParams| sample_complexity_bound(s, p).unwrap().t0;
    let base = BoundParams::default();
    for s in [BoundSetting::Gaussian, BoundSetting::GaussianPhotocount, BoundSetting::Gg, BoundSetting::PhotocountMeasurement] {
        for n in 1..6 {
            assert!(t(s, &BoundParams { n: n + 1, ..base.clone() }) > t(s, &BoundParams { n, ..base.clone() }));
        }
        for eps in [0.4, 0.2, 0.1, 0.05] {
            assert!(t(s, &BoundParams { eps: eps / 2.0, ..base.clone() }) > t(s, &BoundParams { eps, ..base.clone() }));
        }
    }
    for k in 1..10 {
        assert!(t(BoundSetting::GaussianPhotocount, &BoundParams { k: k + 1, ..base.clone() })
            > t(BoundSetting::GaussianPhotocount, &BoundParams { k, ..base.clone() }));
    }
    for b2 in [1.0, 2.0, 4.0, 8.0] {
        assert!(t(BoundSetting::Gg, &BoundParams { b2: 2.0 * b2, ..base.clone() }) > t(BoundSetting::Gg, &BoundParams { b2, ..base.clone() }));
    }
}

#[test]
fn bound_structure() {
    // Doubling K adds 2(2n²+3n) bits to the photon-count part.
    for n in 1..4 {
        let diff = pdim_f_p(n, 10) - pdim_f_p(n, 5);
        assert!((diff - 2.0 * (2 * n * n + 3 * n) as f64).abs() < 1e-9);
    }
    // Leading GG term over leading Gaussian term scales as ε⁻², up to the
    // squared log of the Gaussian term (the GG log factor is clamped to 1 here).
    let lead = |s, eps: f64, b2: f64| {
        sample_complexity_bound(s, &BoundParams { eps, b2, ..Default::default() }).unwrap().leading_term
    };
    let r1 = lead(BoundSetting::Gg, 0.1, 1.0) / lead(BoundSetting::Gaussian, 0.1, 1.0);
    let r2 = lead(BoundSetting::Gg, 0.05, 1.0) / lead(BoundSetting::Gaussian, 0.05, 1.0);
    let expected = 4.0 * (10f64.log2() / 20f64.log2()).powi(2);
    assert!((r2 / r1 - expected).abs() < 1e-9, "{}", r2 / r1);
    let rb = lead(BoundSetting::Gg, 0.1, 2.0) / lead(BoundSetting::Gg, 0.1, 1.0);
    assert!(rb >= 4.0, "{rb}");
    // Photon-count measurement learning is exponential in n.
    let d = |n| pdim_photocount_measurement(n, 3);
    assert_eq!(d(4) / d(3), 4.0);
    assert!(covering_bound_pdim(1.0, 1.0, 1.0, 0.5 / std::f64::consts::E).unwrap().abs() < 1e-12);
    assert!(covering_bound_gg(10.0, 2.0, 1.0, 0.1, 50.0).unwrap() >= 4.0 * covering_bound_gg(10.0, 1.0, 1.0, 0.1, 50.0).unwrap() * 0.99);
    assert!(sample_complexity_bound(BoundSetting::Pconcept, &BoundParams::default()).is_err());
}
