use cvlearn_core::learner::BoundParams;
use cvlearn_web::*;

fn state(spec: &str) -> cvlearn_core::GGState {
    DemoState::parse(spec).unwrap().build().unwrap()
}

#[test]
fn vacuum_wigner_peak_and_mass() {
    let size = 81;
    let extent = 4.0;
    let grid = wigner_grid(&state(r#"{"kind":"vacuum"}"#), extent, size).unwrap();
    let centre = grid[(size / 2) * size + size / 2];
    assert!((centre - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    let h = 2.0 * extent / (size - 1) as f64;
    let mass: f64 = grid.iter().sum::<f64>() * h * h;
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn odd_cat_is_negative_at_origin() {
    let grid = wigner_grid(&state(r#"{"kind":"cat","alpha":1.5,"sign":-1}"#), 3.0, 31).unwrap();
    assert!(grid[15 * 31 + 15] < 0.0);
}

#[test]
fn photon_distributions() {
    let p = photon_distribution(&state(r#"{"kind":"coherent","re":1.0,"im":0.0}"#), 8).unwrap();
    assert_eq!(p.len(), 9);
    assert!((p[2] - (-1f64).exp() / 2.0).abs() < 1e-9);
    let odd = photon_distribution(&state(r#"{"kind":"cat","alpha":1.2,"sign":-1}"#), 10).unwrap();
    assert!(odd.iter().step_by(2).all(|&q| q < 1e-9));
    assert!(photon_distribution(&state(r#"{"kind":"vacuum"}"#), 500).is_err());
}

#[test]
fn bound_curve_decreases_in_eps() {
    let curve = bound_curve("gaussian", &BoundParams::default(), 0.01, 0.2, 6).unwrap();
    assert_eq!(curve.len(), 6);
    assert!((curve[0].0 - 0.2).abs() < 1e-12 && (curve[5].0 - 0.01).abs() < 1e-12);
    assert!(curve.windows(2).all(|w| w[1].1 > w[0].1));
    assert!(bound_curve("nothing", &BoundParams::default(), 0.01, 0.2, 6).is_err());
}

#[test]
fn bad_specs_are_rejected() {
    assert!(DemoState::parse(r#"{"kind":"cat","alpha":1.0}"#).is_err());
    assert!(DemoState::parse(r#"{"kind":"thermal","nbar":-1.0}"#).unwrap().build().is_err());
    assert!(DemoState::parse(r#"{"kind":"gkp","epsilon":0.0,"lattice":1}"#).unwrap().build().is_err());
}
