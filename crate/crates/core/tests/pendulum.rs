use invlabel::model::{read_model, write_model};
use invlabel::*;

fn setup() -> (SampleSet, KernelSpec, BoundarySpec) {
    let d = Domain::annulus(-2.1, 2.1).unwrap();
    let s = build_samples(&MapSpec::pendulum(), &d, 100, 1).unwrap();
    let k = KernelSpec::new(KernelFamily::PeriodicProduct, 0.5).unwrap();
    (s, k, BoundarySpec::smoothed_strips(-2.1, 2.1, 0.02, 0.1))
}

#[test]
fn bvp_residual_close_to_reported_scale() {
    let (s, k, b) = setup();
    let (model, r) = solve_bvp(&s, &k, &b, 1e-8).unwrap();
    assert!(r.residual <= 2.6e-5 && r.residual >= 2.57e-9, "{r:?}");
    assert!(r.e_inv <= 1e-6);
    let again = residual_components(&model, &s, &b, 1e-8).unwrap();
    assert!((again.residual - r.residual).abs() <= 1e-8 * r.residual);
}

#[test]
fn label_tracks_energy_levels() {
    // h should be close to a monotone function of the pendulum energy above the separatrix
    let (s, k, b) = setup();
    let (model, _) = solve_bvp(&s, &k, &b, 1e-8).unwrap();
    let hi = model.eval(State::new(0.3, 1.9));
    let lo = model.eval(State::new(0.3, -1.9));
    assert!(hi > 0.9 && lo < -0.9, "{hi} {lo}");
    // H = y^2 / 2 - cos(2 pi x) / (2 pi) is constant along orbits
    let level = |x: f64| {
        (2.0 * (1.2 + (2.0 * std::f64::consts::PI * x).cos() / (2.0 * std::f64::consts::PI))).sqrt()
    };
    let h0 = model.eval(State::new(0.0, level(0.0)));
    for x in [0.1, 0.25, 0.4, 0.5, 0.65, 0.8, 0.95] {
        let a = model.eval(State::new(x, level(x)));
        assert!((a - h0).abs() < 1e-2, "x = {x}: {a} vs {h0}");
    }
}

#[test]
fn evp_smallest_eigenvalue() {
    let (s, k, b) = setup();
    let res = solve_evp(&s, &k, &b, 1e-8, 1e-8, 2).unwrap();
    assert!(res.pairs[0].lambda <= 1e-8, "{:?}", res.lambdas());
    assert!(res.pairs[0].lambda <= res.pairs[1].lambda);
}

#[test]
fn saved_model_evaluates_identically() {
    let (s, k, b) = setup();
    let (model, _) = solve_bvp(&s, &k, &b, 1e-8).unwrap();
    let mut buf = Vec::new();
    write_model(&mut buf, &model, None).unwrap();
    let back = read_model(&buf[..]).unwrap().model;
    for p in sobol_sample(s.domain(), 100, 999) {
        assert_eq!(back.eval(p).to_bits(), model.eval(p).to_bits());
    }
}
