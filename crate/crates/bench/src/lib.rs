//! Shared fixtures for the benchmarks.

use invlabel::{
    build_samples, BoundarySpec, Domain, KernelFamily, KernelSpec, MapSpec, Region, SampleSet,
};

/// Standard map on `T x [0, 1]` with the residual-scan settings.
pub fn standard_map(k: f64, n: usize) -> (SampleSet, KernelSpec, BoundarySpec) {
    let d = Domain::annulus(0.0, 1.0).expect("valid domain");
    let s = build_samples(&MapSpec::standard(k), &d, n, 1).expect("standard map samples");
    let kernel = KernelSpec::new(KernelFamily::PeriodicProduct, 0.1).expect("valid width");
    (
        s,
        kernel,
        BoundarySpec::smoothed_strips(0.0, 1.0, 0.01, 0.01),
    )
}

/// Forced pendulum on `[-0.79, 0.79]^2` with a zero boundary outside `[-0.75, 0.75]^2`.
pub fn perturbed_pendulum(n: usize) -> (SampleSet, KernelSpec, BoundarySpec) {
    let d = Domain::rectangle([-0.79, 0.79], [-0.79, 0.79]).expect("valid domain");
    let s = build_samples(&MapSpec::perturbed_pendulum(), &d, n, 1).expect("pendulum samples");
    let kernel = KernelSpec::new(KernelFamily::InverseMultiquadric, 0.25).expect("valid width");
    let b = BoundarySpec::zero_region(Region::outside_box([-0.75, 0.75], [-0.75, 0.75]));
    (s, kernel, b)
}
