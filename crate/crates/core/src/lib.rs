//! Learning approximately invariant label functions of area-preserving maps of the
//! plane or cylinder from a few map evaluations.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod bvp;
pub mod error;
pub mod evp;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod maps;
pub mod model;
pub mod sampling;
pub mod validation;

pub use boundary::BoundarySpec;
pub use bvp::{residual_components, solve_bvp, BvpProblem, ResidualReport};
pub use error::{Error, Result};
pub use evp::{rayleigh_quotient, solve_evp, EigenPair, EigenResult};
pub use geometry::{sobol_sample, Domain, Region, State, Topology};
pub use kernels::{kernel_matrix, sigma_from_density, KernelFamily, KernelSpec};
pub use maps::{IntegratorConfig, MapSpec, SymplecticMap};
pub use model::{
    eval_grid, eval_label, load_model, normalize_maxabs, save_model, LabelModel, Provenance,
};
pub use sampling::{build_samples, SampleSet};
pub use validation::{
    validate_model, validation_score, weighted_birkhoff, BirkhoffConfig, ValidationReport,
};
