//! Kernel families, kernel-matrix assembly and the density-based width rule.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{separation, State, Topology};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    SquaredExponential,
    /// `1 / sqrt(1 + |x - y|^2 / sigma^2)`
    InverseMultiquadric,
    /// `exp(-sin^2(pi dx) / (2 pi sigma^2) - dy^2 / (2 sigma^2))`, periodic in `x`.
    PeriodicProduct,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::SquaredExponential => "squared_exponential",
            KernelFamily::InverseMultiquadric => "inverse_multiquadric",
            KernelFamily::PeriodicProduct => "periodic_product",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, sigma: f64) -> Result<Self> {
        let k = Self { family, sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel width must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// The periodic kernel lives on the cylinder; the radial kernels on the plane.
    pub fn check_topology(&self, topology: Topology) -> Result<()> {
        let expected = match self.family {
            KernelFamily::PeriodicProduct => Topology::Cylinder,
            _ => Topology::Plane,
        };
        if topology != expected {
            return Err(Error::TopologyMismatch {
                family: self.family.to_string(),
                topology: topology.to_string(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, p: State, q: State, topology: Topology) -> f64 {
        let (dx, dy) = separation(p, q, topology);
        let s2 = self.sigma * self.sigma;
        match self.family {
            KernelFamily::SquaredExponential => (-(dx * dx + dy * dy) / (2.0 * s2)).exp(),
            KernelFamily::InverseMultiquadric => 1.0 / (1.0 + (dx * dx + dy * dy) / s2).sqrt(),
            KernelFamily::PeriodicProduct => {
                let s = (PI * dx).sin();
                (-(s * s) / (2.0 * PI * s2) - dy * dy / (2.0 * s2)).exp()
            }
        }
    }
}

pub fn eval_kernel(spec: &KernelSpec, p: State, q: State, topology: Topology) -> f64 {
    spec.eval(p, q, topology)
}

/// Symmetric matrix `K[m, n] = K(z_m, z_n)`.
///
/// The lower triangle is evaluated (in parallel over columns) and mirrored, so
/// the result is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec, points: &[State], topology: Topology) -> DenseMatrix {
    let n = points.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(j, col)| {
            let q = points[j];
            for i in j..n {
                col[i] = spec.eval(points[i], q, topology);
            }
        });
    let mut k = DenseMatrix::from_vec(n, n, data);
    for j in 0..n {
        for i in 0..j {
            k[(i, j)] = k[(j, i)];
        }
    }
    k
}

/// Rectangular matrix `K[m, n] = K(x_m, z_n)`.
pub fn cross_kernel_matrix(
    spec: &KernelSpec,
    rows: &[State],
    cols: &[State],
    topology: Topology,
) -> DenseMatrix {
    let (nr, nc) = (rows.len(), cols.len());
    let mut data = vec![0.0; nr * nc];
    data.par_chunks_mut(nr.max(1))
        .enumerate()
        .for_each(|(j, col)| {
            for (i, v) in col.iter_mut().enumerate() {
                *v = spec.eval(rows[i], cols[j], topology);
            }
        });
    DenseMatrix::from_vec(nr, nc, data)
}

/// Width scaled with point density: `sigma0 / sqrt(n)`.
pub fn sigma_from_density(sigma0: f64, n: usize) -> Result<f64> {
    if n == 0 || !(sigma0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma0 must be positive and n >= 1 (got sigma0 = {sigma0}, n = {n})"
        )));
    }
    Ok(sigma0 / (n as f64).sqrt())
}
