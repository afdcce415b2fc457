//! The invariant eigenvalue problem: minimize the kernel Rayleigh quotient
//! `(E_inv + E_bd + epsilon E_K) / |h|^2` over `h = K c`.
//!
//! Solved in `h` coordinates by shift-invert Lanczos. With `A = G^T G + W + delta I`
//! (2 x 2 block diagonal) and `P = K / epsilon + A^{-1}`, the operator
//! `A^{-1} - A^{-1} P^{-1} A^{-1} = (A + epsilon K^{-1})^{-1}` has eigenvalues
//! `1 / (lambda + delta)`, and `epsilon c = (lambda + delta) P^{-1} A^{-1} h`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundarySpec;
use crate::kernels::{kernel_matrix, KernelSpec};
use crate::linalg::{cholesky_with_jitter, lanczos_largest, CholeskyFactor, DenseMatrix};
use crate::model::LabelModel;
use crate::sampling::{invariance_energy, SampleSet};
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Eigenvalues in `(-NEGATIVE_SLACK, 0)` are roundoff and clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    /// Values at the sample points, unit Euclidean norm.
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending by `lambda`.
    pub pairs: Vec<EigenPair>,
    pub shift_delta: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Diagonal shift added to factor `P`, zero when none was needed.
    pub jitter: f64,
}

impl EigenResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// The label function of mode `i` (0-based).
    pub fn model(&self, i: usize, kernel: &KernelSpec, samples: &SampleSet) -> Result<LabelModel> {
        let pair = self.pairs.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "mode {i} out of range ({} computed)",
                self.pairs.len()
            ))
        })?;
        LabelModel::new(
            *kernel,
            samples.topology(),
            samples.points().to_vec(),
            pair.c.clone(),
        )
    }
}

/// Symmetric 2 x 2 block `[[p, q], [q, r]]` stored per sample pair `(i, N + i)`.
#[derive(Debug, Clone, Copy)]
struct Block {
    p: f64,
    q: f64,
    r: f64,
}

/// Matrix-free shift-invert operator.
#[derive(Debug, Clone)]
pub struct EvpOperator {
    a_inv: Vec<Block>,
    chol: CholeskyFactor,
    epsilon: f64,
    jitter: f64,
}

impl EvpOperator {
    pub fn new(k: &DenseMatrix, w_bd: &[f64], epsilon: f64, delta: f64) -> Result<Self> {
        let dim = w_bd.len();
        if k.nrows() != dim || k.ncols() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: k.nrows(),
            });
        }
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "dimension must be even and positive, got {dim}"
            )));
        }
        if !(epsilon > 0.0) || !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon and delta must be positive (got {epsilon}, {delta})"
            )));
        }
        let n = dim / 2;
        let a_inv: Vec<Block> = (0..n)
            .map(|i| {
                let s = w_bd[i] + delta;
                let t = w_bd[n + i] + delta;
                // det of [[1 + s, -1], [-1, 1 + t]] without cancellation
                let det = s * t + s + t;
                Block {
                    p: (1.0 + t) / det,
                    q: 1.0 / det,
                    r: (1.0 + s) / det,
                }
            })
            .collect();
        let mut p = k / epsilon;
        for (i, b) in a_inv.iter().enumerate() {
            p[(i, i)] += b.p;
            p[(i, n + i)] += b.q;
            p[(n + i, i)] += b.q;
            p[(n + i, n + i)] += b.r;
        }
        let (chol, jitter) = cholesky_with_jitter(&p)?;
        Ok(Self {
            a_inv,
            chol,
            epsilon,
            jitter,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.a_inv.len()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn apply_a_inv(&self, v: &[f64]) -> Vec<f64> {
        let n = self.a_inv.len();
        let mut out = vec![0.0; 2 * n];
        for (i, b) in self.a_inv.iter().enumerate() {
            let (x, y) = (v[i], v[n + i]);
            out[i] = b.p * x + b.q * y;
            out[n + i] = b.q * x + b.r * y;
        }
        out
    }

    fn p_inv_a_inv(&self, h: &[f64]) -> (Vec<f64>, DVector<f64>) {
        let u = self.apply_a_inv(h);
        let t = self.chol.solve(&DVector::from_column_slice(&u));
        (u, t)
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let (mut u, t) = self.p_inv_a_inv(h);
        let correction = self.apply_a_inv(t.as_slice());
        for (a, b) in u.iter_mut().zip(&correction) {
            *a -= b;
        }
        u
    }

    /// Kernel coefficients `c` with `K c = h` for an eigenvector `h` of `A + epsilon K^{-1}`
    /// with eigenvalue `nu`, from `epsilon c = nu P^{-1} A^{-1} h`.
    pub fn coefficients(&self, h: &[f64], nu: f64) -> Vec<f64> {
        let (_, t) = self.p_inv_a_inv(h);
        t.iter().map(|v| v * nu / self.epsilon).collect()
    }
}

/// `(E_inv(h) + sum w h^2 + epsilon c^T h) / |h|^2` with `h = K c`.
pub fn rayleigh_quotient(c: &[f64], k: &DenseMatrix, w_bd: &[f64], epsilon: f64) -> Result<f64> {
    if c.len() != k.ncols() || w_bd.len() != k.nrows() {
        return Err(Error::LengthMismatch {
            expected: k.ncols(),
            actual: c.len(),
        });
    }
    let h = k * DVector::from_column_slice(c);
    let hh = h.norm_squared();
    if hh == 0.0 {
        return Err(Error::Degenerate("h = K c vanishes".into()));
    }
    let e_inv = invariance_energy(h.as_slice())?;
    let e_w: f64 = h.iter().zip(w_bd).map(|(h, w)| w * h * h).sum();
    let e_k: f64 = c.iter().zip(h.iter()).map(|(c, h)| c * h).sum();
    Ok((e_inv + e_w + epsilon * e_k) / hh)
}

/// `G^T G + W` as a dense matrix.
pub fn dense_penalty(w_bd: &[f64]) -> DenseMatrix {
    let dim = w_bd.len();
    let n = dim / 2;
    let mut a =
        DenseMatrix::from_diagonal(&DVector::from_iterator(dim, w_bd.iter().map(|w| 1.0 + w)));
    for i in 0..n {
        a[(i, n + i)] = -1.0;
        a[(n + i, i)] = -1.0;
    }
    a
}

/// Reference solution of `(K (G^T G + W) K + epsilon K) c = lambda K^2 c` by dense
/// generalized eigendecomposition, ascending. Only for small, well-conditioned `K`.
pub fn solve_evp_dense(
    k: &DenseMatrix,
    w_bd: &[f64],
    epsilon: f64,
) -> Result<Vec<(f64, DVector<f64>)>> {
    if k.nrows() != w_bd.len() || !w_bd.len().is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            expected: w_bd.len(),
            actual: k.nrows(),
        });
    }
    let lhs = k * dense_penalty(w_bd) * k + k * epsilon;
    let lhs = (&lhs + lhs.transpose()) * 0.5;
    let rhs = k * k;
    let rhs = (&rhs + rhs.transpose()) * 0.5;
    crate::linalg::dense_sym_generalized_eig(&lhs, &rhs)
}

/// Smallest eigenpairs from a precomputed kernel matrix and boundary weight.
pub fn solve_evp_matrix(
    k: &DenseMatrix,
    w_bd: &[f64],
    epsilon: f64,
    delta: f64,
    n_eigs: usize,
) -> Result<EigenResult> {
    let op = EvpOperator::new(k, w_bd, epsilon, delta)?;
    let dim = op.dim();
    if n_eigs == 0 || n_eigs >= dim {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_eigs < 2N (got n_eigs = {n_eigs}, 2N = {dim})"
        )));
    }
    let out = lanczos_largest(|v| op.apply(v), dim, n_eigs, DEFAULT_TOL, 10 * n_eigs + 100)?;
    let mut pairs = Vec::with_capacity(n_eigs);
    for ritz in out.pairs {
        if !(ritz.value > 0.0) {
            return Err(Error::NegativeEigenvalue(-ritz.value));
        }
        let mut lambda = 1.0 / ritz.value - delta;
        if lambda < -NEGATIVE_SLACK {
            return Err(Error::NegativeEigenvalue(lambda));
        }
        lambda = lambda.max(0.0);
        let mut h = ritz.vector;
        let nh = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let peak = h
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let scale = peak.signum() / nh;
        h.iter_mut().for_each(|v| *v *= scale);
        let c = op.coefficients(&h, 1.0 / ritz.value);
        pairs.push(EigenPair { lambda, h, c });
    }
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(EigenResult {
        pairs,
        shift_delta: delta,
        epsilon,
        iterations: out.iterations,
        jitter: op.jitter(),
    })
}

/// Smallest `n_eigs` eigenpairs. Only the weight of `boundary` is used.
pub fn solve_evp(
    samples: &SampleSet,
    kernel: &KernelSpec,
    boundary: &BoundarySpec,
    epsilon: f64,
    delta: f64,
    n_eigs: usize,
) -> Result<EigenResult> {
    kernel.validate()?;
    kernel.check_topology(samples.topology())?;
    boundary.validate()?;
    let k = kernel_matrix(kernel, samples.points(), samples.topology());
    let w = boundary.weights(samples.points());
    solve_evp_matrix(&k, &w, epsilon, delta, n_eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::State;
    use crate::geometry::{Domain, Region};
    use crate::kernels::KernelFamily;
    use crate::linalg::dense_sym_eig;
    use crate::maps::MapSpec;
    use crate::maps::SymplecticMap;
    use crate::sampling::build_samples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pendulum_setup(n: usize) -> (SampleSet, KernelSpec, BoundarySpec) {
        let d = Domain::annulus(-2.0, 2.0).unwrap();
        let s = build_samples(&MapSpec::pendulum(), &d, n, 1).unwrap();
        let k = KernelSpec::new(KernelFamily::PeriodicProduct, 0.4).unwrap();
        (s, k, BoundarySpec::smoothed_strips(-2.0, 2.0, 0.05, 0.1))
    }

    fn standard_setup(n: usize, kk: f64) -> (SampleSet, KernelSpec, BoundarySpec) {
        let d = Domain::annulus(0.0, 1.0).unwrap();
        let s = build_samples(&MapSpec::standard(kk), &d, n, 1).unwrap();
        let k = KernelSpec::new(KernelFamily::PeriodicProduct, 0.3).unwrap();
        (
            s,
            k,
            BoundarySpec::zero_region(Region::strips(0.0, 1.0, 0.1)),
        )
    }

    fn dense_a(w: &[f64], delta: f64) -> DenseMatrix {
        dense_penalty(w) + DenseMatrix::identity(w.len(), w.len()) * delta
    }

    #[test]
    fn operator_inverts_shifted_pencil() {
        // y = Op v solves (K A + epsilon I) y = K v
        let (s, k, b) = pendulum_setup(10);
        let km = kernel_matrix(&k, s.points(), s.topology());
        let w = b.weights(s.points());
        let (eps, delta) = (1e-3, 1e-4);
        let op = EvpOperator::new(&km, &w, eps, delta).unwrap();
        let lhs = &km * dense_a(&w, delta) + DenseMatrix::identity(20, 20) * eps;
        for j in 0..20 {
            let v = DVector::from_fn(20, |i, _| ((i * 7 + j * 3) as f64).sin());
            let y = DVector::from_vec(op.apply(v.as_slice()));
            let r = &lhs * &y - &km * &v;
            assert!(
                r.norm() <= 1e-9 * (&km * &v).norm().max(eps * y.norm()),
                "column {j}: {}",
                r.norm()
            );
        }
    }

    fn random_standard(n: usize, seed: u64) -> (DenseMatrix, Vec<f64>) {
        let d = Domain::annulus(0.0, 1.0).unwrap();
        let map = MapSpec::standard(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<State> = (0..n)
            .map(|_| State::new(rng.random(), rng.random()))
            .collect();
        let ys: Vec<State> = xs.iter().map(|&p| map.apply(p).unwrap()).collect();
        let s = SampleSet::from_parts(d, xs, ys, 0).unwrap();
        let k = KernelSpec::new(KernelFamily::PeriodicProduct, 0.1).unwrap();
        let b = BoundarySpec::smoothed_strips(0.0, 1.0, 0.05, 0.1);
        (
            kernel_matrix(&k, s.points(), s.topology()),
            b.weights(s.points()),
        )
    }

    #[test]
    fn operator_matches_assembled_dense_inverse() {
        let (km, w) = random_standard(10, 3);
        let (eps, delta) = (1e-3, 1e-4);
        let op = EvpOperator::new(&km, &w, eps, delta).unwrap();
        let m = dense_a(&w, delta) + km.clone().try_inverse().unwrap() * eps;
        let minv = m.try_inverse().unwrap();
        for j in 0..20 {
            let mut e = vec![0.0; 20];
            e[j] = 1.0;
            let col = op.apply(&e);
            for i in 0..20 {
                assert!(
                    (col[i] - minv[(i, j)]).abs() <= 1e-10 * minv.amax(),
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let (km, w) = random_standard(30, 4);
        let op = EvpOperator::new(&km, &w, 1e-6, DEFAULT_DELTA).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u: Vec<f64> = (0..60).map(|_| rng.random::<f64>() - 0.5).collect();
            let v: Vec<f64> = (0..60).map(|_| rng.random::<f64>() - 0.5).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let (ou, ov) = (op.apply(&u), op.apply(&v));
            let scale = dot(&u, &u).sqrt() * dot(&v, &v).sqrt() * (1.0 / DEFAULT_DELTA);
            assert!((dot(&u, &ov) - dot(&ou, &v)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn matches_dense_generalized_problem() {
        let d = Domain::annulus(0.0, 1.0).unwrap();
        let map = MapSpec::standard(0.7);
        let k = KernelSpec::new(KernelFamily::PeriodicProduct, 0.1).unwrap();
        let b = BoundarySpec::smoothed_strips(0.0, 1.0, 0.05, 0.1);
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<State> = (0..15)
                .map(|_| State::new(rng.random(), rng.random()))
                .collect();
            let ys: Vec<State> = xs.iter().map(|&p| map.apply(p).unwrap()).collect();
            let s = SampleSet::from_parts(d, xs, ys, 0).unwrap();
            let km = kernel_matrix(&k, s.points(), s.topology());
            let w = b.weights(s.points());
            let eps = 1e-3;
            let res = solve_evp_matrix(&km, &w, eps, DEFAULT_DELTA, 4).unwrap();
            let dense = solve_evp_dense(&km, &w, eps).unwrap();
            for (pair, (mu, _)) in res.pairs.iter().zip(&dense) {
                assert!(
                    (pair.lambda - mu).abs() <= 1e-6 * mu.abs(),
                    "seed {seed}: {} vs {mu}",
                    pair.lambda
                );
            }
        }
    }

    #[test]
    fn eigenpair_properties() {
        let (s, k, b) = standard_setup(80, 0.5);
        let km = kernel_matrix(&k, s.points(), s.topology());
        let w = b.weights(s.points());
        let eps = 1e-6;
        let res = solve_evp_matrix(&km, &w, eps, DEFAULT_DELTA, 5).unwrap();
        let ls = res.lambdas();
        assert!(ls.windows(2).all(|p| p[0] <= p[1]));
        assert!(ls.iter().all(|&l| l >= 0.0));
        for p in &res.pairs {
            let nh: f64 = p.h.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nh - 1.0).abs() < 1e-12);
            let peak =
                p.h.iter()
                    .copied()
                    .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(peak > 0.0);
            let kc = &km * DVector::from_column_slice(&p.c);
            let diff = (kc - DVector::from_column_slice(&p.h)).norm();
            assert!(diff <= 1e-6, "|Kc - h| = {diff}");
            let rq = rayleigh_quotient(&p.c, &km, &w, eps).unwrap();
            assert!(
                (rq - p.lambda).abs() <= 1e-6 * p.lambda.max(1e-9),
                "{rq} vs {}",
                p.lambda
            );
        }
        for i in 0..5 {
            for j in 0..i {
                let d: f64 = res.pairs[i]
                    .h
                    .iter()
                    .zip(&res.pairs[j].h)
                    .map(|(a, b)| a * b)
                    .sum();
                assert!(d.abs() < 1e-6, "<h{i}, h{j}> = {d}");
            }
        }
    }

    #[test]
    fn dense_and_operator_spectra_agree_in_h() {
        let (s, k, b) = standard_setup(12, 0.9);
        let km = kernel_matrix(&k, s.points(), s.topology());
        let w = b.weights(s.points());
        let eps = 1e-4;
        let m = dense_a(&w, 0.0) + km.clone().try_inverse().unwrap() * eps;
        let m = (&m + m.transpose()) * 0.5;
        let dense = dense_sym_eig(&m);
        let res = solve_evp_matrix(&km, &w, eps, DEFAULT_DELTA, 3).unwrap();
        for (p, (l, _)) in res.pairs.iter().zip(&dense) {
            assert!((p.lambda - l).abs() <= 1e-6 * l.abs().max(1e-6));
        }
    }

    #[test]
    fn deterministic() {
        let (s, k, b) = standard_setup(40, 0.3);
        let a = solve_evp(&s, &k, &b, 1e-5, DEFAULT_DELTA, 3).unwrap();
        let c = solve_evp(&s, &k, &b, 1e-5, DEFAULT_DELTA, 3).unwrap();
        for (x, y) in a.pairs.iter().zip(&c.pairs) {
            assert_eq!(x.lambda.to_bits(), y.lambda.to_bits());
            assert_eq!(x.h, y.h);
        }
    }

    #[test]
    fn argument_checks() {
        let (s, k, b) = standard_setup(10, 0.3);
        assert!(solve_evp(&s, &k, &b, 0.0, DEFAULT_DELTA, 2).is_err());
        assert!(solve_evp(&s, &k, &b, 1e-5, 0.0, 2).is_err());
        assert!(solve_evp(&s, &k, &b, 1e-5, DEFAULT_DELTA, 0).is_err());
        assert!(solve_evp(&s, &k, &b, 1e-5, DEFAULT_DELTA, 20).is_err());
        let km = kernel_matrix(&k, s.points(), s.topology());
        assert!(rayleigh_quotient(&[0.0; 20], &km, &[0.0; 20], 1e-5).is_err());
    }

    #[test]
    fn eigenvectors_give_models() {
        let (s, k, b) = pendulum_setup(60);
        let res = solve_evp(&s, &k, &b, 1e-6, DEFAULT_DELTA, 2).unwrap();
        let m = res.model(0, &k, &s).unwrap();
        let vals = m.eval_many(s.points());
        for (v, h) in vals.iter().zip(&res.pairs[0].h) {
            assert!((v - h).abs() < 1e-6);
        }
        assert!(res.model(2, &k, &s).is_err());
    }
}
