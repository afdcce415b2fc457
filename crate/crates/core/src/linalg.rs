//! Dense linear algebra: LU and Cholesky solves (nalgebra-backed), a symmetric
//! Lanczos iteration with full reorthogonalization, and a dense symmetric-definite
//! generalized eigensolver used as a test oracle.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Solve `m x = rhs` by LU with partial pivoting.
pub fn lu_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "LU solve needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if rhs.len() != m.nrows() {
        return Err(Error::LengthMismatch {
            expected: m.nrows(),
            actual: rhs.len(),
        });
    }
    let lu = m.clone().lu();
    let u_diag = lu.u().diagonal();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in u_diag.iter() {
        lo = lo.min(d.abs());
        hi = hi.max(d.abs());
    }
    let condition_estimate = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(lo > 0.0) || !condition_estimate.is_finite() || condition_estimate * f64::EPSILON >= 1.0 {
        return Err(Error::Singular { condition_estimate });
    }
    let x = lu
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(Error::Singular { condition_estimate })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { condition_estimate });
    }
    Ok(x.data.into())
}

/// `M = U^T U` with `U` upper triangular (stored as its transpose `L`).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    inner: Cholesky<f64, Dyn>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.inner.l_dirty().nrows()
    }

    /// The upper factor `U = L^T`.
    pub fn upper(&self) -> DenseMatrix {
        self.inner.l().transpose()
    }

    /// Solve `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut DVector<f64>) {
        self.inner.solve_mut(b);
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.inner.solve(b)
    }
}

/// Cholesky factorization of a symmetric positive definite matrix (lower triangle is read).
pub fn cholesky(m: &DenseMatrix) -> Result<CholeskyFactor> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(
            "Cholesky needs a square matrix".into(),
        ));
    }
    Cholesky::new(m.clone())
        .map(|inner| CholeskyFactor { inner })
        .ok_or(Error::NotPositiveDefinite { jitter: 0.0 })
}

const JITTER_ESCALATIONS: usize = 12;

/// Cholesky with a diagonal floor added only if the plain factorization fails.
///
/// Starts at `1e-12 * trace(M) / dim` and grows tenfold per retry. Returns the factor
/// and the jitter actually used (0 when none was needed).
pub fn cholesky_with_jitter(m: &DenseMatrix) -> Result<(CholeskyFactor, f64)> {
    if let Ok(f) = cholesky(m) {
        return Ok((f, 0.0));
    }
    let dim = m.nrows().max(1);
    let mut jitter = 1e-12 * m.trace().abs() / dim as f64;
    if jitter == 0.0 {
        jitter = 1e-12;
    }
    for _ in 0..JITTER_ESCALATIONS {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(inner) = Cholesky::new(shifted) {
            log::warn!("Cholesky needed diagonal jitter {jitter:.3e}");
            return Ok((CholeskyFactor { inner }, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter })
}

/// All eigenpairs of a symmetric matrix, ascending.
pub fn dense_sym_eig(a: &DenseMatrix) -> Vec<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(a.clone());
    let mut pairs: Vec<_> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&v, c)| (v, c.into_owned()))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs
}

/// All pairs of `A v = lambda B v` for symmetric `A` and SPD `B`, ascending.
///
/// Reduces to a standard problem through `B = L L^T`. Eigenvectors are `B`-orthonormal.
pub fn dense_sym_generalized_eig(
    a: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<Vec<(f64, DVector<f64>)>> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::InvalidArgument(
            "pencil matrices must be square and equal-sized".into(),
        ));
    }
    let chol = Cholesky::new(b.clone()).ok_or(Error::NotPositiveDefinite { jitter: 0.0 })?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let mut tmp = a.clone();
    l.solve_lower_triangular_mut(&mut tmp);
    let mut c = tmp.transpose();
    l.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;
    let mut pairs = dense_sym_eig(&c);
    for (_, v) in pairs.iter_mut() {
        l.tr_solve_lower_triangular_mut(v);
    }
    Ok(pairs)
}

/// A converged Ritz pair.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Residual estimate `|beta_m s_m|` from the tridiagonal projection.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// Largest pairs, descending by value.
    pub pairs: Vec<RitzPair>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalize `w` against every basis vector (two classical Gram-Schmidt passes).
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        reorthogonalize(&mut v, basis);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// Largest eigenpairs of a symmetric operator by Lanczos with full reorthogonalization.
///
/// Converged when `|beta_m s_{m,i}| <= tol * |theta_i|` for each of the `n_eigs`
/// largest Ritz values. The start vector is drawn from a fixed-seed generator, so
/// results are deterministic.
pub fn lanczos_largest<F>(
    op: F,
    dim: usize,
    n_eigs: usize,
    tol: f64,
    max_iter: usize,
) -> Result<LanczosOutput>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n_eigs == 0 || n_eigs >= dim {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_eigs < dim (got n_eigs = {n_eigs}, dim = {dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205e);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    // betas[j] couples basis[j] and basis[j + 1]
    let mut betas: Vec<f64> = Vec::new();
    let mut v = random_unit(dim, &mut rng, &basis).expect("nonzero dimension");
    let mut scale = 0.0f64;
    let max_steps = max_iter.min(dim);
    let mut best_converged = 0;

    for step in 0..max_steps {
        let mut w = op(&v);
        if w.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: w.len(),
            });
        }
        let alpha = dot(&w, &v);
        basis.push(v);
        alphas.push(alpha);
        reorthogonalize(&mut w, &basis);
        let beta = norm(&w);

        let m = basis.len();
        let t = DenseMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        scale = scale.max(eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs())));

        let exhausted = m == dim;
        let breakdown = beta <= 1e-13 * scale.max(f64::MIN_POSITIVE);
        if m >= n_eigs {
            let residuals: Vec<f64> = order
                .iter()
                .take(n_eigs)
                .map(|&i| (beta * eig.eigenvectors[(m - 1, i)]).abs())
                .collect();
            let converged = order
                .iter()
                .zip(&residuals)
                .take_while(|(&i, &r)| exhausted || r <= tol * eig.eigenvalues[i].abs())
                .count();
            best_converged = best_converged.max(converged);
            if converged == n_eigs {
                let pairs = order
                    .iter()
                    .zip(&residuals)
                    .take(n_eigs)
                    .map(|(&i, &r)| {
                        let s = eig.eigenvectors.column(i);
                        let mut y = vec![0.0; dim];
                        for (q, sk) in basis.iter().zip(s.iter()) {
                            for (yi, qi) in y.iter_mut().zip(q) {
                                *yi += sk * qi;
                            }
                        }
                        let ny = norm(&y);
                        y.iter_mut().for_each(|x| *x /= ny);
                        RitzPair {
                            value: eig.eigenvalues[i],
                            vector: y,
                            residual: if exhausted { 0.0 } else { r },
                        }
                    })
                    .collect();
                return Ok(LanczosOutput {
                    pairs,
                    iterations: step + 1,
                });
            }
        }
        if exhausted {
            break;
        }
        if breakdown {
            // Invariant subspace found: continue from a fresh orthogonal direction.
            match random_unit(dim, &mut rng, &basis) {
                Some(next) => {
                    betas.push(0.0);
                    v = next;
                }
                None => break,
            }
        } else {
            betas.push(beta);
            v = w.into_iter().map(|x| x / beta).collect();
        }
    }
    Err(Error::NoConvergence {
        iterations: basis.len(),
        converged: best_converged,
        requested: n_eigs,
    })
}
