//! Iterative linear algebra shared by the solvers.
//!
//! Every reduction goes through [`dot`], which sums fixed-size chunks in a
//! fixed order, so results are bit-identical regardless of the thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y <- y + alpha x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(CHUNK)
        .zip(x.par_chunks(CHUNK))
        .for_each(|(y, x)| y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x));
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.par_chunks_mut(CHUNK)
        .for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
}

/// A symmetric linear operator applied matrix-free.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// y <- A x
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Diagonal of A, used for Jacobi preconditioning when available.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target ‖r‖/‖b‖.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient for SPD systems.
pub fn conjugate_gradient(
    op: &impl LinearOperator,
    rhs: &[f64],
    x0: Option<Vec<f64>>,
    opts: CgOptions,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(rhs.len(), n);
    let inv_diag: Option<Vec<f64>> = op.diagonal().map(|d| {
        d.into_iter()
            .map(|v| if v > 0.0 { 1.0 / v } else { 1.0 })
            .collect()
    });
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(inv) => z
            .par_chunks_mut(CHUNK)
            .zip(r.par_chunks(CHUNK).zip(inv.par_chunks(CHUNK)))
            .for_each(|(z, (r, i))| {
                for ((z, r), i) in z.iter_mut().zip(r).zip(i) {
                    *z = r * i;
                }
            }),
        None => z.copy_from_slice(r),
    };

    let b_norm = norm(rhs);
    let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    r.par_iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / b_norm;
    for it in 0..opts.max_iter {
        if rel <= opts.tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Indefinite(format!(
                "p^T A p = {pap:e} at CG iteration {it}"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / b_norm;
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut()
            .zip(&z)
            .for_each(|(p, z)| *p = z + beta * *p);
    }
    if rel <= opts.tol {
        return Ok(CgOutcome {
            x,
            iterations: opts.max_iter,
            relative_residual: rel,
        });
    }
    Err(Error::NonConvergence {
        method: "conjugate gradient",
        iterations: opts.max_iter,
        residual: rel,
    })
}

/// Symmetric tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// off[i] couples i and i+1
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Accumulates a symmetric 2×2 element block on (i, i+1).
    pub fn add_element(&mut self, i: usize, block: [[f64; 2]; 2]) {
        self.diag[i] += block[0][0];
        self.diag[i + 1] += block[1][1];
        self.off[i] += block[0][1];
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Thomas algorithm. Pivots are checked against zero only; the callers
    /// build diagonally dominant or SPD systems.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 {
            return Err(Error::Indefinite("zero pivot in tridiagonal solve".into()));
        }
        if n > 1 {
            c[0] = self.off[0] / denom;
        }
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            if denom == 0.0 {
                return Err(Error::Indefinite("zero pivot in tridiagonal solve".into()));
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        Ok(x)
    }
}

impl LinearOperator for Tridiagonal {
    fn dim(&self) -> usize {
        self.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul(x, y)
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.diag.clone())
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        row.binary_search(&j)
            .map(|k| self.values[self.indptr[i] + k])
            .unwrap_or(0.0)
    }

    /// Restriction to the rows and columns listed in `keep` (sorted).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut t = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = map[self.indices[p]];
                if j != usize::MAX {
                    t.push((k, j, self.values[p]));
                }
            }
        }
        Self::from_triplets(keep.len(), t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[p])] += self.values[p];
            }
        }
        m
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, y)| {
            *y = (self.indptr[i]..self.indptr[i + 1])
                .map(|p| self.values[p] * x[self.indices[p]])
                .sum();
        });
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.n).map(|i| self.get(i, i)).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov vectors kept per restart cycle.
    pub krylov_dim: usize,
    /// Converged when ‖Hx − θx‖ ≤ tol·|θ| + floor, floor = 64·ε·‖H‖ (estimated).
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed for the random restart used when the iteration stagnates.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 40,
            tol: 1e-9,
            max_restarts: 200,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Total operator applications.
    pub iterations: usize,
    /// Largest Ritz value seen, an estimate of ‖H‖.
    pub norm_estimate: f64,
}

/// Lowest eigenpair of a symmetric operator by explicitly restarted Lanczos
/// with full reorthogonalization inside each cycle.
pub fn lanczos_lowest(
    op: &impl LinearOperator,
    start: Vec<f64>,
    opts: LanczosOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    assert_eq!(start.len(), n);
    let m = opts.krylov_dim.clamp(2, n.max(2)).min(n);
    let mut x = start;
    let nx = norm(&x);
    if nx == 0.0 {
        return Err(Error::Precondition("zero Lanczos start vector".into()));
    }
    scale(1.0 / nx, &mut x);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut matvecs = 0;
    let mut norm_est: f64 = 0.0;
    let mut best_residual = f64::INFINITY;
    let mut stagnant = 0;
    let mut hx = vec![0.0; n];

    for _cycle in 0..opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(x.clone());
        let mut w = vec![0.0; n];
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // two passes of classical Gram–Schmidt
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(&w, v);
                    axpy(-c, v, &mut w);
                }
            }
            let b = norm(&w);
            if j + 1 == m || b <= 1e-14 * a.abs().max(norm_est).max(1e-300) {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imin, theta) =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
                );
        for v in eig.eigenvalues.iter() {
            norm_est = norm_est.max(v.abs());
        }
        let y = eig.eigenvectors.column(imin);
        x.iter_mut().for_each(|v| *v = 0.0);
        for (c, v) in y.iter().zip(&basis) {
            axpy(*c, v, &mut x);
        }
        let nx = norm(&x);
        scale(1.0 / nx, &mut x);

        op.apply(&x, &mut hx);
        matvecs += 1;
        let _ = theta;
        let theta = dot(&x, &hx);
        let mut r = hx.clone();
        axpy(-theta, &x, &mut r);
        let res = norm(&r);
        let floor = 64.0 * f64::EPSILON * norm_est.max(theta.abs());
        if res <= opts.tol * theta.abs() + floor {
            return Ok(EigenPair {
                value: theta,
                vector: x,
                residual: res,
                iterations: matvecs,
                norm_estimate: norm_est,
            });
        }
        if res < 0.9 * best_residual {
            best_residual = res;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 3 {
                for v in x.iter_mut() {
                    *v += 1e-3 * (rng.random::<f64>() - 0.5);
                }
                let nx = norm(&x);
                scale(1.0 / nx, &mut x);
                stagnant = 0;
            }
        }
    }
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    let theta = dot(&x, &r);
    axpy(-theta, &x, &mut r);
    Err(Error::NonConvergence {
        method: "restarted Lanczos",
        iterations: matvecs,
        residual: norm(&r),
    })
}
