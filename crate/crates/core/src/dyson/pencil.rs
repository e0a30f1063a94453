//! Lowest eigenvalue of the pencil A − λB with A positive definite and B
//! positive semidefinite, and a Q1 finite-element assembly of the Dyson pencil.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::{dot, CsrMatrix, LinearOperator};

#[derive(Debug, Clone, Serialize)]
pub struct PencilResult {
    pub lambda: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// ‖Ax − λBx‖ / ‖Ax‖ at the returned vector.
    pub residual: f64,
}

/// Shift-invert power iteration x ← A⁻¹Bx, normalized in the B-seminorm.
/// The iteration lives in the range of A⁻¹B, so the kernel of B never enters.
pub fn lowest_pencil_eigenvalue(
    a: &dyn LinearOperator,
    b: &dyn LinearOperator,
    solve_a: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<PencilResult> {
    let n = a.dim();
    let mut x = vec![1.0; n];
    let mut bx = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    for it in 1..=max_iter {
        b.apply(&x, &mut bx);
        if dot(&x, &bx) <= 0.0 && it == 1 {
            return precondition("start vector has no weight on the support of B");
        }
        x = solve_a(&bx)?;
        b.apply(&x, &mut bx);
        a.apply(&x, &mut ax);
        let xbx = dot(&x, &bx);
        let next = dot(&x, &ax) / xbx;
        let s = 1.0 / xbx.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
        let converged = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if converged {
            ax.iter_mut().for_each(|v| *v *= s);
            bx.iter_mut().for_each(|v| *v *= s);
            let r: f64 = ax
                .iter()
                .zip(&bx)
                .map(|(p, q)| (p - lambda * q).powi(2))
                .sum::<f64>()
                .sqrt();
            let residual = r / dot(&ax, &ax).sqrt();
            return Ok(PencilResult {
                lambda,
                vector: x,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        method: "shift-invert power iteration",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

type Field<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// ∫_{region} 2|G∇φ|² + vφ² against ∫uφ², discretized on a uniform mesh in
/// coordinates y with x = T y.
pub struct PencilProblem<'a> {
    pub d: usize,
    pub v: Field<'a>,
    pub u: Field<'a>,
    pub region: &'a (dyn Fn(&[f64]) -> bool + Sync),
    /// Kinetic metric G (d×d, symmetric).
    pub metric: DMatrix<f64>,
    /// Mesh map T (d×d, invertible).
    pub map: DMatrix<f64>,
}

/// Uniform Q1 mesh of [−L, L]^d with `cells` elements per axis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Q1Grid {
    pub cells: usize,
    pub half_side: f64,
}

impl Q1Grid {
    pub fn nodes(&self, d: usize) -> usize {
        (self.cells + 1).pow(d as u32)
    }
}

/// Global A and B over all mesh nodes.
pub fn assemble_q1(p: &PencilProblem, grid: &Q1Grid) -> Result<(CsrMatrix, CsrMatrix)> {
    let d = p.d;
    if p.metric.shape() != (d, d) || p.map.shape() != (d, d) {
        return precondition("metric and map must be d×d");
    }
    if grid.cells < 2 || !(grid.half_side > 0.0) {
        return precondition("Q1 grid needs at least two cells and a positive extent");
    }
    let det_t = p.map.determinant();
    let t_inv = p
        .map
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("mesh map is singular".into()))?;
    let k = (&t_inv * &p.metric * &p.metric * t_inv.transpose()) * (2.0 * det_t.abs());
    let n = grid.cells;
    let hy = 2.0 * grid.half_side / n as f64;
    let corners = 1usize << d;
    let g = 0.5 / 3f64.sqrt();
    let pts: Vec<Vec<f64>> = (0..corners)
        .map(|q| {
            (0..d)
                .map(|c| if q >> c & 1 == 1 { 0.5 + g } else { 0.5 - g })
                .collect()
        })
        .collect();
    let weight = hy.powi(d as i32) / corners as f64;
    // shape values and physical gradients at each Gauss point
    let mut shape = vec![vec![0.0; corners]; corners];
    let mut grad = vec![vec![vec![0.0; d]; corners]; corners];
    for (q, xi) in pts.iter().enumerate() {
        for a in 0..corners {
            let f = |c: usize| if a >> c & 1 == 1 { xi[c] } else { 1.0 - xi[c] };
            shape[q][a] = (0..d).map(f).product();
            for c in 0..d {
                let s = if a >> c & 1 == 1 { 1.0 } else { -1.0 };
                let rest: f64 = (0..d).filter(|&m| m != c).map(f).product();
                grad[q][a][c] = s * rest / hy;
            }
        }
    }
    let stiff: Vec<Vec<Vec<f64>>> = (0..corners)
        .map(|q| {
            (0..corners)
                .map(|a| {
                    (0..corners)
                        .map(|b| {
                            let mut s = 0.0;
                            for i in 0..d {
                                for j in 0..d {
                                    s += grad[q][a][i] * k[(i, j)] * grad[q][b][j];
                                }
                            }
                            s * weight
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let side = n + 1;
    let strides: Vec<usize> = (0..d).map(|c| side.pow((d - 1 - c) as u32)).collect();
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let mut ea = vec![0.0; corners * corners];
    let mut eb = vec![0.0; corners * corners];
    for _ in 0..n.pow(d as u32) {
        ea.iter_mut().for_each(|v| *v = 0.0);
        eb.iter_mut().for_each(|v| *v = 0.0);
        let mut touched = false;
        for (q, xi) in pts.iter().enumerate() {
            for c in 0..d {
                y[c] = -grid.half_side + (idx[c] as f64 + xi[c]) * hy;
            }
            let x: Vec<f64> = (0..d)
                .map(|r| (0..d).map(|c| p.map[(r, c)] * y[c]).sum())
                .collect();
            let inside = (p.region)(&x);
            let vq = (p.v)(&x) * det_t.abs() * weight;
            let uq = (p.u)(&x) * det_t.abs() * weight;
            if !inside && vq == 0.0 && uq == 0.0 {
                continue;
            }
            touched = true;
            for a in 0..corners {
                for b in 0..corners {
                    let nn = shape[q][a] * shape[q][b];
                    let mut val = vq * nn;
                    if inside {
                        val += stiff[q][a][b];
                    }
                    ea[a * corners + b] += val;
                    eb[a * corners + b] += uq * nn;
                }
            }
        }
        if touched {
            let base: usize = (0..d).map(|c| idx[c] * strides[c]).sum();
            let node = |a: usize| base + (0..d).map(|c| (a >> c & 1) * strides[c]).sum::<usize>();
            for a in 0..corners {
                for b in 0..corners {
                    let (i, j) = (node(a), node(b));
                    if ea[a * corners + b] != 0.0 {
                        ta.push((i, j, ea[a * corners + b]));
                    }
                    if eb[a * corners + b] != 0.0 {
                        tb.push((i, j, eb[a * corners + b]));
                    }
                }
            }
        }
        for c in (0..d).rev() {
            idx[c] += 1;
            if idx[c] < n {
                break;
            }
            idx[c] = 0;
        }
    }
    let total = grid.nodes(d);
    Ok((
        CsrMatrix::from_triplets(total, ta),
        CsrMatrix::from_triplets(total, tb),
    ))
}

/// Lowest pencil eigenvalue of the Q1 discretization, on the nodes touched by A.
pub fn cartesian_pencil(
    p: &PencilProblem,
    grid: &Q1Grid,
    tol: f64,
    max_iter: usize,
) -> Result<PencilResult> {
    let (a, b) = assemble_q1(p, grid)?;
    let keep: Vec<usize> = (0..a.n).filter(|&i| a.get(i, i) > 0.0).collect();
    if keep.is_empty() {
        return precondition("the kinetic region contains no mesh nodes");
    }
    let a = a.submatrix(&keep);
    let b = b.submatrix(&keep);
    let cg = crate::linalg::CgOptions {
        tol: 1e-12,
        max_iter: 100_000,
    };
    let solve = |rhs: &[f64]| crate::linalg::conjugate_gradient(&a, rhs, None, cg).map(|o| o.x);
    lowest_pencil_eigenvalue(&a, &b, &solve, tol, max_iter)
}
