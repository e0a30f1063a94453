//! Soft annulus potentials, numerical certification of the Dyson operator
//! inequality, and the cutoff combinatorics of the many-body bound.

mod cutoffs;
mod pencil;

pub use cutoffs::{
    check_hypotheses, four_body_stress, no_four_body_check, pair_cutoffs, CutoffConfig,
    HypothesisCheck, Point, StressReport,
};
pub use pencil::{
    assemble_q1, cartesian_pencil, lowest_pencil_eigenvalue, PencilProblem, PencilResult, Q1Grid,
};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{precondition, Result};
use crate::linalg::Tridiagonal;
use crate::potentials::{MetricMatrix, PotentialSpec};
use crate::quadrature::{annulus_volume, gauss_legendre, sphere_area};
use crate::scattering::radial::{extend_log, radial_mesh, RadialFe};
use crate::scattering::{radial_estimate, ScatteringOptions};

/// Uniform density on the annulus {R₁ ≤ |x| ≤ R₂} with unit integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DysonPotential {
    pub r1: f64,
    pub r2: f64,
    pub d: usize,
    pub value: f64,
}

pub fn construct_u(r1: f64, r2: f64, d: usize) -> Result<DysonPotential> {
    if !(r1 > 0.0 && r2 > 2.0 * r1) || !r2.is_finite() {
        return precondition(format!(
            "annulus needs R₂ > 2R₁ > 0, got R₁ = {r1}, R₂ = {r2}"
        ));
    }
    if d == 0 {
        return precondition("dimension must be positive");
    }
    let u = DysonPotential {
        r1,
        r2,
        d,
        value: 1.0 / annulus_volume(d, r1, r2),
    };
    let total = u.integral();
    if (total - 1.0).abs() > 1e-10 {
        return Err(crate::Error::InvalidInput(format!(
            "∫U = {total} deviates from 1"
        )));
    }
    Ok(u)
}

impl DysonPotential {
    pub fn eval_radius(&self, r: f64) -> f64 {
        if r >= self.r1 && r <= self.r2 {
            self.value
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_radius(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Gauss quadrature of ∫U in polar coordinates.
    pub fn integral(&self) -> f64 {
        let (x, w) = gauss_legendre(8);
        let h = self.r2 - self.r1;
        let m: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let r = self.r1 + 0.5 * h * (1.0 + xi);
                0.5 * h * wi * r.powi(self.d as i32 - 1)
            })
            .sum();
        sphere_area(self.d) * self.value * m
    }

    pub fn sup(&self) -> f64 {
        self.value
    }
}

/// Discretization used by the certifier.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CertGrid {
    /// Radial P1 elements; spacing h near the potential, log-graded beyond.
    Radial { h: f64 },
    /// Q1 elements on a cube of half side `half_side` (default 1.25·R₂).
    Cartesian {
        cells: usize,
        half_side: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DysonOptions {
    pub grid: CertGrid,
    /// Uniform bound on the effective constant: pass requires C_eff ≤ c_bound.
    pub c_bound: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// b(v) to compare against; computed by the radial route when absent.
    pub b_reference: Option<f64>,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self {
            grid: CertGrid::Radial { h: 0.0 },
            c_bound: 5.0,
            tol: 1e-10,
            max_iter: 20_000,
            b_reference: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DysonReport {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub d: usize,
    pub metric: Option<[[f64; 2]; 2]>,
    pub grid: CertGrid,
    pub unknowns: usize,
    pub b_reference: Option<f64>,
    pub lambda_min: f64,
    /// 1 − λ_min/b.
    pub deficit: Option<f64>,
    /// deficit · R₁/R₀.
    pub c_eff: Option<f64>,
    pub c_bound: f64,
    pub iterations: usize,
    pub residual: f64,
    pub pass: bool,
}

/// Smallest generalized Rayleigh quotient of
/// 2∫_{|x|≤R₂}|M∇φ|² + ∫vφ² against ∫Uφ², compared with b(v).
pub fn certify_dyson_inequality(
    v: &PotentialSpec,
    u: &DysonPotential,
    metric: Option<&MetricMatrix>,
    opts: &DysonOptions,
) -> Result<DysonReport> {
    let d = v.dimension;
    if u.d != d {
        return precondition("U and v live in different dimensions");
    }
    let r0 = v.range_r0;
    if !v.is_zero() && r0 >= u.r1 {
        return precondition(format!("supp v (R₀ = {r0}) must lie inside R₁ = {}", u.r1));
    }
    let metric = metric.filter(|m| !m.is_identity());
    if let Some(m) = metric {
        if m.dim() != d {
            return precondition("metric dimension does not match the potential");
        }
    }
    let mut report = DysonReport {
        r0,
        r1: u.r1,
        r2: u.r2,
        d,
        metric: metric.map(|m| m.block),
        grid: opts.grid,
        unknowns: 0,
        b_reference: opts.b_reference,
        lambda_min: 0.0,
        deficit: None,
        c_eff: None,
        c_bound: opts.c_bound,
        iterations: 0,
        residual: 0.0,
        pass: true,
    };
    if v.is_zero() {
        report.b_reference = Some(0.0);
        return Ok(report);
    }
    let result = match opts.grid {
        CertGrid::Radial { h } => {
            let Some(profile) = v.radial_profile() else {
                return precondition("the radial route needs a radial potential");
            };
            if metric.is_some() {
                return precondition("the radial route needs the identity metric");
            }
            if report.b_reference.is_none() && d >= 3 {
                let (est, _) = radial_estimate(&profile, d, &ScatteringOptions::default())?;
                report.b_reference = Some(est.value);
            }
            let h = if h > 0.0 { h } else { r0 / 400.0 };
            let (res, n) = radial_pencil(v, &profile, u, h, opts)?;
            report.unknowns = n;
            res
        }
        CertGrid::Cartesian { cells, half_side } => {
            let g = match metric {
                Some(m) => m.full_matrix(),
                None => DMatrix::identity(d, d),
            };
            let r2 = u.r2;
            let vf = |x: &[f64]| v.eval(x);
            let uf = |x: &[f64]| u.eval(x);
            let region = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>() <= r2 * r2;
            let problem = PencilProblem {
                d,
                v: &vf,
                u: &uf,
                region: &region,
                metric: g,
                map: DMatrix::identity(d, d),
            };
            let grid = Q1Grid {
                cells,
                half_side: half_side.unwrap_or(1.25 * r2),
            };
            if v.range_r0 / (2.0 * grid.half_side / cells as f64) < 2.0 {
                return Err(crate::Error::GridTooCoarse(
                    "fewer than two Q1 cells across the support of v".into(),
                ));
            }
            let res = cartesian_pencil(&problem, &grid, opts.tol, opts.max_iter)?;
            report.unknowns = res.vector.len();
            res
        }
    };
    report.lambda_min = result.lambda;
    report.iterations = result.iterations;
    report.residual = result.residual;
    if let Some(b) = report.b_reference {
        if b > 0.0 {
            let deficit = 1.0 - result.lambda / b;
            let c_eff = deficit * u.r1 / r0;
            report.deficit = Some(deficit);
            report.c_eff = Some(c_eff);
            report.pass = result.lambda >= 0.0 && c_eff <= opts.c_bound;
        }
    } else {
        report.pass = result.lambda >= 0.0;
    }
    Ok(report)
}

/// Radial nodes for the pencil: uniform through supp v, log-graded to R₁ and on to R₂.
pub fn pencil_mesh(breakpoints: &[f64], r0: f64, r1: f64, r2: f64, h: f64) -> Vec<f64> {
    let mut nodes = radial_mesh(breakpoints, r0, r1, h);
    extend_log(&mut nodes, r2, r0, h);
    nodes
}

/// Tridiagonal A and diagonal B of the radial pencil with a free boundary at R₂.
pub fn radial_pencil_matrices(
    v: &crate::potentials::Profile,
    u: &DysonPotential,
    r0: f64,
    h: f64,
) -> (RadialFe, Tridiagonal, Vec<f64>) {
    let fe = RadialFe::new(pencil_mesh(&v.breakpoints(), r0, u.r1, u.r2, h), u.d);
    let mut a = fe.stiffness(2.0);
    let lv = fe.lumped(&|r| v.eval(r));
    for (diag, m) in a.diag.iter_mut().zip(&lv) {
        *diag += m;
    }
    let b = fe.lumped(&|r| u.eval_radius(r));
    (fe, a, b)
}

fn radial_pencil(
    v: &PotentialSpec,
    profile: &crate::potentials::Profile,
    u: &DysonPotential,
    h: f64,
    opts: &DysonOptions,
) -> Result<(PencilResult, usize)> {
    let (fe, a, b) = radial_pencil_matrices(profile, u, v.range_r0, h);
    let b_op = Diagonal(b);
    let solve = |rhs: &[f64]| a.solve(rhs);
    let res = lowest_pencil_eigenvalue(&a, &b_op, &solve, opts.tol, opts.max_iter)?;
    Ok((res, fe.len()))
}

struct Diagonal(Vec<f64>);

impl crate::linalg::LinearOperator for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((y, x), d) in y.iter_mut().zip(x).zip(&self.0) {
            *y = d * x;
        }
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.0.clone())
    }
}
