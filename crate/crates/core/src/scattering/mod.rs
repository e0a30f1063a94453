//! Zero-energy scattering: b(v), truncated b_R(v) and the modified energy b_M(V).

pub mod cartesian;
mod extrapolate;
pub mod radial;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::{conjugate_gradient, dot, CgOptions, Tridiagonal};
use crate::potentials::{metric_matrix, pullback_by_metric, PotentialSpec, Profile};
use cartesian::{solve_box, BoxGrid, BoxOperator, LowerFace};
use radial::{radial_mesh, RadialFe};

pub use extrapolate::{extrapolate_to_infinity, richardson, Extrapolation, FitForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Radial ODE with the exact exterior harmonic tail, b from ∫vf.
    Radial,
    /// Dirichlet-truncated quadratic form minimized by conjugate gradients.
    Variational,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Discretization {
    Radial { nodes: Vec<f64>, d: usize },
    Cartesian { grid: BoxGrid },
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringSolution {
    #[serde(skip)]
    pub grid: Discretization,
    #[serde(skip)]
    pub f_values: Vec<f64>,
    #[serde(skip)]
    pub omega_values: Vec<f64>,
    pub b_value: f64,
    /// `None` when the exterior is treated exactly (R = ∞).
    pub truncation_r: Option<f64>,
    pub residual_sup: f64,
    pub route: Route,
    pub iterations: usize,
    /// Flux through the outer boundary, equal to ∫vf for the radial route.
    pub b_flux: Option<f64>,
}

impl ScatteringSolution {
    pub fn grid_summary(&self) -> serde_json::Value {
        match &self.grid {
            Discretization::Radial { nodes, d } => serde_json::json!({
                "type": "radial", "d": d, "nodes": nodes.len(),
                "r_max": nodes.last().copied().unwrap_or(0.0),
            }),
            Discretization::Cartesian { grid } => serde_json::to_value(grid).unwrap_or_default(),
        }
    }
}

/// An energy value with an error bar.
#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: f64,
    pub route: Route,
    pub truncation_radii: Vec<f64>,
    pub h: f64,
    pub residual_sup: f64,
    pub extrapolation: Option<Extrapolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringOptions {
    /// Grid spacing as a fraction of the support radius: h = R0 / cells_per_range.
    pub cells_per_range: usize,
    /// Truncation radii in units of R0 for the variational route.
    pub radii: Vec<f64>,
    pub form: FitForm,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub mem_cap: u64,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self {
            cells_per_range: 400,
            radii: vec![4.0, 6.0, 8.0],
            form: FitForm::Reciprocal,
            cg_tol: 1e-10,
            cg_max_iter: 100_000,
            mem_cap: 2 << 30,
        }
    }
}

impl ScatteringOptions {
    fn cg(&self) -> CgOptions {
        CgOptions {
            tol: self.cg_tol,
            max_iter: self.cg_max_iter,
        }
    }
}

fn check_resolution(profile: &Profile, h: f64) -> Result<()> {
    let r0 = profile.support_radius();
    if !(h > 0.0) || r0 / h < 8.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} gives fewer than 8 points across the support radius {r0}"
        )));
    }
    Ok(())
}

fn check_field(f: &[f64]) -> Result<()> {
    if let Some((i, v)) = f
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0 + 1e-12))
    {
        return Err(Error::GridTooCoarse(format!(
            "scattering solution left (0, 1] at node {i}: f = {v}"
        )));
    }
    Ok(())
}

/// Solves −2Δf + v f = 0 for radial v on (0, R_max] and returns b = ∫vf.
///
/// Beyond R_max the solution is continued by the exact harmonic tail
/// 1 − c r^{2−d}, which turns the condition at infinity into a Robin condition
/// at R_max; the result is b itself rather than a truncated energy.
pub fn solve_radial(profile: &Profile, d: usize, r_max: f64, h: f64) -> Result<ScatteringSolution> {
    profile.validate()?;
    if d < 3 {
        return precondition("radial scattering needs d ≥ 3");
    }
    let r0 = profile.support_radius();
    if r_max < r0 {
        return precondition(format!(
            "R_max = {r_max} does not contain the support radius {r0}"
        ));
    }
    check_resolution(profile, h)?;
    let fe = RadialFe::new(radial_mesh(&profile.breakpoints(), r0, r_max, h), d);
    let load = fe.lumped(&|r| profile.eval(r));
    let mut a = fe.stiffness(2.0);
    for (ai, mi) in a.diag.iter_mut().zip(&load) {
        *ai += mi;
    }
    let n = fe.len();
    let robin = 2.0 * fe.area() * (d as f64 - 2.0) * r_max.powi(d as i32 - 2);
    a.diag[n - 1] += robin;
    // solved for f directly: 1 − ω cancels catastrophically inside steep walls
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = robin;
    let f = a.solve(&rhs)?;
    check_field(&f)?;
    let omega: Vec<f64> = f.iter().map(|f| 1.0 - f).collect();
    let b: f64 = load.iter().zip(&f).map(|(m, f)| m * f).sum();
    let born: f64 = load.iter().sum();
    debug_assert!(b <= born * (1.0 + 1e-12) + 1e-300);
    Ok(ScatteringSolution {
        residual_sup: nodal_residual(&a, &f, &rhs, &fe.volumes()),
        b_flux: Some(robin * omega[n - 1]),
        grid: Discretization::Radial { nodes: fe.nodes, d },
        b_value: b,
        f_values: f,
        omega_values: omega,
        truncation_r: None,
        route: Route::Radial,
        iterations: 1,
    })
}

fn nodal_residual(a: &Tridiagonal, x: &[f64], rhs: &[f64], vol: &[f64]) -> f64 {
    let mut ax = vec![0.0; x.len()];
    a.mul(x, &mut ax);
    ax.iter()
        .zip(rhs)
        .zip(vol)
        .map(|((p, q), w)| if *w > 0.0 { (p - q).abs() / w } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Minimizes ∫_{|x|<R} 2|∇φ|² + v(1 − φ)² over φ vanishing at |x| = R by
/// conjugate gradients and returns b_R as the form value at the minimizer.
pub fn solve_variational(
    v: &PotentialSpec,
    domain_r: f64,
    h: f64,
    opts: &ScatteringOptions,
) -> Result<ScatteringSolution> {
    if !(domain_r > v.range_r0) {
        return precondition(format!(
            "truncation radius {domain_r} must exceed the support radius {}",
            v.range_r0
        ));
    }
    if v.dimension < 3 {
        return precondition("scattering needs d ≥ 3");
    }
    match v.radial_profile() {
        Some(g) if v.dimension >= 3 => solve_variational_radial(&g, v.dimension, domain_r, h, opts),
        _ => solve_variational_box(v, domain_r, h, opts),
    }
}

fn solve_variational_radial(
    g: &Profile,
    d: usize,
    domain_r: f64,
    h: f64,
    opts: &ScatteringOptions,
) -> Result<ScatteringSolution> {
    check_resolution(g, h)?;
    let fe = RadialFe::new(
        radial_mesh(&g.breakpoints(), g.support_radius(), domain_r, h),
        d,
    );
    let n = fe.len();
    let load = fe.lumped(&|r| g.eval(r));
    let mut a = fe.stiffness(2.0);
    for (ai, mi) in a.diag.iter_mut().zip(&load) {
        *ai += mi;
    }
    // f = 1 at the last node, eliminated into the right-hand side
    let free = Tridiagonal {
        diag: a.diag[..n - 1].to_vec(),
        off: a.off[..n - 2].to_vec(),
    };
    let mut rhs = vec![0.0; n - 1];
    rhs[n - 2] = -a.off[n - 2];
    let out = conjugate_gradient(&free, &rhs, None, opts.cg())?;
    let mut f = out.x.clone();
    f.push(1.0);
    let mut af = vec![0.0; n];
    a.mul(&f, &mut af);
    let b_r = dot(&f, &af);
    check_field(&f)?;
    let omega: Vec<f64> = f.iter().map(|f| 1.0 - f).collect();
    let vol = fe.volumes();
    Ok(ScatteringSolution {
        residual_sup: nodal_residual(&free, &out.x, &rhs, &vol[..n - 1]),
        grid: Discretization::Radial { nodes: fe.nodes, d },
        b_value: b_r,
        f_values: f,
        omega_values: omega,
        truncation_r: Some(domain_r),
        route: Route::Variational,
        iterations: out.iterations,
        b_flux: None,
    })
}

fn solve_variational_box(
    v: &PotentialSpec,
    domain_r: f64,
    h: f64,
    opts: &ScatteringOptions,
) -> Result<ScatteringSolution> {
    let d = v.dimension;
    let half = ((domain_r / h) - 1e-9).ceil() as usize;
    let grid = BoxGrid::symmetric(
        &vec![half; d],
        &vec![half as f64 * h; d],
        &vec![2.0; d],
        vec![LowerFace::Dirichlet; d],
    );
    let r2 = domain_r * domain_r;
    let inside = move |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>() < r2;
    let op = BoxOperator::new(grid, &|x: &[f64]| v.eval(x), Some(&inside), opts.mem_cap)?;
    let sol = solve_box(&op, opts.cg())?;
    let f: Vec<f64> = sol.phi.iter().map(|w| 1.0 - w).collect();
    check_field(&f)?;
    Ok(ScatteringSolution {
        grid: Discretization::Cartesian {
            grid: op.grid.clone(),
        },
        b_value: sol.energy,
        f_values: f,
        omega_values: sol.phi,
        truncation_r: Some(domain_r),
        residual_sup: sol.residual_sup,
        route: Route::Variational,
        iterations: sol.iterations,
        b_flux: None,
    })
}

/// b = ∫ v f by quadrature of the interpolated solution.
pub fn integral_energy(sol: &ScatteringSolution, v: &PotentialSpec) -> Result<f64> {
    match &sol.grid {
        Discretization::Radial { nodes, d } => {
            if *d != v.dimension {
                return precondition("solution and potential have different dimensions");
            }
            let g = v.radial_profile().ok_or_else(|| {
                Error::Precondition("radial solution needs a radial potential".into())
            })?;
            let fe = RadialFe::new(nodes.clone(), *d);
            Ok(fe.integrate(&sol.f_values, &|r| g.eval(r)))
        }
        Discretization::Cartesian { grid } => {
            if grid.dim() != v.dimension {
                return precondition("solution and potential have different dimensions");
            }
            let w = grid.cell_volume();
            let mut x = vec![0.0; grid.dim()];
            let mut total = 0.0;
            for (p, f) in sol.f_values.iter().enumerate() {
                grid.center(p, &mut x);
                total += w * v.eval(&x) * f;
            }
            Ok(grid.multiplicity() * total)
        }
    }
}

/// b(v) for radial v from the exterior-exact radial route at h and h/2.
pub fn radial_estimate(
    profile: &Profile,
    d: usize,
    opts: &ScatteringOptions,
) -> Result<(Estimate, ScatteringSolution)> {
    let r0 = profile.support_radius();
    let h = r0 / opts.cells_per_range as f64;
    let coarse = solve_radial(profile, d, r0, h)?;
    let fine = solve_radial(profile, d, r0, 0.5 * h)?;
    let (value, err) = richardson(coarse.b_value, fine.b_value);
    Ok((
        Estimate {
            value,
            uncertainty: err,
            route: Route::Radial,
            truncation_radii: vec![],
            h,
            residual_sup: fine.residual_sup,
            extrapolation: None,
        },
        fine,
    ))
}

/// b_R at the configured radii (each Richardson-refined), extrapolated to R = ∞.
pub fn variational_estimate(v: &PotentialSpec, opts: &ScatteringOptions) -> Result<Estimate> {
    if v.is_zero() {
        return Ok(Estimate {
            value: 0.0,
            uncertainty: 0.0,
            route: Route::Variational,
            truncation_radii: vec![],
            h: 0.0,
            residual_sup: 0.0,
            extrapolation: None,
        });
    }
    let r0 = v.range_r0;
    let h = r0 / opts.cells_per_range as f64;
    let radial = v.radial_profile().is_some();
    let mut pairs = Vec::new();
    let mut grid_err: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for &k in &opts.radii {
        let r = k * r0;
        let (b, e, res) = if radial {
            let c = solve_variational(v, r, h, opts)?;
            let f = solve_variational(v, r, 0.5 * h, opts)?;
            let (b, e) = richardson(c.b_value, f.b_value);
            (b, e, f.residual_sup)
        } else {
            let c = solve_variational(v, r, 2.0 * h, opts)?;
            let f = solve_variational(v, r, h, opts)?;
            (f.b_value, (f.b_value - c.b_value).abs(), f.residual_sup)
        };
        grid_err = grid_err.max(e);
        residual = residual.max(res);
        pairs.push((r, b));
    }
    let fit = extrapolate_to_infinity(&pairs, v.dimension, opts.form)?;
    Ok(Estimate {
        value: fit.b,
        uncertainty: fit.uncertainty + grid_err,
        route: Route::Variational,
        truncation_radii: pairs.iter().map(|p| p.0).collect(),
        h,
        residual_sup: residual,
        extrapolation: Some(fit),
    })
}

/// Options for the Cartesian minimization of the modified form on a box.
#[derive(Debug, Clone, Serialize)]
pub struct ModifiedBoxOptions {
    /// Cells per half axis.
    pub half_cells: usize,
    /// Half side of the box in the metric-free coordinates y = M⁻¹x.
    pub half_extent: f64,
    pub symmetry: BoxSymmetry,
    pub mem_cap: u64,
}

/// Reflection symmetries used to shrink the stored box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxSymmetry {
    /// Only the exchange x₂ ↔ x₃, valid for every symmetric V.
    Exchange,
    /// Reflections of each spatial axis applied to all particles.
    SpatialReflections,
    /// Independent sign flips of every coordinate (V radial in the metric).
    AllCoordinates,
}

/// Minimizes ∫ 2|M∇φ|² + V|1−φ|² dx directly on a Dirichlet box in the
/// eigenbasis s = (u+v)/√2, t = (u−v)/√2 of the metric, where the kinetic
/// form reads 3|∇_s φ|² + |∇_t φ|². Returns the full-box energy, an upper
/// bound approximating b_M(V) from above.
pub fn modified_box_energy(
    v: &PotentialSpec,
    opts: &ModifiedBoxOptions,
    cg: CgOptions,
) -> Result<cartesian::BoxSolution> {
    if v.dimension != 6 {
        return precondition("the modified form lives on ℝ⁶");
    }
    let (lam_lo, lam_hi) = (0.5f64.sqrt(), 1.5f64.sqrt());
    let n = opts.half_cells;
    let l = opts.half_extent;
    let extents = [
        lam_hi * l,
        lam_hi * l,
        lam_hi * l,
        lam_lo * l,
        lam_lo * l,
        lam_lo * l,
    ];
    let coeff = [3.0, 3.0, 3.0, 1.0, 1.0, 1.0];
    let faces = match opts.symmetry {
        BoxSymmetry::Exchange => {
            let mut f = vec![LowerFace::Dirichlet; 6];
            f[3] = LowerFace::Mirror { flips: vec![4, 5] };
            f
        }
        BoxSymmetry::SpatialReflections => {
            let mut f = vec![LowerFace::Dirichlet; 6];
            for c in 0..3 {
                f[c] = LowerFace::Mirror { flips: vec![c + 3] };
            }
            f
        }
        BoxSymmetry::AllCoordinates => vec![LowerFace::Mirror { flips: vec![] }; 6],
    };
    let grid = BoxGrid::symmetric(&[n; 6], &extents, &coeff, faces);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let pot = |st: &[f64]| {
        let mut x = [0.0; 6];
        for c in 0..3 {
            x[c] = r * (st[c] + st[c + 3]);
            x[c + 3] = r * (st[c] - st[c + 3]);
        }
        v.eval(&x)
    };
    let op = BoxOperator::new(grid, &pot, None, opts.mem_cap)?;
    solve_box(&op, cg)
}

/// b_M(V) = det M · b(V(M·)).
///
/// Uses the radial route when the pullback is radial and the direct box
/// minimization otherwise (with the box energy reported as an upper estimate).
pub fn modified_scattering_energy(
    v: &PotentialSpec,
    opts: &ScatteringOptions,
) -> Result<(Estimate, ScatteringSolution)> {
    if !v.symmetry_flag {
        return precondition("potential has not been certified three-body symmetric");
    }
    if v.dimension % 2 != 0 {
        return precondition("three-body potentials live on ℝ^{2k}");
    }
    let m = metric_matrix().with_factor_dim(v.dimension / 2);
    if v.is_zero() {
        let sol = solve_radial(
            &Profile::Wall {
                height: 0.0,
                radius: 1.0,
            },
            v.dimension,
            1.0,
            1.0 / 16.0,
        )?;
        return Ok((
            Estimate {
                value: 0.0,
                uncertainty: 0.0,
                route: Route::Radial,
                truncation_radii: vec![],
                h: 0.0,
                residual_sup: 0.0,
                extrapolation: None,
            },
            sol,
        ));
    }
    let pulled = pullback_by_metric(v, &m)?;
    if let Some(g) = pulled.radial_profile() {
        let (mut est, sol) = radial_estimate(&g, v.dimension, opts)?;
        est.value *= m.det_m;
        est.uncertainty *= m.det_m;
        return Ok((est, sol));
    }
    let symmetry = match v.kind {
        crate::potentials::PotentialKind::PairProduct(_) => BoxSymmetry::SpatialReflections,
        _ => BoxSymmetry::Exchange,
    };
    let half_extent = 1.5 * pulled.range_r0;
    let half_cells = 8;
    let box_opts = ModifiedBoxOptions {
        half_cells,
        half_extent,
        symmetry,
        mem_cap: opts.mem_cap,
    };
    let coarse = modified_box_energy(
        v,
        &ModifiedBoxOptions {
            half_cells: 6,
            ..box_opts.clone()
        },
        opts.cg(),
    )?;
    let fine = modified_box_energy(v, &box_opts, opts.cg())?;
    let est = Estimate {
        value: fine.energy,
        uncertainty: (fine.energy - coarse.energy).abs(),
        route: Route::Variational,
        truncation_radii: vec![half_extent],
        h: half_extent / half_cells as f64,
        residual_sup: fine.residual_sup,
        extrapolation: None,
    };
    let f: Vec<f64> = fine.phi.iter().map(|w| 1.0 - w).collect();
    let sol = ScatteringSolution {
        grid: Discretization::Cartesian {
            grid: fine.grid.clone(),
        },
        f_values: f,
        omega_values: fine.phi,
        b_value: fine.energy,
        truncation_r: Some(half_extent),
        residual_sup: fine.residual_sup,
        route: Route::Variational,
        iterations: fine.iterations,
        b_flux: None,
    };
    Ok((est, sol))
}

/// Hard-sphere limit of b for walls of radius a and heights base·4^k, k < 3.
///
/// The grid is refined with the wall's decay rate κ = √(V0/2) and the three
/// values are extrapolated to κ = ∞ by a quadratic in 1/κ.
pub fn steep_wall_continuation(
    d: usize,
    a: f64,
    base_height: f64,
    opts: &ScatteringOptions,
) -> Result<Estimate> {
    if !(a > 0.0 && base_height > 0.0) {
        return precondition("wall radius and height must be positive");
    }
    let mut pts = Vec::new();
    let mut residual: f64 = 0.0;
    let mut grid_err: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    for k in 0..3 {
        let height = base_height * 4f64.powi(k);
        let g = Profile::Wall { height, radius: a };
        let o = ScatteringOptions {
            cells_per_range: opts.cells_per_range << k,
            ..opts.clone()
        };
        let (est, _) = radial_estimate(&g, d, &o)?;
        residual = residual.max(est.residual_sup);
        grid_err = grid_err.max(est.uncertainty);
        h_min = h_min.min(est.h);
        pts.push((1.0 / ((0.5 * height).sqrt() * a), est.value));
    }
    let quad = lagrange_at_zero(&pts);
    let lin = lagrange_at_zero(&pts[1..]);
    Ok(Estimate {
        value: quad,
        uncertainty: (quad - lin).abs() + grid_err,
        route: Route::Radial,
        truncation_radii: vec![],
        h: h_min,
        residual_sup: residual,
        extrapolation: None,
    })
}

fn lagrange_at_zero(pts: &[(f64, f64)]) -> f64 {
    pts.iter()
        .enumerate()
        .map(|(i, (xi, yi))| {
            let w: f64 = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (xj, _))| xj / (xj - xi))
                .product();
            w * yi
        })
        .sum()
}

/// 2(d−2)|S^{d−1}| a^{d−2}, the hard-sphere scattering energy.
pub fn hard_sphere_energy(d: usize, a: f64) -> f64 {
    2.0 * (d as f64 - 2.0) * crate::quadrature::sphere_area(d) * a.powi(d as i32 - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_potential_gives_zero() {
        let g = Profile::Wall {
            height: 0.0,
            radius: 1.0,
        };
        let s = solve_radial(&g, 3, 2.0, 0.05).unwrap();
        assert_eq!(s.b_value, 0.0);
        assert!(s.f_values.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn flux_equals_integral_route() {
        let g = Profile::Tent {
            height: 30.0,
            radius: 1.0,
        };
        let s = solve_radial(&g, 3, 1.0, 1e-3).unwrap();
        let flux = s.b_flux.unwrap();
        assert!((flux - s.b_value).abs() < 1e-10 * s.b_value);
        assert!(s.b_value < g.l1_norm(3));
    }

    #[test]
    fn exterior_is_exact() {
        // b does not depend on where the Robin condition is imposed
        let g = Profile::SmoothBump {
            height: 8.0,
            radius: 1.0,
        };
        let a = solve_radial(&g, 6, 1.0, 1e-3).unwrap().b_value;
        let b = solve_radial(&g, 6, 3.0, 1e-3).unwrap().b_value;
        assert!((a - b).abs() < 1e-5 * a, "{a} vs {b}");
    }

    #[test]
    fn truncated_energy_matches_exterior_identity() {
        let g = Profile::Wall {
            height: 50.0,
            radius: 1.0,
        };
        let d = 3;
        let v = PotentialSpec::radial(g.clone(), d).unwrap();
        let b = solve_radial(&g, d, 1.0, 2e-3).unwrap().b_value;
        let r = 4.0;
        let br = solve_variational(&v, r, 2e-3, &ScatteringOptions::default())
            .unwrap()
            .b_value;
        let kappa = 1.0 / (2.0 * (d as f64 - 2.0) * 4.0 * PI);
        let predicted = 1.0 / (1.0 / b - kappa / r);
        assert!((br - predicted).abs() < 2e-4 * br, "{br} vs {predicted}");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = Profile::Wall {
            height: 1.0,
            radius: 1.0,
        };
        assert!(matches!(
            solve_radial(&g, 3, 1.0, 0.2),
            Err(Error::GridTooCoarse(_))
        ));
    }
}
