//! Temple-inequality lower bound on small Neumann boxes and the assembly of
//! box energies into a bound on the energy per volume.

mod assembly;
mod statistics;
mod temple;

pub use assembly::{assemble_thermo_lower, leading_table, lower_hull, ThermoLower};
pub use statistics::{
    box_statistics, BoxStatistics, ClusteredSampler, EqualFill, OccupancySampler, UniformPlacement,
};
pub use temple::{
    expectation_wu, temple_box_bound, temple_lower_bound, BoxGeometry, ErrorTerm, GapModel,
    TempleOptions, TempleParameters, TempleReport, WuEstimate,
};

use serde::Serialize;

/// Result of checking 1/3 < α < 3/5 and α − 1/3 < β < (7α − 1)/12.
#[derive(Debug, Clone, Serialize)]
pub struct WindowCheck {
    pub valid: bool,
    pub beta_window: (f64, f64),
    pub violations: Vec<String>,
}

pub fn validate_window(alpha: f64, beta: f64) -> WindowCheck {
    let mut violations = Vec::new();
    if !(alpha > 1.0 / 3.0) {
        violations.push(format!("α = {alpha} must exceed 1/3"));
    }
    if !(alpha < 0.6) {
        violations.push(format!("α = {alpha} must be below 3/5"));
    }
    let lo = alpha - 1.0 / 3.0;
    let hi = (7.0 * alpha - 1.0) / 12.0;
    if !(beta > lo) {
        violations.push(format!("β = {beta} must exceed α − 1/3 = {lo}"));
    }
    if !(beta < hi) {
        violations.push(format!("β = {beta} must be below (7α − 1)/12 = {hi}"));
    }
    WindowCheck {
        valid: violations.is_empty(),
        beta_window: (lo, hi),
        violations,
    }
}

/// The six exponents whose minimum is the achieved error exponent.
pub fn exponent_terms(alpha: f64, beta: f64) -> [f64; 6] {
    [
        1.0 - 3.0 * (alpha - beta),
        beta,
        alpha - beta,
        (7.0 * alpha - 12.0 * beta - 1.0) / 2.0,
        3.0 * alpha - 1.0,
        3.0 * (1.0 - alpha),
    ]
}

pub fn nu(alpha: f64, beta: f64) -> f64 {
    exponent_terms(alpha, beta)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentOptimum {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    /// Best grid point.
    pub grid_alpha: f64,
    pub grid_beta: f64,
    pub grid_nu: f64,
    pub resolution: usize,
}

/// Maximizes ν over the admissible window by a grid search refined with
/// exact enumeration of the vertices where three exponents coincide.
pub fn optimize_exponent() -> ExponentOptimum {
    optimize_exponent_with(400)
}

pub fn optimize_exponent_with(resolution: usize) -> ExponentOptimum {
    let (a_lo, a_hi) = (1.0 / 3.0, 0.6);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 1..resolution {
        let alpha = a_lo + (a_hi - a_lo) * i as f64 / resolution as f64;
        let (b_lo, b_hi) = (alpha - 1.0 / 3.0, (7.0 * alpha - 1.0) / 12.0);
        for j in 1..resolution {
            let beta = b_lo + (b_hi - b_lo) * j as f64 / resolution as f64;
            let v = nu(alpha, beta);
            if v > best.0 {
                best = (v, alpha, beta);
            }
        }
    }
    // each exponent is c0 + c1 α + c2 β
    let coeffs = [
        [1.0, -3.0, 3.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, -1.0],
        [-0.5, 3.5, -6.0],
        [-1.0, 3.0, 0.0],
        [3.0, -3.0, 0.0],
    ];
    let mut vertex = (best.0, best.1, best.2);
    for p in 0..6 {
        for q in p + 1..6 {
            for r in q + 1..6 {
                // c0 + c1 α + c2 β − ν = 0 for the three chosen exponents
                let m = nalgebra::Matrix3::new(
                    coeffs[p][1],
                    coeffs[p][2],
                    -1.0,
                    coeffs[q][1],
                    coeffs[q][2],
                    -1.0,
                    coeffs[r][1],
                    coeffs[r][2],
                    -1.0,
                );
                let rhs = nalgebra::Vector3::new(-coeffs[p][0], -coeffs[q][0], -coeffs[r][0]);
                let Some(sol) = m.lu().solve(&rhs) else {
                    continue;
                };
                let (alpha, beta) = (sol[0], sol[1]);
                let w = validate_window(alpha, beta);
                let (lo, hi) = w.beta_window;
                let inside = alpha >= a_lo - 1e-12
                    && alpha <= a_hi + 1e-12
                    && beta >= lo - 1e-12
                    && beta <= hi + 1e-12;
                if inside {
                    let v = nu(alpha, beta);
                    if v > vertex.0 + 1e-14 {
                        vertex = (v, alpha, beta);
                    }
                }
            }
        }
    }
    ExponentOptimum {
        alpha: vertex.1,
        beta: vertex.2,
        nu: vertex.0,
        grid_alpha: best.1,
        grid_beta: best.2,
        grid_nu: best.0,
        resolution,
    }
}
