use std::f64::consts::PI;

use serde::Serialize;

use crate::dyson::{check_hypotheses, HypothesisCheck};
use crate::error::{precondition, Result};
use crate::quadrature::annulus_volume;

use super::validate_window;

/// How the kinetic gap of the unit Neumann box is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GapModel {
    /// π², the first nonzero Neumann eigenvalue of −Δ on the unit cube.
    Continuum,
    /// (2 − 2cos(π/s))·s², the same eigenvalue for the s-site lattice Laplacian.
    Discrete { sites: usize },
}

impl GapModel {
    pub fn unit_gap(&self) -> f64 {
        match *self {
            GapModel::Continuum => PI * PI,
            GapModel::Discrete { sites } => {
                let s = sites as f64;
                (2.0 - 2.0 * (PI / s).cos()) * s * s
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TempleOptions {
    /// Prefactor of the asymptotic error display.
    pub c_err: f64,
    /// Constant in the Dyson factor 1 − C·R₀/R.
    pub c_dyson: f64,
    /// Volume constant of the centroid exclusion ball |B(2R)| = c_theta·R³.
    pub c_theta: f64,
    /// Annulus of U in units of R.
    pub u_r1: f64,
    pub u_r2: f64,
    pub gap: GapModel,
    /// Physical range of V; a = b_M^{1/4} when absent.
    pub range_r0: Option<f64>,
}

impl Default for TempleOptions {
    fn default() -> Self {
        Self {
            c_err: 1.0,
            c_dyson: 1.0,
            c_theta: 32.0 * PI / 3.0,
            u_r1: 0.25,
            u_r2: 1.0,
            gap: GapModel::Continuum,
            range_r0: None,
        }
    }
}

/// Inputs of the short-scale bound and the lengths derived from them.
#[derive(Debug, Clone, Serialize)]
pub struct TempleParameters {
    pub rho: f64,
    pub b_m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub y: f64,
    pub a: f64,
    pub ell: f64,
    pub r: f64,
    pub eta: f64,
    pub n_max: f64,
    pub ell_gp: f64,
}

impl TempleParameters {
    /// ε defaults to Y^{(7α−12β−1)/2}.
    pub fn new(rho: f64, b_m: f64, alpha: f64, beta: f64, epsilon: Option<f64>) -> Result<Self> {
        if !(rho > 0.0 && b_m > 0.0) {
            return precondition("ρ and b_M must be positive");
        }
        let y = rho * b_m.powf(0.75);
        if !(y < 1.0) {
            return precondition(format!("Y = {y} is not dilute (Y < 1 required)"));
        }
        let a = b_m.powf(0.25);
        let ell = a * y.powf(-alpha);
        let r = y.powf(beta);
        let epsilon = epsilon.unwrap_or_else(|| y.powf((7.0 * alpha - 12.0 * beta - 1.0) / 2.0));
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return precondition(format!("ε = {epsilon} must lie in (0, 1)"));
        }
        Ok(Self {
            rho,
            b_m,
            alpha,
            beta,
            epsilon,
            y,
            a,
            ell,
            r,
            eta: 2.0 * r,
            n_max: 10.0 * rho * ell.powi(3),
            ell_gp: a / (rho * a.powi(3)),
        })
    }
}

/// One box of side ℓ with n particles, in the unit-box scaling.
#[derive(Debug, Clone, Serialize)]
pub struct BoxGeometry {
    pub b_m: f64,
    pub ell: f64,
    pub n: usize,
    /// Physical range of V.
    pub r0: f64,
    /// Scale of U in the unit box.
    pub r: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub u_r1: f64,
    pub u_r2: f64,
}

/// Bounds on ⟨Ψ₀, W_U Ψ₀⟩ for Ψ₀ ≡ 1 on the unit box.
#[derive(Debug, Clone, Serialize)]
pub struct WuEstimate {
    /// b_M/(6ℓ⁴)·n(n−1)(n−2).
    pub leading: f64,
    pub lower: f64,
    pub upper: f64,
    /// Pointwise bound on W_U.
    pub sup: f64,
    /// Y^{3−5α}, present when the box comes from asymptotic parameters.
    pub scale_free_upper: Option<f64>,
}

fn wu_moments(g: &BoxGeometry, opts: &TempleOptions) -> WuEstimate {
    let n = g.n as f64;
    let leading = g.b_m / (6.0 * g.ell.powi(4)) * n * (n - 1.0) * (n - 2.0);
    let dyson = (1.0 - opts.c_dyson * (g.r0 / g.ell) / g.r).max(0.0);
    // x_i ranges over Λ_η and must keep the support of U_R inside the box
    let inner = (1.0 - g.eta).min(1.0 - 2.0 * g.u_r2 * g.r).max(0.0);
    let exclusion = (1.0 - (n - 3.0).max(0.0) * opts.c_theta * g.r.powi(3)).max(0.0);
    let upper = leading * dyson;
    let lower = upper * inner.powi(3) * exclusion;
    // per i at most the pair {j, k} survives the centroid exclusion when 5R₂/3 < 2
    let pairs = if 5.0 * g.u_r2 / 3.0 < 2.0 {
        2.0
    } else {
        (n - 1.0) * (n - 2.0)
    };
    let u_sup = 1.0 / annulus_volume(6, g.u_r1, g.u_r2) * g.r.powi(-6);
    let sup = g.b_m / (6.0 * g.ell.powi(4)) * dyson * n * pairs * u_sup;
    WuEstimate {
        leading,
        lower,
        upper,
        sup,
        scale_free_upper: None,
    }
}

pub fn expectation_wu(
    params: &TempleParameters,
    n: usize,
    opts: &TempleOptions,
) -> Result<WuEstimate> {
    if n as f64 > params.n_max {
        return precondition(format!("n = {n} exceeds 10ρℓ³ = {}", params.n_max));
    }
    let g = geometry(params, n, opts);
    let mut w = wu_moments(&g, opts);
    w.scale_free_upper = Some(params.y.powf(3.0 - 5.0 * params.alpha));
    Ok(w)
}

fn geometry(params: &TempleParameters, n: usize, opts: &TempleOptions) -> BoxGeometry {
    BoxGeometry {
        b_m: params.b_m,
        ell: params.ell,
        n,
        r0: opts.range_r0.unwrap_or(params.a),
        r: params.r,
        eta: params.eta,
        epsilon: params.epsilon,
        u_r1: opts.u_r1,
        u_r2: opts.u_r2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorTerm {
    pub name: &'static str,
    pub exponent: f64,
    pub value: f64,
}

/// All terms of the short-scale lower bound; energies in the unit-box scaling.
#[derive(Debug, Clone, Serialize)]
pub struct TempleReport {
    pub params: Option<TempleParameters>,
    pub geometry: BoxGeometry,
    pub expectation_wu: f64,
    pub expectation_wu_upper: f64,
    pub variance_wu: f64,
    /// ε times the gap of the configured model.
    pub gap: f64,
    pub gap_continuum: f64,
    /// ε·π, the gap as printed in the source of the estimate.
    pub gap_as_written: f64,
    pub temple_correction: f64,
    pub leading_term: f64,
    pub error_terms: Vec<ErrorTerm>,
    /// C_err·ρ³b_Mℓ⁵·Σ error terms.
    pub analytic_correction: Option<f64>,
    /// (C_err, leading − correction) for C_err ∈ {1, 10, 100}.
    pub sensitivity: Vec<(f64, f64)>,
    pub nu: Option<f64>,
    pub cond_temple: bool,
    pub hypotheses: HypothesisCheck,
    pub valid: bool,
    /// Numerical Temple bound; absent whenever the report is invalid.
    pub lower_bound: Option<f64>,
    /// Leading term minus the analytic correction.
    pub asymptotic_bound: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Temple bound for an explicit box geometry.
pub fn temple_box_bound(g: &BoxGeometry, opts: &TempleOptions) -> Result<TempleReport> {
    if !(g.epsilon > 0.0 && g.epsilon < 1.0) {
        return precondition("ε must lie in (0, 1)");
    }
    if !(g.r > 0.0 && g.eta > 0.0 && g.ell > 0.0 && g.b_m >= 0.0) {
        return precondition("box lengths must be positive");
    }
    if !(g.u_r2 > 2.0 * g.u_r1 && g.u_r1 > 0.0) {
        return precondition("U needs R₂ > 2R₁ > 0");
    }
    let w = wu_moments(g, opts);
    let hypotheses = check_hypotheses(g.eta, g.r, g.r0, g.u_r1, g.u_r2, g.ell);
    let mut diagnostics = Vec::new();
    if !hypotheses.readings_agree {
        diagnostics
            .push("scaled and unscaled readings of the many-body hypotheses disagree".to_string());
    }
    let unit_gap = opts.gap.unit_gap();
    let gap = g.epsilon * unit_gap;
    let variance = (w.sup * w.upper - w.lower * w.lower).max(0.0);
    let pert = (1.0 - g.epsilon) * w.upper;
    let cond_temple = gap > pert;
    let mut valid = cond_temple && hypotheses.scaled && g.eta < 1.0;
    if !cond_temple {
        diagnostics.push(format!(
            "gap {gap:e} does not exceed the perturbation {pert:e}"
        ));
    }
    if !hypotheses.scaled {
        diagnostics.push("η > R₂R and R₁R > R₀/ℓ are not both satisfied".to_string());
    }
    if g.eta >= 1.0 {
        diagnostics.push("η ≥ 1 leaves Λ_η empty".to_string());
        valid = false;
    }
    let temple_correction = if cond_temple {
        (1.0 - g.epsilon).powi(2) * variance / (gap - pert)
    } else {
        f64::INFINITY
    };
    let lower_bound = valid.then_some((1.0 - g.epsilon) * w.lower - temple_correction);
    Ok(TempleReport {
        params: None,
        geometry: g.clone(),
        expectation_wu: w.lower,
        expectation_wu_upper: w.upper,
        variance_wu: variance,
        gap,
        gap_continuum: g.epsilon * PI * PI,
        gap_as_written: g.epsilon * PI,
        temple_correction,
        leading_term: w.leading,
        error_terms: vec![],
        analytic_correction: None,
        sensitivity: vec![],
        nu: None,
        cond_temple,
        hypotheses,
        valid,
        lower_bound,
        asymptotic_bound: None,
        diagnostics,
    })
}

/// Temple bound at the asymptotic parameters (ρ, α, β, ε) with n particles.
pub fn temple_lower_bound(
    params: &TempleParameters,
    n: usize,
    opts: &TempleOptions,
) -> Result<TempleReport> {
    let w = validate_window(params.alpha, params.beta);
    if !w.valid {
        return precondition(format!(
            "parameter window violated: {}",
            w.violations.join("; ")
        ));
    }
    if n as f64 > params.n_max {
        return precondition(format!("n = {n} exceeds 10ρℓ³ = {}", params.n_max));
    }
    let g = geometry(params, n, opts);
    let mut report = temple_box_bound(&g, opts)?;
    let (y, al, be, eps) = (params.y, params.alpha, params.beta, params.epsilon);
    let ly = y.ln();
    let last = 7.0 * al - 12.0 * be - 1.0;
    report.error_terms = vec![
        ErrorTerm {
            name: "Y^(1-3(alpha-beta))",
            exponent: 1.0 - 3.0 * (al - be),
            value: y.powf(1.0 - 3.0 * (al - be)),
        },
        ErrorTerm {
            name: "Y^beta",
            exponent: be,
            value: y.powf(be),
        },
        ErrorTerm {
            name: "Y^(alpha-beta)",
            exponent: al - be,
            value: y.powf(al - be),
        },
        ErrorTerm {
            name: "epsilon",
            exponent: eps.ln() / ly,
            value: eps,
        },
        ErrorTerm {
            name: "epsilon^-1 Y^(7alpha-12beta-1)",
            exponent: last - eps.ln() / ly,
            value: y.powf(last) / eps,
        },
    ];
    let sum: f64 = report.error_terms.iter().map(|t| t.value).sum();
    let scale = params.rho.powi(3) * params.b_m * params.ell.powi(5);
    let correction = opts.c_err * scale * sum;
    report.analytic_correction = Some(correction);
    report.sensitivity = [1.0, 10.0, 100.0]
        .iter()
        .map(|c| (*c, report.leading_term - c * scale * sum))
        .collect();
    report.nu = Some(
        report
            .error_terms
            .iter()
            .map(|t| t.exponent)
            .fold(f64::INFINITY, f64::min),
    );
    report.asymptotic_bound = report.valid.then_some(report.leading_term - correction);
    report.params = Some(params.clone());
    Ok(report)
}
