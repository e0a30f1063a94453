//! Upper-bound machinery: cutoff trial profile, the per-particle bound on a
//! Dirichlet box, the K/n/ℓ parametrization and the product-state assembly.

mod cutoff;

pub use cutoff::{build_cutoff, default_cells, profile_1d, CutoffProfile, MAX_EPSILON};

use serde::Serialize;

use crate::error::{precondition, Result};
use crate::potentials::PotentialSpec;

/// The data of a potential the bounds depend on.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PotentialNorms {
    pub b_m: f64,
    pub l1_norm: f64,
    pub sup_norm: f64,
    pub range_r0: f64,
}

impl PotentialNorms {
    pub fn from_spec(v: &PotentialSpec, b_m: f64) -> Self {
        Self {
            b_m,
            l1_norm: v.l1_norm,
            sup_norm: v.sup_norm,
            range_r0: v.range_r0,
        }
    }

    fn is_zero(&self) -> bool {
        self.b_m == 0.0 && self.l1_norm == 0.0 && self.sup_norm == 0.0
    }
}

/// Constants of the upper bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpperConstants {
    /// C in the leading correction (1/6)b(1 + C b^{−1/2}).
    pub c_lead: f64,
    /// C in the n^{−1/3} remainder.
    pub c_rem: f64,
}

impl Default for UpperConstants {
    fn default() -> Self {
        Self {
            c_lead: measured_lead_constant(),
            c_rem: 1.0,
        }
    }
}

/// b values used to calibrate the leading constant.
pub const CALIBRATION_B: [f64; 7] = [5.0, 10.0, 30.0, 100.0, 300.0, 1e3, 1e4];

/// ε = b^{−1/2}, clamped to the largest admissible profile.
pub fn optimal_epsilon(b_m: f64) -> f64 {
    if b_m > 0.0 {
        b_m.powf(-0.5).min(MAX_EPSILON)
    } else {
        MAX_EPSILON
    }
}

/// Largest value of 6(‖∇φ‖² + (1/6)b(∫φ⁶ − 1))/√b over the calibration set,
/// with φ the cutoff at ε = b^{−1/2}.
pub fn measured_lead_constant() -> f64 {
    CALIBRATION_B
        .iter()
        .map(|&b| {
            let eps = optimal_epsilon(b);
            let p = build_cutoff(eps, default_cells(eps)).expect("calibration profile");
            lead_constant(&p, b)
        })
        .fold(0.0, f64::max)
}

fn lead_constant(p: &CutoffProfile, b: f64) -> f64 {
    6.0 * (p.grad_sq + b / 6.0 * (p.l6_pow6 - 1.0)) / b.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletBound {
    pub n: usize,
    pub w: PotentialNorms,
    pub epsilon: f64,
    pub profile: CutoffProfile,
    /// ‖∇φ‖².
    pub kinetic: f64,
    /// (1/6)b_M(W)∫φ⁶.
    pub interaction: f64,
    /// C·n^{−1/3}(b+1)³‖φ‖_{H²}⁶(1 + ‖W‖₁ + ‖W‖_∞)²; zero for W ≡ 0.
    pub remainder: f64,
    /// Kinetic + interaction + remainder.
    pub intermediate: f64,
    /// (1/6)b(1 + C_lead b^{−1/2}) + C_rem n^{−1/3}(b+1)¹²(1 + ‖W‖₁ + ‖W‖_∞)².
    pub lemma: f64,
    /// Leading constant this profile alone requires at this b.
    pub c_lead_here: f64,
    pub constants: UpperConstants,
}

/// Per-particle energy bound for n bosons in the unit Dirichlet box.
pub fn dirichlet_box_bound(
    n: usize,
    w: &PotentialNorms,
    constants: &UpperConstants,
) -> Result<DirichletBound> {
    if n == 0 {
        return precondition("the box needs at least one particle");
    }
    if !(w.b_m >= 0.0 && w.l1_norm >= 0.0 && w.sup_norm >= 0.0) {
        return precondition("b_M(W) and the norms of W must be non-negative");
    }
    let epsilon = optimal_epsilon(w.b_m);
    let profile = build_cutoff(epsilon, default_cells(epsilon))?;
    let b = w.b_m;
    let nf = n as f64;
    let size = (1.0 + w.l1_norm + w.sup_norm).powi(2);
    let kinetic = profile.grad_sq;
    let interaction = b / 6.0 * profile.l6_pow6;
    let remainder = if w.is_zero() {
        0.0
    } else {
        constants.c_rem * nf.powf(-1.0 / 3.0) * (b + 1.0).powi(3) * profile.h2_norm.powi(6) * size
    };
    let lead = b / 6.0 + constants.c_lead / 6.0 * b.sqrt();
    let lemma = lead + constants.c_rem * nf.powf(-1.0 / 3.0) * (b + 1.0).powi(12) * size;
    Ok(DirichletBound {
        n,
        w: *w,
        epsilon,
        c_lead_here: if b > 0.0 {
            lead_constant(&profile, b)
        } else {
            0.0
        },
        profile,
        kinetic,
        interaction,
        remainder,
        intermediate: kinetic + interaction + remainder,
        lemma,
        constants: *constants,
    })
}

/// Largest α for which every error exponent stays positive.
pub const ALPHA_MAX: f64 = 2.0 / 75.0;

/// Displayed error exponents {α, 2/3 − 25α, 2 − 3α}.
pub fn upper_exponents(alpha: f64) -> [f64; 3] {
    [alpha, 2.0 / 3.0 - 25.0 * alpha, 2.0 - 3.0 * alpha]
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperParameters {
    pub rho: f64,
    pub b_m: f64,
    pub alpha: f64,
    pub y: f64,
    pub a: f64,
    pub k: f64,
    /// ⌊K³Y⁻²⌋, kept as a float since it exceeds usize at small Y.
    pub n: f64,
    pub ell: f64,
    pub box_gap: f64,
}

impl UpperParameters {
    pub fn new(rho: f64, b_m: f64, alpha: f64, range_r0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < ALPHA_MAX) {
            return precondition(format!("α = {alpha} must lie in (0, 2/75)"));
        }
        if !(rho > 0.0 && b_m > 0.0 && range_r0 >= 0.0) {
            return precondition("ρ and b_M must be positive and R₀ non-negative");
        }
        let a = b_m.powf(0.25);
        let y = rho * a.powi(3);
        if !(y < 1.0) {
            return precondition(format!("Y = {y} is not dilute (Y < 1 required)"));
        }
        let k = y.powf(-alpha);
        let n = (k.powi(3) * y.powi(-2)).floor();
        if n < 1.0 {
            return precondition("n = ⌊K³Y⁻²⌋ vanishes");
        }
        let ell = a * n.sqrt() / k.sqrt();
        Ok(Self {
            rho,
            b_m,
            alpha,
            y,
            a,
            k,
            n,
            ell,
            box_gap: 2.0 * range_r0,
        })
    }

    /// |n/ℓ³ − ρ|/ρ.
    pub fn density_error(&self) -> f64 {
        (self.n / self.ell.powi(3) - self.rho).abs() / self.rho
    }

    /// b_M, ‖·‖₁ and ‖·‖_∞ of W = (a²/K)V(a K^{−1/2}·).
    pub fn scaled_norms(&self, v: &PotentialNorms) -> PotentialNorms {
        PotentialNorms {
            b_m: self.k * self.k,
            l1_norm: self.k * self.k * self.a.powi(-4) * v.l1_norm,
            sup_norm: self.a * self.a / self.k * v.sup_norm,
            range_r0: v.range_r0 * self.k.sqrt() / self.a,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermoUpper {
    pub params: UpperParameters,
    /// (1 + 2R₀/ℓ)^{−3}.
    pub packing_factor: f64,
    pub w: PotentialNorms,
    pub e_upper: f64,
    /// (1/6)ρ³b_M.
    pub leading: f64,
    pub exponents: [f64; 3],
    /// Y^α, Y^{2/3−25α}, Y^{2−3α}.
    pub error_powers: [f64; 3],
    /// (e_upper/leading − 1)/Σ error powers.
    pub c_v: f64,
    pub constants: UpperConstants,
    pub route: &'static str,
}

/// Energy per volume of the product of Dirichlet box trial states.
pub fn assemble_thermo_upper(
    params: &UpperParameters,
    v: &PotentialNorms,
    constants: &UpperConstants,
) -> Result<ThermoUpper> {
    if (v.b_m - params.b_m).abs() > 1e-12 * params.b_m {
        return precondition("potential data and parameters carry different b_M");
    }
    let w = params.scaled_norms(v);
    let packing_factor = (1.0 + v.range_r0 / params.ell * 2.0).powi(-3);
    let k = params.k;
    let n = params.n;
    let bracket = constants.c_rem
        * n.powf(-1.0 / 3.0)
        * (k * k + 1.0).powi(12)
        * (1.0 + w.l1_norm + w.sup_norm).powi(2)
        + k * k / 6.0
        + constants.c_lead / 6.0 * k;
    let e_upper = packing_factor * n / params.ell.powi(3) / params.ell.powi(2) * bracket;
    let leading = params.rho.powi(3) * params.b_m / 6.0;
    let exponents = upper_exponents(params.alpha);
    let error_powers = exponents.map(|e| params.y.powf(e));
    let c_v = (e_upper / leading - 1.0) / error_powers.iter().sum::<f64>();
    Ok(ThermoUpper {
        params: params.clone(),
        packing_factor,
        w,
        e_upper,
        leading,
        exponents,
        error_powers,
        c_v,
        constants: *constants,
        route: "analytic",
    })
}

/// Σ_z E_z/(M(ℓ + 2R₀))³ for M³ boxes separated by 2R₀.
pub fn product_state_energy(
    box_energies: &[f64],
    ell: f64,
    range_r0: f64,
    m_side: usize,
) -> Result<f64> {
    product_state_energy_with_gap(box_energies, ell, range_r0, 2.0 * range_r0, m_side)
}

/// As `product_state_energy` with an explicit gap, which must exceed the range
/// of V so that no triple with support in two boxes interacts.
pub fn product_state_energy_with_gap(
    box_energies: &[f64],
    ell: f64,
    range_r0: f64,
    gap: f64,
    m_side: usize,
) -> Result<f64> {
    if m_side == 0 || box_energies.len() != m_side.pow(3) {
        return precondition(format!(
            "{} box energies for M = {m_side}",
            box_energies.len()
        ));
    }
    if !(ell > 0.0) {
        return precondition("box side must be positive");
    }
    if !(gap > range_r0) {
        return precondition(format!(
            "gap {gap} does not exceed the interaction range {range_r0}"
        ));
    }
    let total: f64 = box_energies.iter().sum();
    Ok(total / (m_side as f64 * (ell + gap)).powi(3))
}
