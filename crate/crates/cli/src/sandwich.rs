//! Lattice ground state per volume placed between a Temple lower bound on the
//! Neumann box and a Dirichlet product-state upper bound.

use bose3b_core::diag::{
    discrete_scattering_energy, lattice_ground_state, Boundary, DiagOptions,
    DiscreteScatteringOptions, LatticeBox,
};
use bose3b_core::lowerbound::{
    temple_box_bound, BoxGeometry, GapModel, TempleOptions, TempleReport,
};
use bose3b_core::potentials::PotentialSpec;
use bose3b_core::upperbound::{
    assemble_thermo_upper, product_state_energy, PotentialNorms, UpperConstants, UpperParameters,
};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct SandwichOptions {
    pub n: usize,
    pub sites: usize,
    pub spacing: f64,
    pub alpha_upper: f64,
    pub diag: DiagOptions,
    pub scattering: DiscreteScatteringOptions,
    /// Search grid of the Temple bound.
    pub r_grid: Vec<f64>,
    pub u_r1_grid: Vec<f64>,
    /// R₂ as a multiple of 2R₁.
    pub u_r2_factors: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self {
            n: 3,
            sites: 6,
            spacing: 1.0,
            alpha_upper: 1.0 / 75.0,
            diag: DiagOptions::default(),
            scattering: DiscreteScatteringOptions::default(),
            r_grid: (1..=49).map(|i| 0.01 * i as f64).collect(),
            u_r1_grid: vec![0.1, 0.2, 0.25, 0.3, 0.4],
            u_r2_factors: vec![1.01, 1.25, 1.5, 2.0],
            epsilon_grid: (1..=30)
                .map(|i| 10f64.powf(-3.0 + 0.1 * i as f64))
                .filter(|e| *e < 1.0)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerSide {
    /// max over the grid of the Temple bound per volume, or 0 from H ≥ 0.
    pub e_lower: f64,
    pub nontrivial: bool,
    pub candidates: usize,
    pub valid_candidates: usize,
    pub best: Option<TempleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub b_disc: f64,
    pub b_disc_uncertainty: f64,
    pub volume: f64,
    pub e0_neumann: f64,
    pub e0_dirichlet: f64,
    pub density: f64,
    pub lower: LowerSide,
    /// Dirichlet box energy per volume of the box plus a 2R₀ corridor.
    pub e_upper: f64,
    pub analytic_upper: Option<f64>,
    pub lower_le_density: bool,
    pub density_le_upper: bool,
    pub neumann_le_dirichlet: bool,
    pub all: bool,
}

fn lower_side(b: f64, ell: f64, r0: f64, opts: &SandwichOptions) -> Result<LowerSide, CliError> {
    let mut best: Option<TempleReport> = None;
    let mut candidates = 0;
    let mut valid_candidates = 0;
    for &u_r1 in &opts.u_r1_grid {
        for &f in &opts.u_r2_factors {
            let u_r2 = 2.0 * u_r1 * f;
            let topts = TempleOptions {
                gap: GapModel::Discrete { sites: opts.sites },
                u_r1,
                u_r2,
                range_r0: Some(r0),
                ..TempleOptions::default()
            };
            for &r in &opts.r_grid {
                let eta = u_r2 * r * (1.0 + 1e-9);
                if eta >= 1.0 || 2.0 * u_r2 * r >= 1.0 {
                    continue;
                }
                for &epsilon in &opts.epsilon_grid {
                    candidates += 1;
                    let g = BoxGeometry {
                        b_m: b,
                        ell,
                        n: opts.n,
                        r0,
                        r,
                        eta,
                        epsilon,
                        u_r1,
                        u_r2,
                    };
                    let rep = temple_box_bound(&g, &topts)?;
                    let Some(lb) = rep.lower_bound else { continue };
                    valid_candidates += 1;
                    if best
                        .as_ref()
                        .and_then(|x| x.lower_bound)
                        .is_none_or(|x| lb > x)
                    {
                        best = Some(rep);
                    }
                }
            }
        }
    }
    let lb = best.as_ref().and_then(|x| x.lower_bound).unwrap_or(0.0);
    let e_lower = (lb / (ell * ell)).max(0.0) / ell.powi(3);
    Ok(LowerSide {
        e_lower,
        nontrivial: e_lower > 0.0,
        candidates,
        valid_candidates,
        best,
    })
}

pub fn sandwich(v: &PotentialSpec, opts: &SandwichOptions) -> Result<SandwichReport, CliError> {
    let h = opts.spacing;
    let b = discrete_scattering_energy(v, h, &opts.scattering)?;
    let neumann = LatticeBox::new(opts.sites, h, Boundary::Neumann)?;
    let dirichlet = LatticeBox::new(opts.sites, h, Boundary::Dirichlet)?;
    let e_n = lattice_ground_state(&neumann, opts.n, v, &opts.diag)?
        .ground
        .energy;
    let e_d = lattice_ground_state(&dirichlet, opts.n, v, &opts.diag)?
        .ground
        .energy;
    let ell = neumann.side();
    let volume = neumann.volume();
    let density = e_n / volume;
    let lower = lower_side(b.value, ell, v.range_r0, opts)?;
    // the Dirichlet lattice vanishes on the outer layer, a box of side (s + 1)h
    let e_upper = product_state_energy(&[e_d], (opts.sites as f64 + 1.0) * h, v.range_r0, 1)?;
    let rho = opts.n as f64 / volume;
    let analytic_upper = UpperParameters::new(rho, b.value, opts.alpha_upper, v.range_r0)
        .and_then(|p| {
            let w = PotentialNorms::from_spec(v, b.value);
            assemble_thermo_upper(&p, &w, &UpperConstants::default())
        })
        .ok()
        .map(|u| u.e_upper);
    let lower_le_density = lower.e_lower <= density;
    let density_le_upper = density <= e_upper;
    let neumann_le_dirichlet = e_n <= e_d;
    Ok(SandwichReport {
        b_disc: b.value,
        b_disc_uncertainty: b.uncertainty,
        volume,
        e0_neumann: e_n,
        e0_dirichlet: e_d,
        density,
        lower,
        e_upper,
        analytic_upper,
        lower_le_density,
        density_le_upper,
        neumann_le_dirichlet,
        all: lower_le_density && density_le_upper && neumann_le_dirichlet,
    })
}
