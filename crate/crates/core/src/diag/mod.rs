//! Exact diagonalization of a few lattice bosons with a three-body
//! interaction, and the lattice scattering energy it is compared against.

mod basis;
mod dense;
mod hamiltonian;
mod scattering;

pub use basis::{constant_state, SymmetricBasis};
pub use dense::{cube_symmetries, symmetric_sector, SymmetricSector};
pub use hamiltonian::{
    build_hamiltonian, memory_estimate, triple_sum, Boundary, LatticeBox, LatticeHamiltonian,
};
pub use scattering::{
    discrete_scattering_energy, relative_bonds, truncated_discrete_energy, DiscreteScattering,
    DiscreteScatteringOptions,
};

use std::time::Instant;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::{lanczos_lowest, LanczosOptions, LinearOperator};
use crate::potentials::PotentialSpec;

#[derive(Debug, Clone, Serialize)]
pub struct DiagOptions {
    /// Relative residual target ‖Hψ − Eψ‖ ≤ tol·|E|.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
    pub mem_cap: u64,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            krylov_dim: 40,
            max_restarts: 400,
            seed: 0x5eed,
            mem_cap: 8 << 30,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateResult {
    pub energy: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Lowest eigenpair by restarted Lanczos from the given start vector.
pub fn ground_state(
    h: &impl LinearOperator,
    start: Vec<f64>,
    opts: &DiagOptions,
) -> Result<GroundStateResult> {
    let ep = lanczos_lowest(
        h,
        start,
        LanczosOptions {
            krylov_dim: opts.krylov_dim,
            tol: opts.tol,
            max_restarts: opts.max_restarts,
            seed: opts.seed,
        },
    )?;
    Ok(GroundStateResult {
        energy: ep.value,
        vector: ep.vector,
        residual: ep.residual,
        iterations: ep.iterations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeRun {
    pub lattice: LatticeBox,
    pub n: usize,
    pub dimension: usize,
    pub ground: GroundStateResult,
    pub runtime_s: f64,
}

/// Builds H for n bosons and finds its ground state from the constant function.
pub fn lattice_ground_state(
    lattice: &LatticeBox,
    n: usize,
    v: &PotentialSpec,
    opts: &DiagOptions,
) -> Result<LatticeRun> {
    let t = Instant::now();
    let h = build_hamiltonian(lattice, n, v, opts.mem_cap, opts.krylov_dim + 4)?;
    let ground = ground_state(&h, constant_state(&h.basis), opts)?;
    Ok(LatticeRun {
        lattice: *lattice,
        n,
        dimension: h.dim(),
        ground,
        runtime_s: t.elapsed().as_secs_f64(),
    })
}

/// b_disc/(6ℓ⁶)·n(n−1)(n−2).
pub fn predicted_leading(b_disc: f64, side: f64, n: usize) -> f64 {
    let k = n as f64;
    b_disc / (6.0 * side.powi(6)) * k * (k - 1.0) * (k - 2.0)
}

/// (n/ℓ³)·b^{3/4}.
pub fn lattice_diluteness(b_disc: f64, side: f64, n: usize) -> f64 {
    n as f64 / side.powi(3) * b_disc.max(0.0).powf(0.75)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalityOptions {
    pub diag: DiagOptions,
    pub scattering: DiscreteScatteringOptions,
    /// Largest relative mismatch of the two b_disc values.
    pub b_match: f64,
    pub max_diluteness: f64,
}

impl Default for UniversalityOptions {
    fn default() -> Self {
        Self {
            diag: DiagOptions::default(),
            scattering: DiscreteScatteringOptions::default(),
            b_match: 0.02,
            max_diluteness: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalityReport {
    pub lattice: LatticeBox,
    pub n: usize,
    pub b_disc: [f64; 2],
    pub b_uncertainty: [f64; 2],
    pub y_disc: f64,
    pub e0: [f64; 2],
    pub residual: [f64; 2],
    /// |E₀(V₁) − E₀(V₂)|/E₀(V₁).
    pub relative_difference: f64,
    pub predicted_leading: f64,
    /// E₀/predicted for each potential.
    pub ratio: [f64; 2],
    /// max(5·Y^{1/2}, 0.1).
    pub threshold: f64,
    pub within_threshold: bool,
    pub runtime_s: f64,
}

/// Ground energies of two potentials with matched lattice scattering energy.
pub fn universality_experiment(
    v1: &PotentialSpec,
    v2: &PotentialSpec,
    lattice: &LatticeBox,
    n: usize,
    opts: &UniversalityOptions,
) -> Result<UniversalityReport> {
    let t = Instant::now();
    if !(3..=4).contains(&n) {
        return precondition(format!("n = {n} must be 3 or 4"));
    }
    let h = lattice.spacing;
    let b1 = discrete_scattering_energy(v1, h, &opts.scattering)?;
    let b2 = discrete_scattering_energy(v2, h, &opts.scattering)?;
    let mean = 0.5 * (b1.value + b2.value);
    if !(mean > 0.0) || (b1.value - b2.value).abs() > opts.b_match * mean {
        return precondition(format!(
            "b_disc values {} and {} differ by more than {}",
            b1.value, b2.value, opts.b_match
        ));
    }
    let side = lattice.side();
    let y_disc = lattice_diluteness(mean, side, n);
    if y_disc > opts.max_diluteness {
        return precondition(format!("Y_disc = {y_disc} exceeds {}", opts.max_diluteness));
    }
    let r1 = lattice_ground_state(lattice, n, v1, &opts.diag)?;
    let r2 = lattice_ground_state(lattice, n, v2, &opts.diag)?;
    let (e1, e2) = (r1.ground.energy, r2.ground.energy);
    let pred = predicted_leading(mean, side, n);
    let relative_difference = (e1 - e2).abs() / e1.abs().max(f64::MIN_POSITIVE);
    let threshold = (5.0 * y_disc.sqrt()).max(0.1);
    Ok(UniversalityReport {
        lattice: *lattice,
        n,
        b_disc: [b1.value, b2.value],
        b_uncertainty: [b1.uncertainty, b2.uncertainty],
        y_disc,
        e0: [e1, e2],
        residual: [r1.ground.residual, r2.ground.residual],
        relative_difference,
        predicted_leading: pred,
        ratio: [e1 / pred, e2 / pred],
        threshold,
        within_threshold: relative_difference <= threshold,
        runtime_s: t.elapsed().as_secs_f64(),
    })
}

/// Scales the amplitude of V until b_disc hits the target, by secant
/// iteration on log b against log amplitude.
pub fn tune_amplitude(
    v: &PotentialSpec,
    h: f64,
    target: f64,
    rel_tol: f64,
    opts: &DiscreteScatteringOptions,
) -> Result<(PotentialSpec, DiscreteScattering, f64)> {
    if !(target > 0.0) {
        return precondition("target b_disc must be positive");
    }
    let eval = |f: f64| -> Result<(PotentialSpec, DiscreteScattering)> {
        let w = v.scaled_amplitude(f)?;
        let b = discrete_scattering_energy(&w, h, opts)?;
        Ok((w, b))
    };
    let (mut x0, mut x1) = (0.0f64, 0.0f64);
    let (_, b0) = eval(1.0)?;
    let mut f0 = b0.value.ln() - target.ln();
    x1 += if f0 > 0.0 { -0.5 } else { 0.5 };
    for _ in 0..60 {
        let (w, b1) = eval(x1.exp())?;
        let f1 = b1.value.ln() - target.ln();
        if (b1.value - target).abs() <= rel_tol * target {
            return Ok((w, b1, x1.exp()));
        }
        let slope = (f1 - f0) / (x1 - x0);
        let step = if slope.abs() > 1e-12 {
            -f1 / slope
        } else {
            -f1.signum() * 0.5
        };
        x0 = x1;
        f0 = f1;
        x1 += step.clamp(-2.0, 2.0);
    }
    Err(Error::NonConvergence {
        method: "amplitude secant",
        iterations: 60,
        residual: f0.abs(),
    })
}
