use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{precondition, Error, Result};

/// Lower bound on the energy per volume assembled from box energies.
#[derive(Debug, Clone, Serialize)]
pub struct ThermoLower {
    pub rho: f64,
    pub b_m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub y: f64,
    pub ell: f64,
    pub rho_ell3: f64,
    /// ⌊10ρℓ³⌋, the largest occupation covered by the table.
    pub k_cut: usize,
    /// Minimizer of the bound over x = Σ_{k≤k_cut} k c_k.
    pub x_star: f64,
    pub minimum_at_mean: bool,
    /// Minimum of the per-box bound.
    pub box_bound: f64,
    pub e_lower: f64,
    /// (1/6)ρ³b_M.
    pub leading: f64,
    /// Overfilled-box prefactor E(ℓ,k_cut)/(2k_cut) from the table and from the closed form.
    pub overfill_prefactor_table: f64,
    pub overfill_prefactor_formula: f64,
    pub prefactor_readings_agree: bool,
    pub diagnostics: Vec<String>,
}

/// E(ℓ,k) ≥ b_M/(6ℓ⁶)·k(k−1)(k−2) for k ≤ k_max.
pub fn leading_table(b_m: f64, ell: f64, k_max: usize) -> BTreeMap<usize, f64> {
    (0..=k_max)
        .map(|k| {
            let t = k as f64;
            (k, b_m / (6.0 * ell.powi(6)) * t * (t - 1.0) * (t - 2.0))
        })
        .collect()
}

/// Lower convex hull of the points (k, E_k), evaluated on [0, k_max].
pub fn lower_hull(table: &BTreeMap<usize, f64>) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (&k, &e) in table {
        let p = (k as f64, e);
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn hull_eval(hull: &[(f64, f64)], x: f64) -> f64 {
    if x <= hull[0].0 {
        return hull[0].1;
    }
    for w in hull.windows(2) {
        if x <= w[1].0 {
            let t = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    hull.last().unwrap().1
}

/// Minimizes, over x ∈ [0, ρℓ³], the convexity bound for boxes with at most
/// k_cut particles plus the superadditivity bound for the overfilled ones,
/// and divides by the box volume.
pub fn assemble_thermo_lower(
    rho: f64,
    b_m: f64,
    alpha: f64,
    beta: f64,
    e_table: &BTreeMap<usize, f64>,
) -> Result<ThermoLower> {
    if !(rho > 0.0 && b_m > 0.0) {
        return precondition("ρ and b_M must be positive");
    }
    let y = rho * b_m.powf(0.75);
    let a = b_m.powf(0.25);
    let ell = a * y.powf(-alpha);
    let mean = rho * ell.powi(3);
    let k_cut = (10.0 * mean).floor() as usize;
    if k_cut < 3 {
        return precondition(format!(
            "10ρℓ³ = {} leaves no three-particle boxes",
            10.0 * mean
        ));
    }
    let missing: Vec<usize> = (0..=k_cut).filter(|k| !e_table.contains_key(k)).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "E_table misses {} occupations up to k_cut = {k_cut}, first {}",
            missing.len(),
            missing[0]
        )));
    }
    let cut: BTreeMap<usize, f64> = e_table.range(..=k_cut).map(|(k, e)| (*k, *e)).collect();
    let hull = lower_hull(&cut);
    let e_cut = e_table[&k_cut];
    let per_particle = e_cut / (2.0 * k_cut as f64);
    let kc = k_cut as f64;
    let formula = b_m / (12.0 * ell.powi(6)) * (kc - 1.0) * (kc - 2.0);
    let mut diagnostics = Vec::new();
    let agree = (per_particle - formula).abs() <= 1e-6 * formula.abs().max(f64::MIN_POSITIVE)
        || per_particle >= formula;
    if !agree {
        diagnostics.push(format!(
            "overfill prefactor from the table ({per_particle:e}) is below the closed form ({formula:e})"
        ));
    }
    let phi = |x: f64| hull_eval(&hull, x) + (mean - x) * per_particle;
    // scan, then golden-section refinement around the best sample
    let samples = 2000;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=samples {
        let x = mean * i as f64 / samples as f64;
        let v = phi(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    let step = mean / samples as f64;
    let (mut lo, mut hi) = ((best.1 - step).max(0.0), (best.1 + step).min(mean));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if phi(c) <= phi(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let mut x_star = 0.5 * (lo + hi);
    let mut box_bound = phi(x_star);
    for x in [0.0, mean] {
        if phi(x) <= box_bound {
            box_bound = phi(x);
            x_star = x;
        }
    }
    let minimum_at_mean = (x_star - mean).abs() <= 1e-6 * mean.max(1.0)
        || (phi(mean) - box_bound).abs() <= 1e-12 * box_bound.abs();
    if !minimum_at_mean {
        diagnostics.push(format!("minimum at x = {x_star}, not at ρℓ³ = {mean}"));
    }
    Ok(ThermoLower {
        rho,
        b_m,
        alpha,
        beta,
        y,
        ell,
        rho_ell3: mean,
        k_cut,
        x_star,
        minimum_at_mean,
        box_bound,
        e_lower: box_bound / ell.powi(3),
        leading: rho.powi(3) * b_m / 6.0,
        overfill_prefactor_table: per_particle,
        overfill_prefactor_formula: formula,
        prefactor_readings_agree: agree,
        diagnostics,
    })
}
