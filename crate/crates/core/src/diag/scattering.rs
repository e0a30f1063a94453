use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::{conjugate_gradient, CgOptions, LinearOperator};
use crate::potentials::{metric_matrix, PotentialSpec};

/// The 18 hops of one particle seen in relative coordinates (u, v):
/// ±(e, e) for particle 1, ±(e, 0) for particle 2 and ±(0, e) for particle 3.
pub fn relative_bonds() -> Vec<[i32; 6]> {
    let mut out = Vec::with_capacity(18);
    for k in 0..3 {
        for s in [-1, 1] {
            let mut a = [0; 6];
            a[k] = s;
            a[k + 3] = s;
            out.push(a);
            let mut b = [0; 6];
            b[k] = s;
            out.push(b);
            let mut c = [0; 6];
            c[k + 3] = s;
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteScatteringOptions {
    /// Truncation radii |M⁻¹y| ≤ K·h, in units of h.
    pub radii_in_h: Vec<f64>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Largest number of lattice points per solve.
    pub max_points: usize,
}

impl Default for DiscreteScatteringOptions {
    fn default() -> Self {
        Self {
            radii_in_h: vec![4.0, 5.0, 6.0],
            cg_tol: 1e-11,
            cg_max_iter: 20_000,
            max_points: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteScattering {
    pub value: f64,
    pub uncertainty: f64,
    pub h: f64,
    pub radii_in_h: Vec<f64>,
    /// Energies of the truncated problems, decreasing in the radius.
    pub truncated: Vec<f64>,
    pub points: Vec<usize>,
    pub iterations: Vec<usize>,
}

struct RelativeLattice {
    /// Neighbour index per bond, u32::MAX outside the truncation.
    neighbours: Vec<[u32; 18]>,
    potential: Vec<f64>,
    inv_h2: f64,
}

impl LinearOperator for RelativeLattice {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 18.0 * x[i];
            for &j in &self.neighbours[i] {
                if j != u32::MAX {
                    acc -= x[j as usize];
                }
            }
            *yi = acc * self.inv_h2 + self.potential[i] * x[i];
        });
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(
            self.potential
                .iter()
                .map(|v| 18.0 * self.inv_h2 + v)
                .collect(),
        )
    }
}

fn relative_lattice(
    v: &PotentialSpec,
    h: f64,
    radius: f64,
    max_points: usize,
) -> Result<RelativeLattice> {
    let m = metric_matrix();
    let (smax, _) = m.singular_range();
    let reach = (smax * radius).floor() as i32;
    let side = (2 * reach + 1) as usize;
    if side.pow(6) > 50 * max_points.max(1) {
        return Err(Error::MemoryCap {
            dimension: side.pow(6),
            bytes: (side.pow(6) * 8) as u64,
            cap: (max_points * 8) as u64,
        });
    }
    let mut points: Vec<[i32; 6]> = Vec::new();
    let mut index: HashMap<[i32; 6], u32> = HashMap::new();
    let r2 = radius * radius;
    let mut c = [-reach; 6];
    loop {
        let y: Vec<f64> = c.iter().map(|&k| k as f64).collect();
        let z = m.apply_inverse(&y);
        if z.iter().map(|t| t * t).sum::<f64>() <= r2 + 1e-9 {
            index.insert(c, points.len() as u32);
            points.push(c);
            if points.len() > max_points {
                return Err(Error::MemoryCap {
                    dimension: points.len(),
                    bytes: (points.len() * 160) as u64,
                    cap: (max_points * 160) as u64,
                });
            }
        }
        let mut k = 0;
        while k < 6 {
            c[k] += 1;
            if c[k] <= reach {
                break;
            }
            c[k] = -reach;
            k += 1;
        }
        if k == 6 {
            break;
        }
    }
    let bonds = relative_bonds();
    let neighbours = points
        .par_iter()
        .map(|p| {
            let mut nb = [u32::MAX; 18];
            for (slot, b) in nb.iter_mut().zip(&bonds) {
                let mut q = *p;
                for k in 0..6 {
                    q[k] += b[k];
                }
                if let Some(&j) = index.get(&q) {
                    *slot = j;
                }
            }
            nb
        })
        .collect();
    let potential = points
        .par_iter()
        .map(|p| {
            let x: Vec<f64> = p.iter().map(|&k| h * k as f64).collect();
            v.eval(&x)
        })
        .collect();
    Ok(RelativeLattice {
        neighbours,
        potential,
        inv_h2: 1.0 / (h * h),
    })
}

/// Energy h⁶Σ[½Σ_δ(φ(y+δ) − φ(y))²/h² + V(y)(1−φ(y))²] minimized over φ
/// vanishing outside |M⁻¹y| ≤ R, for one truncation radius R.
pub fn truncated_discrete_energy(
    v: &PotentialSpec,
    h: f64,
    radius: f64,
    opts: &DiscreteScatteringOptions,
) -> Result<(f64, usize, usize)> {
    let lat = relative_lattice(v, h, radius / h, opts.max_points)?;
    let rhs = lat.potential.clone();
    let out = conjugate_gradient(
        &lat,
        &rhs,
        None,
        CgOptions {
            tol: opts.cg_tol,
            max_iter: opts.cg_max_iter,
        },
    )?;
    let h6 = h.powi(6);
    let b = h6
        * rhs
            .iter()
            .zip(&out.x)
            .map(|(vi, p)| vi * (1.0 - p))
            .sum::<f64>();
    Ok((b, rhs.len(), out.iterations))
}

/// Lattice analogue of b_M with the hopping stencil of the lattice
/// Hamiltonian, extrapolated in the truncation radius by b_K = b + c/K⁴.
pub fn discrete_scattering_energy(
    v: &PotentialSpec,
    h: f64,
    opts: &DiscreteScatteringOptions,
) -> Result<DiscreteScattering> {
    if v.dimension != 6 {
        return precondition("discrete scattering needs a three-body potential on ℝ⁶");
    }
    if !(h > 0.0) {
        return precondition("spacing must be positive");
    }
    let radii = &opts.radii_in_h;
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return precondition("at least two increasing truncation radii are needed");
    }
    if v.is_zero() {
        return Ok(DiscreteScattering {
            value: 0.0,
            uncertainty: 0.0,
            h,
            radii_in_h: radii.clone(),
            truncated: vec![0.0; radii.len()],
            points: vec![0; radii.len()],
            iterations: vec![0; radii.len()],
        });
    }
    // support radius of V measured in |M⁻¹y|
    let m = metric_matrix();
    let support = match v.metric_radial() {
        Some((g, metric)) if metric == m => g.support_radius(),
        _ => v.range_r0 / m.singular_range().1,
    };
    if radii[0] * h <= support {
        return Err(Error::GridTooCoarse(format!(
            "truncation radius {}h does not contain the support of V ({support} in |M⁻¹y|)",
            radii[0]
        )));
    }
    let mut truncated = Vec::new();
    let mut points = Vec::new();
    let mut iterations = Vec::new();
    for &k in radii {
        let (b, p, it) = truncated_discrete_energy(v, h, k * h, opts)?;
        truncated.push(b);
        points.push(p);
        iterations.push(it);
    }
    let xs: Vec<f64> = radii.iter().map(|k| k.powi(-4)).collect();
    let (value, _) = linear_fit(&xs, &truncated);
    let n = xs.len();
    let (pair, _) = linear_fit(&xs[n - 2..], &truncated[n - 2..]);
    let uncertainty = (value - pair).abs().max(1e-12 * value.abs());
    Ok(DiscreteScattering {
        value,
        uncertainty,
        h,
        radii_in_h: radii.clone(),
        truncated,
        points,
        iterations,
    })
}

/// Least-squares intercept and slope of y = a + b x.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
