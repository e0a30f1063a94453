use serde::Serialize;

use crate::error::{precondition, Result};

pub type Point = [f64; 3];

fn dist2(a: &Point, b: &Point) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum()
}

/// Pair cutoff radius, particle positions and the box shrink parameter.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffConfig {
    pub r: f64,
    pub positions: Vec<Point>,
    pub eta: f64,
}

impl CutoffConfig {
    pub fn new(r: f64, positions: Vec<Point>, eta: f64) -> Result<Self> {
        if !(r > 0.0) {
            return precondition("cutoff radius must be positive");
        }
        if !(eta > 0.0 && eta < 1.0) {
            return precondition("η must lie in (0, 1)");
        }
        Ok(Self { r, positions, eta })
    }

    pub fn max_triple_sum(&self) -> Result<f64> {
        no_four_body_check(&self.positions, self.r)
    }
}

/// χ_R(x_i−x_j)χ_R(x_i−x_k)χ_R(x_j−x_k) ∏_{l≠i,j,k} θ_{2R}(centroid − x_l).
pub fn pair_cutoffs(positions: &[Point], i: usize, j: usize, k: usize, r: f64) -> Result<f64> {
    let n = positions.len();
    if i >= n || j >= n || k >= n {
        return precondition(format!("index out of range for {n} positions"));
    }
    if i == j || i == k || j == k {
        return precondition("triple indices must be distinct");
    }
    Ok(if triple_isolated(positions, i, j, k, r) {
        1.0
    } else {
        0.0
    })
}

fn triple_isolated(p: &[Point], i: usize, j: usize, k: usize, r: f64) -> bool {
    let r2 = r * r;
    if dist2(&p[i], &p[j]) > r2 || dist2(&p[i], &p[k]) > r2 || dist2(&p[j], &p[k]) > r2 {
        return false;
    }
    let c: Point = std::array::from_fn(|a| (p[i][a] + p[j][a] + p[k][a]) / 3.0);
    let excl = 4.0 * r2;
    p.iter()
        .enumerate()
        .filter(|(l, _)| *l != i && *l != j && *l != k)
        .all(|(_, x)| dist2(&c, x) > excl)
}

/// max_i Σ_{j≠k, both ≠ i} F_ijk over ordered pairs (j, k).
pub fn no_four_body_check(positions: &[Point], r: f64) -> Result<f64> {
    let n = positions.len();
    if n < 3 {
        return precondition("at least three positions are needed");
    }
    let r2 = r * r;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && dist2(&positions[i], &positions[j]) <= r2)
                .collect()
        })
        .collect();
    let mut sums = vec![0.0f64; n];
    for i in 0..n {
        let nb = &neighbours[i];
        for (a, &j) in nb.iter().enumerate() {
            for &k in &nb[a + 1..] {
                // each triple once, at its smallest index
                if j < i || k < i {
                    continue;
                }
                if triple_isolated(positions, i, j, k, r) {
                    for m in [i, j, k] {
                        sums[m] += 2.0;
                    }
                }
            }
        }
    }
    Ok(sums.into_iter().fold(0.0, f64::max))
}

/// The two readings of the many-body hypotheses η > R₂R and R₁R > R₀.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub eta: f64,
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub ell: f64,
    /// R₀ measured in units of the box side ℓ.
    pub scaled: bool,
    /// R₀ taken as given.
    pub unscaled: bool,
    pub readings_agree: bool,
}

pub fn check_hypotheses(eta: f64, r: f64, r0: f64, r1: f64, r2: f64, ell: f64) -> HypothesisCheck {
    let first = eta > r2 * r;
    let scaled = first && r1 * r > r0 / ell;
    let unscaled = first && r1 * r > r0;
    HypothesisCheck {
        eta,
        r,
        r0,
        r1,
        r2,
        ell,
        scaled,
        unscaled,
        readings_agree: scaled == unscaled,
    }
}

/// Outcome of the seeded no-four-body stress test.
#[derive(Debug, Clone, Serialize)]
pub struct StressReport {
    pub configurations: usize,
    pub seed: u64,
    pub max_sum: f64,
    /// Configurations whose largest Σ F exceeds 2.
    pub violations: usize,
}

/// Draws `configurations` point sets with n ∈ {4, …, 30} uniform in cubes
/// of side between R and 10R, every third one with a dense cluster of four
/// to six points, and checks max_i Σ F_ijk ≤ 2 for each.
pub fn four_body_stress(configurations: usize, r: f64, seed: u64) -> Result<StressReport> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;
    if !(r > 0.0) {
        return precondition("cutoff radius must be positive");
    }
    let sums: Vec<f64> = (0..configurations)
        .into_par_iter()
        .map(|c| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
            let n = rng.random_range(4..=30);
            let side = r * rng.random_range(1.0..10.0);
            let mut pts: Vec<Point> = (0..n)
                .map(|_| std::array::from_fn(|_| rng.random_range(0.0..side)))
                .collect();
            if c % 3 == 0 {
                let centre = pts[0];
                let m = rng.random_range(4..=6).min(n);
                for p in pts.iter_mut().take(m) {
                    *p = std::array::from_fn(|a| centre[a] + rng.random_range(-0.5..0.5) * r);
                }
            }
            no_four_body_check(&pts, r).unwrap_or(0.0)
        })
        .collect();
    Ok(StressReport {
        configurations,
        seed,
        max_sum: sums.iter().copied().fold(0.0, f64::max),
        violations: sums.iter().filter(|s| **s > 2.0).count(),
    })
}
