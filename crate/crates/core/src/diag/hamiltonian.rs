use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::LinearOperator;
use crate::potentials::PotentialSpec;

use super::basis::SymmetricBasis;

/// Boundary condition of the one-body lattice Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Mirror ghost values.
    Neumann,
    /// Zero ghost values.
    Dirichlet,
    /// Wrap-around; a torus rather than a box.
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neumann" => Ok(Boundary::Neumann),
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            _ => Err(Error::InvalidInput(format!("unknown boundary '{s}'"))),
        }
    }
}

/// Cube of s³ cell-centred sites with spacing h.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeBox {
    pub sites_per_side: usize,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl LatticeBox {
    pub fn new(sites_per_side: usize, spacing: f64, boundary: Boundary) -> Result<Self> {
        if sites_per_side < 3 {
            return precondition(format!("s = {sites_per_side} is below the minimum of 3"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return precondition("lattice spacing must be positive");
        }
        Ok(Self {
            sites_per_side,
            spacing,
            boundary,
        })
    }

    pub fn side(&self) -> f64 {
        self.sites_per_side as f64 * self.spacing
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(3)
    }

    pub fn sites(&self) -> usize {
        self.sites_per_side.pow(3)
    }

    pub fn coords(&self, site: usize) -> [i64; 3] {
        let s = self.sites_per_side;
        [
            (site % s) as i64,
            ((site / s) % s) as i64,
            (site / (s * s)) as i64,
        ]
    }

    pub fn site(&self, c: [i64; 3]) -> usize {
        let s = self.sites_per_side as i64;
        (c[0] + s * (c[1] + s * c[2])) as usize
    }

    /// Neighbours reached by one hop and the diagonal of the one-body −Δ·h².
    pub fn hops(&self, site: usize) -> (Vec<usize>, f64) {
        let s = self.sites_per_side as i64;
        let c = self.coords(site);
        let mut out = Vec::with_capacity(6);
        let mut inside = 0;
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let mut d = c;
                d[axis] += step;
                if d[axis] >= 0 && d[axis] < s {
                    out.push(self.site(d));
                    inside += 1;
                } else if self.boundary == Boundary::Periodic {
                    d[axis] = d[axis].rem_euclid(s);
                    out.push(self.site(d));
                }
            }
        }
        let diag = match self.boundary {
            Boundary::Neumann => inside as f64,
            Boundary::Dirichlet | Boundary::Periodic => 6.0,
        };
        (out, diag)
    }

    /// Lowest nonzero eigenvalue of the one-body Neumann Laplacian.
    pub fn neumann_gap(&self) -> f64 {
        let s = self.sites_per_side as f64;
        (2.0 - 2.0 * (std::f64::consts::PI / s).cos()) / (self.spacing * self.spacing)
    }

    /// Lowest eigenvalue of the n-particle Dirichlet kinetic operator per particle.
    pub fn dirichlet_ground(&self) -> f64 {
        let s = self.sites_per_side as f64;
        3.0 * (2.0 - 2.0 * (std::f64::consts::PI / (s + 1.0)).cos()) / (self.spacing * self.spacing)
    }
}

/// V(h(x_p − x_q), h(x_p − x_r)) summed over unordered triples of a tuple;
/// periodic boxes use the minimum-image displacements.
pub fn triple_sum(lattice: &LatticeBox, v: &PotentialSpec, tuple: &[usize]) -> f64 {
    let n = tuple.len();
    let h = lattice.spacing;
    let s = lattice.sites_per_side as i64;
    let periodic = lattice.boundary == Boundary::Periodic;
    let wrap = |d: i64| {
        if periodic {
            d - s * ((2 * d + s).div_euclid(2 * s))
        } else {
            d
        }
    };
    let mut total = 0.0;
    let mut x = [0.0; 6];
    for p in 0..n {
        let cp = lattice.coords(tuple[p]);
        for q in p + 1..n {
            let cq = lattice.coords(tuple[q]);
            for r in q + 1..n {
                let cr = lattice.coords(tuple[r]);
                for k in 0..3 {
                    x[k] = h * wrap(cp[k] - cq[k]) as f64;
                    x[k + 3] = h * wrap(cp[k] - cr[k]) as f64;
                }
                total += v.eval(&x);
            }
        }
    }
    total
}

/// Sparse symmetric n-boson Hamiltonian on a lattice box, applied matrix-free.
#[derive(Debug, Clone)]
pub struct LatticeHamiltonian {
    pub lattice: LatticeBox,
    pub n: usize,
    pub basis: SymmetricBasis,
    pub diagonal: Vec<f64>,
    neighbours: Vec<Vec<usize>>,
    inv_h2: f64,
}

const ROW_CHUNK: usize = 2048;

/// Bytes needed for the diagonal plus `vectors` work vectors.
pub fn memory_estimate(dim: usize, vectors: usize) -> u64 {
    (dim as u64) * 8 * (vectors as u64 + 1)
}

pub fn build_hamiltonian(
    lattice: &LatticeBox,
    n: usize,
    v: &PotentialSpec,
    mem_cap: u64,
    vectors: usize,
) -> Result<LatticeHamiltonian> {
    if n == 0 {
        return precondition("at least one particle is needed");
    }
    if v.dimension != 6 {
        return precondition("the lattice Hamiltonian needs a three-body potential on ℝ⁶");
    }
    if !v.symmetry_flag && !v.is_zero() {
        return precondition("potential has not been certified three-body symmetric");
    }
    let sites = lattice.sites();
    let dim_f = SymmetricBasis::dimension(sites, n);
    let bytes = memory_estimate(dim_f as usize, vectors);
    if dim_f > 1e15 || bytes > mem_cap {
        return Err(Error::MemoryCap {
            dimension: dim_f as usize,
            bytes,
            cap: mem_cap,
        });
    }
    let basis = SymmetricBasis::new(sites, n)?;
    let h = lattice.spacing;
    let inv_h2 = 1.0 / (h * h);
    let mut neighbours = Vec::with_capacity(sites);
    let mut site_diag = Vec::with_capacity(sites);
    for s in 0..sites {
        let (nb, d) = lattice.hops(s);
        neighbours.push(nb);
        site_diag.push(d * inv_h2);
    }
    let mut diagonal = vec![0.0; basis.dim];
    let interacting = n >= 3 && !v.is_zero();
    diagonal
        .par_chunks_mut(ROW_CHUNK)
        .enumerate()
        .for_each(|(c, out)| {
            let mut tuple = vec![0; n];
            basis.unrank(c * ROW_CHUNK, &mut tuple);
            for (k, d) in out.iter_mut().enumerate() {
                if k > 0 {
                    basis.advance(&mut tuple);
                }
                let kin: f64 = tuple.iter().map(|&s| site_diag[s]).sum();
                *d = kin
                    + if interacting {
                        triple_sum(lattice, v, &tuple)
                    } else {
                        0.0
                    };
            }
        });
    Ok(LatticeHamiltonian {
        lattice: *lattice,
        n,
        basis,
        diagonal,
        neighbours,
        inv_h2,
    })
}

impl LatticeHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    /// Calls `f(column, value)` for every off-diagonal entry of the row.
    fn for_each_hop(&self, tuple: &[usize], target: &mut [usize], mut f: impl FnMut(usize, f64)) {
        let n = self.n;
        let mut k = 0;
        while k < n {
            let a = tuple[k];
            let mut na = 1;
            while k + na < n && tuple[k + na] == a {
                na += 1;
            }
            for &b in &self.neighbours[a] {
                let nb = tuple.iter().filter(|&&t| t == b).count();
                target.copy_from_slice(tuple);
                target[k] = b;
                // restore the nondecreasing order
                let mut j = k;
                while j + 1 < n && target[j] > target[j + 1] {
                    target.swap(j, j + 1);
                    j += 1;
                }
                while j > 0 && target[j] < target[j - 1] {
                    target.swap(j, j - 1);
                    j -= 1;
                }
                let col = self.basis.rank(target);
                f(col, -((na * (nb + 1)) as f64).sqrt() * self.inv_h2);
            }
            k += na;
        }
    }

    /// Nonzero entries of one row, diagonal included.
    pub fn row(&self, index: usize) -> Vec<(usize, f64)> {
        let mut tuple = vec![0; self.n];
        let mut target = vec![0; self.n];
        self.basis.unrank(index, &mut tuple);
        let mut out = vec![(index, self.diagonal[index])];
        self.for_each_hop(&tuple, &mut target, |c, v| out.push((c, v)));
        out
    }

    /// Dense matrix; only for small bases.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d > 20_000 {
            return precondition(format!("dense matrix of dimension {d} is too large"));
        }
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        Ok(m)
    }
}

impl LinearOperator for LatticeHamiltonian {
    fn dim(&self) -> usize {
        self.basis.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(c, out)| {
                let start = c * ROW_CHUNK;
                let mut tuple = vec![0; n];
                let mut target = vec![0; n];
                self.basis.unrank(start, &mut tuple);
                for (k, yk) in out.iter_mut().enumerate() {
                    if k > 0 {
                        self.basis.advance(&mut tuple);
                    }
                    let row = start + k;
                    let mut acc = self.diagonal[row] * x[row];
                    self.for_each_hop(&tuple, &mut target, |col, v| acc += v * x[col]);
                    *yk = acc;
                }
            });
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.diagonal.clone())
    }
}
