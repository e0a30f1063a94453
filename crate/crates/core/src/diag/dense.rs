use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{precondition, Result};

use super::hamiltonian::LatticeHamiltonian;

/// The 48 symmetries of the cube as site permutations.
pub fn cube_symmetries(h: &LatticeHamiltonian) -> Vec<Vec<usize>> {
    let lattice = &h.lattice;
    let s = lattice.sites_per_side as i64;
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(48);
    for p in perms {
        for flips in 0..8u32 {
            let map = (0..lattice.sites())
                .map(|site| {
                    let c = lattice.coords(site);
                    let mut d = [0i64; 3];
                    for k in 0..3 {
                        let v = c[p[k]];
                        d[k] = if flips & (1 << k) != 0 { s - 1 - v } else { v };
                    }
                    lattice.site(d)
                })
                .collect();
            out.push(map);
        }
    }
    out
}

/// H restricted to the cube-invariant states, in the basis of normalized orbit sums.
#[derive(Debug, Clone)]
pub struct SymmetricSector {
    /// Smallest basis index of each orbit.
    pub representatives: Vec<usize>,
    pub orbit_sizes: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl SymmetricSector {
    pub fn ground_energy(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the invariant sector, which holds the ground state whenever H is
/// cube-invariant: the hopping graph is connected with non-positive weights.
pub fn symmetric_sector(h: &LatticeHamiltonian, max_orbits: usize) -> Result<SymmetricSector> {
    let syms = cube_symmetries(h);
    let basis = &h.basis;
    let n = h.n;
    let mut orbit_of: Vec<u32> = vec![u32::MAX; basis.dim];
    let mut representatives = Vec::new();
    let mut orbit_sizes = Vec::new();
    let mut tuple = vec![0; n];
    let mut image = vec![0; n];
    for idx in 0..basis.dim {
        if orbit_of[idx] != u32::MAX {
            continue;
        }
        let id = representatives.len() as u32;
        if representatives.len() >= max_orbits {
            return precondition(format!("more than {max_orbits} orbits"));
        }
        basis.unrank(idx, &mut tuple);
        let mut members = Vec::new();
        for g in &syms {
            for (t, &s) in image.iter_mut().zip(&tuple) {
                *t = g[s];
            }
            image.sort_unstable();
            let j = basis.rank(&image);
            if orbit_of[j] == u32::MAX {
                orbit_of[j] = id;
                members.push(j);
            }
        }
        let d0 = h.diagonal[idx];
        if members
            .iter()
            .any(|&j| (h.diagonal[j] - d0).abs() > 1e-9 * d0.abs().max(1.0))
        {
            return precondition("the Hamiltonian is not invariant under the cube symmetries");
        }
        representatives.push(idx);
        orbit_sizes.push(members.len());
    }
    let m = representatives.len();
    let mut matrix = DMatrix::zeros(m, m);
    for (o, &r) in representatives.iter().enumerate() {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (col, v) in h.row(r) {
            *acc.entry(orbit_of[col] as usize).or_insert(0.0) += v;
        }
        for (p, v) in acc {
            matrix[(o, p)] = (orbit_sizes[o] as f64 / orbit_sizes[p] as f64).sqrt() * v;
        }
    }
    // symmetric by construction; average away rounding
    let t = matrix.transpose();
    matrix = (matrix + t) * 0.5;
    Ok(SymmetricSector {
        representatives,
        orbit_sizes,
        matrix,
    })
}
