//! Cell-centered finite differences for ∫ Σ_a c_a (∂_a φ)² + V(1 − φ)² on boxes.
//!
//! Axes may be halved by a reflection symmetry of the integrand. Crossing the
//! mirror plane of axis `a` lands on the reflected cell, which also flips the
//! indices of every axis listed in `flips`. The energy of the full box is
//! 2^{#mirrors} times the energy of the stored cells.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, CgOptions, LinearOperator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LowerFace {
    Dirichlet,
    Mirror { flips: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxGrid {
    pub cells: Vec<usize>,
    pub spacing: Vec<f64>,
    /// Coordinate of the lower face of cell 0 on each axis.
    pub lower: Vec<f64>,
    pub coeff: Vec<f64>,
    pub lower_face: Vec<LowerFace>,
}

impl BoxGrid {
    /// A box [−L_a, L_a] per axis, halved along every axis with a mirror.
    pub fn symmetric(
        half_cells: &[usize],
        half_extent: &[f64],
        coeff: &[f64],
        lower_face: Vec<LowerFace>,
    ) -> Self {
        let d = half_cells.len();
        let mut cells = vec![0; d];
        let mut spacing = vec![0.0; d];
        let mut lower = vec![0.0; d];
        for a in 0..d {
            spacing[a] = half_extent[a] / half_cells[a] as f64;
            match lower_face[a] {
                LowerFace::Mirror { .. } => {
                    cells[a] = half_cells[a];
                    lower[a] = 0.0;
                }
                LowerFace::Dirichlet => {
                    cells[a] = 2 * half_cells[a];
                    lower[a] = -half_extent[a];
                }
            }
        }
        Self {
            cells,
            spacing,
            lower,
            coeff: coeff.to_vec(),
            lower_face,
        }
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multiplicity(&self) -> f64 {
        let m = self
            .lower_face
            .iter()
            .filter(|f| matches!(f, LowerFace::Mirror { .. }))
            .count();
        2f64.powi(m as i32)
    }

    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.cells[a + 1];
        }
        s
    }

    pub fn center(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.dim()).rev() {
            let i = rem % self.cells[a];
            rem /= self.cells[a];
            out[a] = self.lower[a] + (i as f64 + 0.5) * self.spacing[a];
        }
    }

    fn validate(&self) -> Result<()> {
        for (a, f) in self.lower_face.iter().enumerate() {
            if let LowerFace::Mirror { flips } = f {
                for &b in flips {
                    if b == a || b >= self.dim() {
                        return Err(Error::InvalidInput(format!(
                            "mirror of axis {a} flips invalid axis {b}"
                        )));
                    }
                    if matches!(self.lower_face[b], LowerFace::Mirror { .. }) {
                        return Err(Error::InvalidInput(format!(
                            "mirror of axis {a} flips axis {b}, which is itself halved"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Bytes needed for the operator and the CG work vectors.
    pub fn bytes_needed(&self) -> u64 {
        self.len() as u64 * 8 * 9
    }
}

/// The assembled operator A = L + diag(wV) with its right-hand side wV.
pub struct BoxOperator {
    pub grid: BoxGrid,
    strides: Vec<usize>,
    kappa: Vec<f64>,
    pub wv: Vec<f64>,
    active: Option<Vec<bool>>,
}

impl BoxOperator {
    /// Samples `v` at cell centers. Cells with `active(x) == false` are pinned to φ = 0.
    pub fn new(
        grid: BoxGrid,
        v: &(dyn Fn(&[f64]) -> f64 + Sync),
        active: Option<&(dyn Fn(&[f64]) -> bool + Sync)>,
        mem_cap: u64,
    ) -> Result<Self> {
        grid.validate()?;
        let bytes = grid.bytes_needed();
        if bytes > mem_cap {
            return Err(Error::MemoryCap {
                dimension: grid.len(),
                bytes,
                cap: mem_cap,
            });
        }
        let w = grid.cell_volume();
        let d = grid.dim();
        let n = grid.len();
        let mut wv = vec![0.0; n];
        let mut mask = active.map(|_| vec![true; n]);
        wv.par_iter_mut().enumerate().for_each(|(p, out)| {
            let mut x = vec![0.0; d];
            grid.center(p, &mut x);
            *out = w * v(&x);
        });
        if let (Some(mask), Some(f)) = (mask.as_mut(), active) {
            mask.par_iter_mut().enumerate().for_each(|(p, m)| {
                let mut x = vec![0.0; d];
                grid.center(p, &mut x);
                *m = f(&x);
            });
            for (val, m) in wv.iter_mut().zip(mask.iter()) {
                if !m {
                    *val = 0.0;
                }
            }
        }
        let kappa = (0..d)
            .map(|a| grid.coeff[a] * w / (grid.spacing[a] * grid.spacing[a]))
            .collect();
        Ok(Self {
            strides: grid.strides(),
            grid,
            kappa,
            wv,
            active: mask,
        })
    }

    fn is_active(&self, p: usize) -> bool {
        self.active.as_ref().is_none_or(|m| m[p])
    }

    fn mirror_image(&self, idx: &[usize], a: usize, flips: &[usize]) -> usize {
        let mut p = 0;
        for b in 0..self.grid.dim() {
            let i = if b == a {
                0
            } else if flips.contains(&b) {
                self.grid.cells[b] - 1 - idx[b]
            } else {
                idx[b]
            };
            p += i * self.strides[b];
        }
        p
    }

    /// Applies the operator to one cell (diagonal-only when `x` is `None`).
    fn row(&self, p: usize, idx: &[usize], x: Option<&[f64]>) -> f64 {
        let xp = x.map_or(1.0, |x| x[p]);
        if !self.is_active(p) {
            return xp;
        }
        let val = |q: usize| -> f64 {
            if !self.is_active(q) {
                return 0.0;
            }
            match x {
                Some(x) => x[q],
                None => 0.0,
            }
        };
        let mut y = self.wv[p] * xp;
        for a in 0..self.grid.dim() {
            let k = self.kappa[a];
            let s = self.strides[a];
            let i = idx[a];
            y += if i + 1 < self.grid.cells[a] {
                k * (xp - val(p + s))
            } else {
                k * xp
            };
            if i > 0 {
                y += k * (xp - val(p - s));
            } else {
                match &self.grid.lower_face[a] {
                    LowerFace::Dirichlet => y += k * xp,
                    LowerFace::Mirror { flips } => {
                        let q = self.mirror_image(idx, a, flips);
                        if q != p {
                            y += k * (xp - val(q));
                        }
                    }
                }
            }
        }
        y
    }

    fn for_each_row(&self, f: impl Fn(usize, &[usize]) -> f64 + Sync, out: &mut [f64]) {
        let d = self.grid.dim();
        let last = self.grid.cells[d - 1];
        out.par_chunks_mut(last)
            .enumerate()
            .for_each(|(row, chunk)| {
                let mut idx = vec![0; d];
                let mut rem = row;
                for a in (0..d - 1).rev() {
                    idx[a] = rem % self.grid.cells[a];
                    rem /= self.grid.cells[a];
                }
                for (j, o) in chunk.iter_mut().enumerate() {
                    idx[d - 1] = j;
                    *o = f(row * last + j, &idx);
                }
            });
    }

    /// E(φ) = φᵀAφ − 2 wVᵀφ + Σ wV on the stored cells.
    pub fn energy(&self, phi: &[f64]) -> f64 {
        let mut a_phi = vec![0.0; phi.len()];
        self.apply(phi, &mut a_phi);
        dot(phi, &a_phi) - 2.0 * dot(&self.wv, phi) + self.wv.iter().sum::<f64>()
    }

    /// max over active cells of |wV − Aφ| / w, the pointwise equation residual.
    pub fn residual_sup(&self, phi: &[f64]) -> f64 {
        let mut a_phi = vec![0.0; phi.len()];
        self.apply(phi, &mut a_phi);
        let w = self.grid.cell_volume();
        a_phi
            .par_iter()
            .zip(&self.wv)
            .enumerate()
            .filter(|(p, _)| self.is_active(*p))
            .map(|(_, (a, b))| (a - b).abs() / w)
            .reduce(|| 0.0, f64::max)
    }
}

impl LinearOperator for BoxOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.for_each_row(|p, idx| self.row(p, idx, Some(x)), y);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.grid.len()];
        self.for_each_row(|p, idx| self.row(p, idx, None), &mut d);
        Some(d)
    }
}

#[derive(Debug, Clone)]
pub struct BoxSolution {
    pub grid: BoxGrid,
    pub phi: Vec<f64>,
    /// Energy of the full (unreduced) box.
    pub energy: f64,
    pub iterations: usize,
    pub residual_sup: f64,
}

pub fn solve_box(op: &BoxOperator, cg: CgOptions) -> Result<BoxSolution> {
    let out = conjugate_gradient(op, &op.wv, None, cg)?;
    let energy = op.grid.multiplicity() * op.energy(&out.x);
    Ok(BoxSolution {
        grid: op.grid.clone(),
        residual_sup: op.residual_sup(&out.x),
        phi: out.x,
        energy,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(faces: Vec<LowerFace>) -> BoxGrid {
        BoxGrid::symmetric(&[6, 6], &[1.5, 1.5], &[2.0, 2.0], faces)
    }

    fn bump(x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2 < 1.0 {
            5.0 * (1.0 - r2).powi(2)
        } else {
            0.0
        }
    }

    #[test]
    fn mirrors_reproduce_full_box_energy() {
        let cap = u64::MAX;
        let full = BoxOperator::new(
            grid(vec![LowerFace::Dirichlet, LowerFace::Dirichlet]),
            &bump,
            None,
            cap,
        )
        .unwrap();
        let e_full = solve_box(&full, CgOptions::default()).unwrap().energy;
        let faces = vec![
            LowerFace::Mirror { flips: vec![] },
            LowerFace::Mirror { flips: vec![] },
        ];
        let half = BoxOperator::new(grid(faces), &bump, None, cap).unwrap();
        let e_half = solve_box(&half, CgOptions::default()).unwrap().energy;
        assert!(
            (e_full - e_half).abs() < 1e-9 * e_full,
            "{e_full} vs {e_half}"
        );
        // point reflection through the origin: halve axis 0 and flip axis 1
        let faces = vec![LowerFace::Mirror { flips: vec![1] }, LowerFace::Dirichlet];
        let point = BoxOperator::new(grid(faces), &bump, None, cap).unwrap();
        let e_point = solve_box(&point, CgOptions::default()).unwrap().energy;
        assert!(
            (e_full - e_point).abs() < 1e-9 * e_full,
            "{e_full} vs {e_point}"
        );
    }

    #[test]
    fn operator_is_symmetric() {
        let faces = vec![LowerFace::Mirror { flips: vec![1] }, LowerFace::Dirichlet];
        let op = BoxOperator::new(
            grid(faces),
            &bump,
            Some(&|x: &[f64]| x[0] * x[0] + x[1] * x[1] < 2.0),
            u64::MAX,
        )
        .unwrap();
        let n = op.dim();
        let mut cols = Vec::new();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let mut y = vec![0.0; n];
            op.apply(&e, &mut y);
            cols.push(y);
        }
        for i in 0..n {
            for j in 0..n {
                assert!((cols[j][i] - cols[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let err = BoxOperator::new(
            grid(vec![LowerFace::Dirichlet, LowerFace::Dirichlet]),
            &bump,
            None,
            100,
        );
        assert!(matches!(err, Err(Error::MemoryCap { .. })));
    }
}
