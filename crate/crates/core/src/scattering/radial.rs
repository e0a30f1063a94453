//! P1 finite elements for radial quadratic forms |S^{d-1}| ∫ (c φ'² + w φ²) r^{d-1} dr.

use crate::linalg::Tridiagonal;
use crate::quadrature::{gauss_legendre, sphere_area};

const GAUSS_POINTS: usize = 5;

/// Nodes on [0, r_max]: uniform spacing ≈ h between the breakpoints inside
/// [0, r_support], then log-uniform from r_support to r_max with the local
/// spacing growing like h·r/r_support.
pub fn radial_mesh(breakpoints: &[f64], r_support: f64, r_max: f64, h: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    for &b in breakpoints {
        if b > 0.0 && b < r_support && b > *edges.last().unwrap() {
            edges.push(b);
        }
    }
    edges.push(r_support.min(r_max));
    let mut nodes = vec![0.0];
    for w in edges.windows(2) {
        let n = cells(w[1] - w[0], h);
        for i in 1..=n {
            nodes.push(if i == n {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * i as f64 / n as f64
            });
        }
    }
    if r_max > r_support {
        let ratio = (r_max / r_support).ln();
        let n = cells(ratio * r_support, h);
        for i in 1..=n {
            nodes.push(if i == n {
                r_max
            } else {
                r_support * (ratio * i as f64 / n as f64).exp()
            });
        }
    }
    nodes
}

/// Appends log-uniform nodes from the last node out to `to`, with local
/// spacing h·r/scale.
pub fn extend_log(nodes: &mut Vec<f64>, to: f64, scale: f64, h: f64) {
    let from = *nodes.last().expect("mesh has a first node");
    if to <= from {
        return;
    }
    let ratio = (to / from).ln();
    let n = cells(ratio * scale, h);
    for i in 1..=n {
        nodes.push(if i == n {
            to
        } else {
            from * (ratio * i as f64 / n as f64).exp()
        });
    }
}

fn cells(len: f64, h: f64) -> usize {
    ((len / h) - 1e-9).ceil().max(1.0) as usize
}

/// Radial P1 discretization in dimension d.
#[derive(Debug, Clone)]
pub struct RadialFe {
    pub nodes: Vec<f64>,
    pub d: usize,
    area: f64,
}

impl RadialFe {
    pub fn new(nodes: Vec<f64>, d: usize) -> Self {
        Self {
            area: sphere_area(d),
            nodes,
            d,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Stiffness matrix of |S| ∫ c φ'² r^{d-1} dr.
    pub fn stiffness(&self, c: f64) -> Tridiagonal {
        let mut t = Tridiagonal::zeros(self.len());
        let d = self.d as i32;
        for i in 0..self.len() - 1 {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let h = b - a;
            let k = c * self.area * (b.powi(d) - a.powi(d)) / (self.d as f64 * h * h);
            t.add_element(i, [[k, -k], [-k, k]]);
        }
        t
    }

    /// Lumped weights m_i = |S| ∫ w(r) N_i(r) r^{d-1} dr (Gauss quadrature per element).
    pub fn lumped(&self, w: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let (x, q) = gauss_legendre(GAUSS_POINTS);
        let mut m = vec![0.0; self.len()];
        for i in 0..self.len() - 1 {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let h = b - a;
            for (xi, qi) in x.iter().zip(&q) {
                let t = 0.5 * (1.0 + xi);
                let r = a + h * t;
                let val = w(r);
                if val == 0.0 {
                    continue;
                }
                let jw = 0.5 * h * qi * self.area * r.powi(self.d as i32 - 1) * val;
                m[i] += jw * (1.0 - t);
                m[i + 1] += jw * t;
            }
        }
        m
    }

    /// |S| ∫ w(r) u_h(r) r^{d-1} dr for the P1 interpolant u_h of nodal values.
    pub fn integrate(&self, u: &[f64], w: &dyn Fn(f64) -> f64) -> f64 {
        let (x, q) = gauss_legendre(GAUSS_POINTS);
        let mut total = 0.0;
        for i in 0..self.len() - 1 {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let h = b - a;
            for (xi, qi) in x.iter().zip(&q) {
                let t = 0.5 * (1.0 + xi);
                let r = a + h * t;
                let val = w(r);
                if val != 0.0 {
                    total += 0.5
                        * h
                        * qi
                        * r.powi(self.d as i32 - 1)
                        * val
                        * (u[i] * (1.0 - t) + u[i + 1] * t);
                }
            }
        }
        self.area * total
    }

    /// Lumped volume of each node's hat function.
    pub fn volumes(&self) -> Vec<f64> {
        self.lumped(&|_| 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_hits_breakpoints_and_scales() {
        let m = radial_mesh(&[0.5], 1.0, 8.0, 0.1);
        assert!(m.contains(&0.5) && m.contains(&1.0));
        assert_eq!(*m.last().unwrap(), 8.0);
        let m2 = radial_mesh(&[1.0], 2.0, 16.0, 0.2);
        assert_eq!(m.len(), m2.len());
        for (a, b) in m.iter().zip(&m2) {
            assert!((2.0 * a - b).abs() < 1e-13 * b.max(1.0));
        }
    }

    #[test]
    fn volumes_sum_to_ball_volume() {
        let fe = RadialFe::new(radial_mesh(&[], 1.0, 3.0, 0.05), 6);
        let total: f64 = fe.volumes().iter().sum();
        let exact = crate::quadrature::ball_volume(6, 3.0);
        assert!((total - exact).abs() < 1e-10 * exact);
    }
}
