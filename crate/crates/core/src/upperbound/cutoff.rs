use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::quadrature::gauss_legendre;

/// Largest ε accepted by the profile; the ramps of width ε/2 must not meet.
pub const MAX_EPSILON: f64 = 0.45;

/// Tensor-product cutoff φ(x) = φ₁(x₁)φ₁(x₂)φ₁(x₃) on [−1/2, 1/2]³.
///
/// φ₁ is 1 on |t| ≤ (1−ε)/2 and falls to 0 at |t| = 1/2 along a quintic
/// smoothstep. Norms refer to φ/‖φ‖_{L²}, sup bounds to the raw profile with
/// 0 ≤ φ ≤ 1.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffProfile {
    pub epsilon: f64,
    /// Cells per side of the uniform grid on [−1/2, 1/2].
    pub cells: usize,
    /// Grid nodes and φ₁ at the nodes.
    pub nodes: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// ∫φ₁², ∫φ₁'², ∫φ₁''², ∫φ₁⁶.
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub j6: f64,
    /// ∫|φ|⁶ before normalization.
    pub l6_pow6_raw: f64,
    pub l2_norm_raw: f64,
    /// ‖∇φ‖², ∫|φ|⁶, ‖D²φ‖² and ‖φ‖_{H²} after normalization.
    pub grad_sq: f64,
    pub l6_pow6: f64,
    pub hessian_sq: f64,
    pub h2_norm: f64,
    pub sup_grad: f64,
    pub sup_laplacian: f64,
    /// sup|∇φ|·ε and sup|Δφ|·ε².
    pub c_phi_grad: f64,
    pub c_phi_laplacian: f64,
    /// ε‖∇φ‖².
    pub c_grad_l2: f64,
    /// ‖φ‖_{H²}/(ε⁻³ + 1).
    pub c_h2: f64,
    /// ‖φ‖_{H²}·ε^{3/2}.
    pub c_h2_sharp: f64,
}

fn smoothstep(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
        30.0 * t * t * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    ]
}

/// φ₁, φ₁' and φ₁'' at x.
pub fn profile_1d(epsilon: f64, x: f64) -> [f64; 3] {
    let w = 0.5 * epsilon;
    let dist = 0.5 - x.abs();
    if dist >= w {
        return [1.0, 0.0, 0.0];
    }
    if dist <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let [s, ds, dds] = smoothstep(dist / w);
    let sign = if x > 0.0 { -1.0 } else { 1.0 };
    [s, sign * ds / w, dds / (w * w)]
}

/// Default grid: 32 cells across each ramp.
pub fn default_cells(epsilon: f64) -> usize {
    (64.0 / epsilon).ceil() as usize
}

pub fn build_cutoff(epsilon: f64, cells: usize) -> Result<CutoffProfile> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return precondition(format!("ε = {epsilon} must lie in (0, {MAX_EPSILON}]"));
    }
    let h = 1.0 / cells as f64;
    if 0.5 * epsilon / h < 8.0 {
        return Err(Error::GridTooCoarse(format!(
            "{cells} cells leave fewer than 8 across the ramp of width {}",
            0.5 * epsilon
        )));
    }
    let (gx, gw) = gauss_legendre(4);
    let (mut i0, mut i1, mut i2, mut j6) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..cells {
        let left = -0.5 + c as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            let [f, df, ddf] = profile_1d(epsilon, left + 0.5 * h * (1.0 + x));
            let w = 0.5 * h * w;
            i0 += w * f * f;
            i1 += w * df * df;
            i2 += w * ddf * ddf;
            j6 += w * f.powi(6);
        }
    }
    let nodes: Vec<f64> = (0..=cells).map(|k| -0.5 + k as f64 * h).collect();
    let phi_values = nodes.iter().map(|&x| profile_1d(epsilon, x)[0]).collect();
    let norm_sq = i0.powi(3);
    let grad_sq = 3.0 * i1 * i0 * i0 / norm_sq;
    let hessian_sq = (3.0 * i2 * i0 * i0 + 6.0 * i1 * i1 * i0) / norm_sq;
    let l6_pow6_raw = j6.powi(3);
    let l6_pow6 = l6_pow6_raw / norm_sq.powi(3);
    let h2_norm = (1.0 + grad_sq + hessian_sq).sqrt();
    let (sup_grad, sup_laplacian) = sup_derivatives(epsilon);
    Ok(CutoffProfile {
        epsilon,
        cells,
        nodes,
        phi_values,
        i0,
        i1,
        i2,
        j6,
        l6_pow6_raw,
        l2_norm_raw: norm_sq.sqrt(),
        grad_sq,
        l6_pow6,
        hessian_sq,
        h2_norm,
        sup_grad,
        sup_laplacian,
        c_phi_grad: sup_grad * epsilon,
        c_phi_laplacian: sup_laplacian * epsilon * epsilon,
        c_grad_l2: epsilon * grad_sq,
        c_h2: h2_norm / (epsilon.powi(-3) + 1.0),
        c_h2_sharp: h2_norm * epsilon.powf(1.5),
    })
}

/// sup|∇φ| and sup|Δφ| over a tensor sample of one octant, dense in the ramps.
fn sup_derivatives(epsilon: f64) -> (f64, f64) {
    let samples = 128;
    let mut axis: Vec<[f64; 3]> = vec![[1.0, 0.0, 0.0]];
    for k in 0..=samples {
        let x = 0.5 - 0.5 * epsilon * k as f64 / samples as f64;
        axis.push(profile_1d(epsilon, x));
    }
    let (mut g, mut l) = (0.0f64, 0.0f64);
    for a in &axis {
        for b in &axis {
            for c in &axis {
                let gx = a[1] * b[0] * c[0];
                let gy = a[0] * b[1] * c[0];
                let gz = a[0] * b[0] * c[1];
                g = g.max(gx * gx + gy * gy + gz * gz);
                let lap = a[2] * b[0] * c[0] + a[0] * b[2] * c[0] + a[0] * b[0] * c[2];
                l = l.max(lap.abs());
            }
        }
    }
    (g.sqrt(), l)
}
