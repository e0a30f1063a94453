//! Small quadrature and geometry helpers.

use std::f64::consts::PI;

/// Surface area |S^{d-1}| of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1);
    // |S^0| = 2, |S^1| = 2π, |S^{d+1}| = 2π/d |S^{d-1}|
    let (mut area, mut k) = if d % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < d {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// Volume of the ball of radius `r` in R^d.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    sphere_area(d) / d as f64 * r.powi(d as i32)
}

/// Volume of the annulus {r1 <= |x| <= r2} in R^d.
pub fn annulus_volume(d: usize, r1: f64, r2: f64) -> f64 {
    sphere_area(d) / d as f64 * (r2.powi(d as i32) - r1.powi(d as i32))
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over [a, b] with `pieces` Gauss–Legendre panels of order `order`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Binomial coefficient as f64.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c
}
