//! Interaction potentials, three-body symmetry checks and the kinetic metric.

mod file;
mod grid;
mod metric;
mod profile;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{precondition, Error, Result};
use crate::quadrature::{ball_volume, gauss_legendre};

pub use file::{load_potential, parse_potential};
pub use grid::Grid;
pub use metric::{metric_matrix, MetricMatrix};
pub use profile::Profile;

/// Largest factor by which a coordinate permutation of three particles can
/// stretch the support radius in the (x₁−x₂, x₁−x₃) chart (golden ratio).
pub const PERMUTATION_STRETCH: f64 = 1.618_033_988_749_895;

pub type PointFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    /// g(|x|) on ℝ^d.
    RadialEuclidean(Profile),
    /// g(|M⁻¹x|): radial after the metric change of variables.
    RadialMetric {
        profile: Profile,
        metric: MetricMatrix,
    },
    /// g(|u|)·g(|v|)·g(|u − v|) for x = (u, v).
    PairProduct(Profile),
    Tabulated(Arc<Grid>),
    /// Average over the six particle permutations.
    Symmetrized(Arc<PotentialSpec>),
    /// y ↦ V(My).
    Pullback {
        inner: Arc<PotentialSpec>,
        metric: MetricMatrix,
    },
    /// λ⁻² V(x/λ).
    Scaled {
        inner: Arc<PotentialSpec>,
        lambda: f64,
    },
    Function {
        name: String,
        f: Arc<PointFn>,
    },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Zero => write!(f, "Zero"),
            PotentialKind::RadialEuclidean(p) => f.debug_tuple("RadialEuclidean").field(p).finish(),
            PotentialKind::RadialMetric { profile, .. } => {
                f.debug_tuple("RadialMetric").field(profile).finish()
            }
            PotentialKind::PairProduct(p) => f.debug_tuple("PairProduct").field(p).finish(),
            PotentialKind::Tabulated(g) => write!(f, "Tabulated(shape {:?})", g.shape),
            PotentialKind::Symmetrized(v) => f.debug_tuple("Symmetrized").field(&v.kind).finish(),
            PotentialKind::Pullback { inner, .. } => {
                f.debug_tuple("Pullback").field(&inner.kind).finish()
            }
            PotentialKind::Scaled { inner, lambda } => f
                .debug_struct("Scaled")
                .field("lambda", lambda)
                .field("inner", &inner.kind)
                .finish(),
            PotentialKind::Function { name, .. } => write!(f, "Function({name})"),
        }
    }
}

/// A bounded, non-negative, compactly supported potential on ℝ^d.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub dimension: usize,
    pub range_r0: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub symmetry_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub samples: usize,
    pub tolerance: f64,
    pub worst_violation: f64,
    pub worst_point: Vec<f64>,
    pub passed: bool,
}

const NORM_SAMPLES: usize = 200_000;
const NORM_SEED: u64 = 0x6e6f726d;

impl PotentialSpec {
    pub fn zero(dimension: usize) -> Self {
        Self {
            kind: PotentialKind::Zero,
            dimension,
            range_r0: 0.0,
            sup_norm: 0.0,
            l1_norm: 0.0,
            symmetry_flag: false,
        }
    }

    pub fn radial(profile: Profile, dimension: usize) -> Result<Self> {
        profile.validate()?;
        check_dimension(dimension)?;
        Ok(Self {
            range_r0: profile.support_radius(),
            sup_norm: profile.sup(),
            l1_norm: profile.l1_norm(dimension),
            kind: PotentialKind::RadialEuclidean(profile),
            dimension,
            symmetry_flag: false,
        })
    }

    /// g(|M⁻¹x|) on ℝ^{2k}; three-body symmetric for the physical metric.
    pub fn radial_in_metric(profile: Profile, metric: MetricMatrix) -> Result<Self> {
        profile.validate()?;
        let d = metric.dim();
        let (smax, _) = metric.singular_range();
        Ok(Self {
            range_r0: smax * profile.support_radius(),
            sup_norm: profile.sup(),
            l1_norm: metric.det_m * profile.l1_norm(d),
            kind: PotentialKind::RadialMetric { profile, metric },
            dimension: d,
            symmetry_flag: false,
        })
    }

    /// g(|x₁−x₂|) g(|x₁−x₃|) g(|x₂−x₃|) in the chart x = (x₁−x₂, x₁−x₃) ∈ ℝ⁶.
    pub fn pair_product(profile: Profile) -> Result<Self> {
        profile.validate()?;
        let l1 = pair_product_l1(&profile);
        Ok(Self {
            range_r0: 2f64.sqrt() * profile.support_radius(),
            sup_norm: profile.sup().powi(3),
            l1_norm: l1,
            kind: PotentialKind::PairProduct(profile),
            dimension: 6,
            symmetry_flag: false,
        })
    }

    pub fn tabulated(grid: Grid) -> Result<Self> {
        let d = grid.dim();
        check_dimension(d)?;
        Ok(Self {
            range_r0: grid.support_radius(),
            sup_norm: grid.sup(),
            l1_norm: grid.integral(),
            kind: PotentialKind::Tabulated(Arc::new(grid)),
            dimension: d,
            symmetry_flag: false,
        })
    }

    /// A potential given pointwise. Norms are estimated by seeded Monte Carlo
    /// on the ball of radius `range_r0`; negative samples are rejected.
    pub fn from_fn(
        name: &str,
        dimension: usize,
        range_r0: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dimension(dimension)?;
        if !(range_r0 > 0.0) {
            return precondition("range_R0 must be positive");
        }
        let f: Arc<PointFn> = Arc::new(f);
        let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
        let mut sum = 0.0;
        let mut sup = f(&vec![0.0; dimension]);
        for _ in 0..NORM_SAMPLES {
            let x = sample_ball(&mut rng, dimension, range_r0);
            let v = f(&x);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "potential `{name}` has value {v} at {x:?}"
                )));
            }
            sum += v;
            sup = sup.max(v);
        }
        Ok(Self {
            l1_norm: ball_volume(dimension, range_r0) * sum / NORM_SAMPLES as f64,
            sup_norm: sup,
            kind: PotentialKind::Function {
                name: name.to_string(),
                f,
            },
            dimension,
            range_r0,
            symmetry_flag: false,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::RadialEuclidean(g) => g.eval(norm(x)),
            PotentialKind::RadialMetric { profile, metric } => {
                profile.eval(norm(&metric.apply_inverse(x)))
            }
            PotentialKind::PairProduct(g) => {
                let k = x.len() / 2;
                let (u, v) = x.split_at(k);
                let d: f64 = u
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let gu = g.eval(norm(u));
                if gu == 0.0 {
                    return 0.0;
                }
                gu * g.eval(norm(v)) * g.eval(d)
            }
            PotentialKind::Tabulated(grid) => grid.eval(x),
            PotentialKind::Symmetrized(inner) => {
                three_body_images(x)
                    .iter()
                    .map(|y| inner.eval(y))
                    .sum::<f64>()
                    / 6.0
            }
            PotentialKind::Pullback { inner, metric } => inner.eval(&metric.apply(x)),
            PotentialKind::Scaled { inner, lambda } => {
                let y: Vec<f64> = x.iter().map(|c| c / lambda).collect();
                inner.eval(&y) / (lambda * lambda)
            }
            PotentialKind::Function { f, .. } => f(x),
        }
    }

    /// `Some((g, M))` when V(x) = g(|M⁻¹x|).
    pub fn metric_radial(&self) -> Option<(Profile, MetricMatrix)> {
        match &self.kind {
            PotentialKind::RadialEuclidean(g) if self.dimension % 2 == 0 => {
                Some((g.clone(), MetricMatrix::identity(self.dimension / 2)))
            }
            PotentialKind::RadialMetric { profile, metric } => Some((profile.clone(), *metric)),
            PotentialKind::Symmetrized(inner) => {
                // averaging a permutation-invariant function changes nothing
                let (g, m) = inner.metric_radial()?;
                (m == metric_matrix().with_factor_dim(m.factor_dim)).then_some((g, m))
            }
            PotentialKind::Scaled { inner, lambda } => {
                inner.metric_radial().map(|(g, m)| (g.rescaled(*lambda), m))
            }
            _ => None,
        }
    }

    /// `Some(g)` when V(x) = g(|x|) in Euclidean coordinates.
    pub fn radial_profile(&self) -> Option<Profile> {
        match &self.kind {
            PotentialKind::RadialEuclidean(g) => Some(g.clone()),
            PotentialKind::RadialMetric { profile, metric } if metric.is_identity() => {
                Some(profile.clone())
            }
            PotentialKind::Pullback { inner, metric } => {
                let (g, m) = inner.metric_radial()?;
                (m == *metric).then_some(g)
            }
            PotentialKind::Scaled { inner, lambda } => {
                inner.radial_profile().map(|g| g.rescaled(*lambda))
            }
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero) || self.sup_norm == 0.0
    }

    pub fn is_three_body(&self) -> bool {
        self.dimension % 2 == 0
    }

    /// λ⁻² V(·/λ).
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return precondition("scale factor must be positive");
        }
        let d = self.dimension;
        let mut out = match &self.kind {
            PotentialKind::RadialEuclidean(g) => Self::radial(g.rescaled(lambda), d)?,
            PotentialKind::RadialMetric { profile, metric } => {
                Self::radial_in_metric(profile.rescaled(lambda), *metric)?
            }
            PotentialKind::PairProduct(g) => {
                // g³ scales as λ⁻⁶, so rescale each factor by λ^{-2/3}
                let g = g
                    .rescaled(lambda)
                    .scaled_height(lambda.powf(2.0 - 2.0 / 3.0));
                Self::pair_product(g)?
            }
            _ => Self {
                kind: PotentialKind::Scaled {
                    inner: Arc::new(self.clone()),
                    lambda,
                },
                dimension: d,
                range_r0: self.range_r0 * lambda,
                sup_norm: self.sup_norm / (lambda * lambda),
                l1_norm: self.l1_norm * lambda.powi(d as i32 - 2),
                symmetry_flag: false,
            },
        };
        out.symmetry_flag = self.symmetry_flag;
        Ok(out)
    }

    /// The same potential multiplied by a constant.
    pub fn scaled_amplitude(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return precondition("amplitude factor must be non-negative");
        }
        let mut out = match &self.kind {
            PotentialKind::RadialEuclidean(g) => {
                Self::radial(g.scaled_height(factor), self.dimension)?
            }
            PotentialKind::RadialMetric { profile, metric } => {
                Self::radial_in_metric(profile.scaled_height(factor), *metric)?
            }
            PotentialKind::PairProduct(g) => Self::pair_product(g.scaled_height(factor.cbrt()))?,
            _ => {
                let inner = self.clone();
                let mut v = Self::from_fn("scaled", self.dimension, self.range_r0, move |x| {
                    factor * inner.eval(x)
                })?;
                v.l1_norm = factor * self.l1_norm;
                v.sup_norm = factor * self.sup_norm;
                v
            }
        };
        out.symmetry_flag = self.symmetry_flag;
        Ok(out)
    }

    /// Machine-readable description for reports.
    pub fn descriptor(&self) -> serde_json::Value {
        let kind = match &self.kind {
            PotentialKind::Zero => json!({"kind": "zero"}),
            PotentialKind::RadialEuclidean(g) => json!({"kind": "radial-euclidean", "params": g}),
            PotentialKind::RadialMetric { profile, metric } => {
                json!({"kind": "radial-metric", "params": profile, "metric_block": metric.block})
            }
            PotentialKind::PairProduct(g) => json!({"kind": "pair-product", "params": g}),
            PotentialKind::Tabulated(g) => {
                json!({"kind": "tabulated", "shape": g.shape, "spacing": g.spacing, "origin": g.origin})
            }
            PotentialKind::Symmetrized(inner) => {
                json!({"kind": "symmetrized", "inner": inner.descriptor()})
            }
            PotentialKind::Pullback { inner, metric } => {
                json!({"kind": "pullback", "metric_block": metric.block, "inner": inner.descriptor()})
            }
            PotentialKind::Scaled { inner, lambda } => {
                json!({"kind": "scaled", "lambda": lambda, "inner": inner.descriptor()})
            }
            PotentialKind::Function { name, .. } => json!({"kind": "function", "name": name}),
        };
        json!({
            "description": kind,
            "dimension": self.dimension,
            "range_R0": self.range_r0,
            "sup_norm": self.sup_norm,
            "l1_norm": self.l1_norm,
            "symmetry_flag": self.symmetry_flag,
        })
    }

    /// Validates the three-body symmetry and returns the certified potential.
    pub fn certify_symmetry(
        mut self,
        samples: usize,
        tol: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        validate_symmetry(&self, samples, tol, rng)?;
        self.symmetry_flag = true;
        Ok(self)
    }

    /// [`certify_symmetry`](Self::certify_symmetry) with 10⁴ samples, tolerance 1e-10 and a fixed seed.
    pub fn certified(self) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x53594d);
        self.certify_symmetry(10_000, 1e-10, &mut rng)
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if d == 0 {
        return precondition("dimension must be positive");
    }
    Ok(())
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Uniform sample from the ball of radius `r` in ℝ^d.
pub fn sample_ball(rng: &mut impl Rng, d: usize, r: f64) -> Vec<f64> {
    loop {
        // Box–Muller directions, radius by inverse CDF
        let mut x: Vec<f64> = (0..d)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let n = norm(&x);
        if n == 0.0 {
            continue;
        }
        let rho = r * rng.random::<f64>().powf(1.0 / d as f64);
        x.iter_mut().for_each(|c| *c *= rho / n);
        return x;
    }
}

/// The six images of x = (u, v) = (x₁−x₂, x₁−x₃) under permutations of the particles.
pub fn three_body_images(x: &[f64]) -> [Vec<f64>; 6] {
    let k = x.len() / 2;
    let (u, v) = x.split_at(k);
    // particle positions with x₁ = 0
    let p = |i: usize, c: usize| -> f64 {
        match i {
            0 => 0.0,
            1 => -u[c],
            _ => -v[c],
        }
    };
    let perms = [
        (0, 1, 2),
        (0, 2, 1),
        (1, 0, 2),
        (1, 2, 0),
        (2, 0, 1),
        (2, 1, 0),
    ];
    perms.map(|(a, b, c)| {
        let mut y = vec![0.0; 2 * k];
        for i in 0..k {
            y[i] = p(a, i) - p(b, i);
            y[k + i] = p(a, i) - p(c, i);
        }
        y
    })
}

/// Samples random (x, y) and checks invariance under all particle permutations.
pub fn validate_symmetry(
    v: &PotentialSpec,
    sample_count: usize,
    tol: f64,
    rng: &mut impl Rng,
) -> Result<SymmetryReport> {
    if !v.is_three_body() {
        return precondition(format!(
            "symmetry check needs an even dimension, got {}",
            v.dimension
        ));
    }
    let scale = v.sup_norm.max(f64::MIN_POSITIVE);
    let radius = 1.25 * v.range_r0.max(f64::MIN_POSITIVE);
    let mut worst = 0.0;
    let mut worst_point = vec![0.0; v.dimension];
    for _ in 0..sample_count {
        let x = sample_ball(rng, v.dimension, radius);
        let v0 = v.eval(&x);
        for y in three_body_images(&x).iter().skip(1) {
            let dv = (v.eval(y) - v0).abs() / scale;
            if dv > worst {
                worst = dv;
                worst_point = x.clone();
            }
        }
    }
    if worst > tol {
        return Err(Error::Asymmetric {
            worst,
            point: worst_point,
        });
    }
    Ok(SymmetryReport {
        samples: sample_count,
        tolerance: tol,
        worst_violation: worst,
        worst_point,
        passed: true,
    })
}

/// Averages a raw interaction over the six particle permutations.
pub fn symmetrize(v: &PotentialSpec) -> Result<PotentialSpec> {
    if !v.is_three_body() {
        return precondition("symmetrization needs a three-body potential");
    }
    Ok(PotentialSpec {
        kind: PotentialKind::Symmetrized(Arc::new(v.clone())),
        dimension: v.dimension,
        range_r0: v.range_r0 * PERMUTATION_STRETCH,
        sup_norm: v.sup_norm,
        // the permutation maps are unimodular
        l1_norm: v.l1_norm,
        symmetry_flag: false,
    })
}

/// The potential y ↦ V(My).
pub fn pullback_by_metric(v: &PotentialSpec, m: &MetricMatrix) -> Result<PotentialSpec> {
    if v.dimension != m.dim() {
        return precondition(format!(
            "metric acts on ℝ^{}, potential lives on ℝ^{}",
            m.dim(),
            v.dimension
        ));
    }
    if m.is_identity() {
        return Ok(v.clone());
    }
    let (_, smin) = m.singular_range();
    Ok(PotentialSpec {
        kind: PotentialKind::Pullback {
            inner: Arc::new(v.clone()),
            metric: *m,
        },
        dimension: v.dimension,
        range_r0: v.range_r0 / smin,
        sup_norm: v.sup_norm,
        l1_norm: v.l1_norm / m.det_m,
        symmetry_flag: v.symmetry_flag,
    })
}

/// ∫∫ g(|u|) g(|v|) g(|u − v|) du dv over ℝ³ × ℝ³.
fn pair_product_l1(g: &Profile) -> f64 {
    let r = g.support_radius();
    let (x, w) = gauss_legendre(24);
    let panels = 8;
    let mut edges = vec![0.0];
    edges.extend(g.breakpoints());
    edges.dedup();
    let mut nodes = Vec::new();
    for e in edges.windows(2) {
        let h = (e[1] - e[0]) / panels as f64;
        for p in 0..panels {
            let mid = e[0] + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push((mid + 0.5 * h * xi, 0.5 * h * wi));
            }
        }
    }
    let mut total = 0.0;
    for &(r1, w1) in &nodes {
        let g1 = g.eval(r1);
        if g1 == 0.0 {
            continue;
        }
        for &(r2, w2) in &nodes {
            let g2 = g.eval(r2);
            if g2 == 0.0 {
                continue;
            }
            // |u − v| = r12 ranges over [|r1 − r2|, min(r1 + r2, R)], dc = r12 dr12/(r1 r2)
            let lo = (r1 - r2).abs();
            let hi = (r1 + r2).min(r);
            if hi <= lo {
                continue;
            }
            let mut inner = 0.0;
            let mut e = vec![lo];
            e.extend(g.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
            e.push(hi);
            for s in e.windows(2) {
                let h = s[1] - s[0];
                for (xi, wi) in x.iter().zip(&w) {
                    let t = s[0] + 0.5 * h * (1.0 + xi);
                    inner += 0.5 * h * wi * g.eval(t) * t;
                }
            }
            total += w1 * w2 * g1 * g2 * r1 * r2 * inner;
        }
    }
    8.0 * std::f64::consts::PI * std::f64::consts::PI * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_product_l1_matches_monte_carlo() {
        let g = Profile::SmoothBump {
            height: 1.0,
            radius: 1.0,
        };
        let v = PotentialSpec::pair_product(g.clone()).unwrap();
        let f = PotentialSpec::from_fn("mc", 6, 2f64.sqrt(), move |x| {
            let (u, w) = x.split_at(3);
            let d = u
                .iter()
                .zip(w)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            g.eval(norm(u)) * g.eval(norm(w)) * g.eval(d)
        })
        .unwrap();
        assert!(
            (v.l1_norm - f.l1_norm).abs() < 0.03 * v.l1_norm,
            "{} vs {}",
            v.l1_norm,
            f.l1_norm
        );
    }

    #[test]
    fn radial_metric_is_permutation_symmetric() {
        let v = PotentialSpec::radial_in_metric(
            Profile::Tent {
                height: 2.0,
                radius: 1.0,
            },
            metric_matrix(),
        )
        .unwrap();
        assert!(v.certified().unwrap().symmetry_flag);
    }

    #[test]
    fn euclidean_radial_six_dim_is_not_symmetric() {
        let v = PotentialSpec::radial(
            Profile::Tent {
                height: 2.0,
                radius: 1.0,
            },
            6,
        )
        .unwrap();
        assert!(matches!(v.certified(), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn pullback_of_metric_radial_is_radial() {
        let g = Profile::Gaussian {
            height: 1.0,
            width: 0.4,
            radius: 1.0,
        };
        let m = metric_matrix();
        let v = PotentialSpec::radial_in_metric(g.clone(), m).unwrap();
        let p = pullback_by_metric(&v, &m).unwrap();
        assert_eq!(p.radial_profile(), Some(g.clone()));
        let y = [0.1, -0.2, 0.3, 0.05, 0.2, -0.1];
        assert!((p.eval(&y) - g.eval(norm(&y))).abs() < 1e-14);
        assert!((p.l1_norm - g.l1_norm(6)).abs() < 1e-12 * p.l1_norm);
    }

    #[test]
    fn images_include_identity_and_swap() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let im = three_body_images(&x);
        assert_eq!(im[0], x.to_vec());
        assert_eq!(im[1], vec![4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
    }
}
