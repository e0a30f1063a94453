use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial shape g(r) of a compactly supported potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum Profile {
    /// `height` on r ≤ radius.
    Wall { height: f64, radius: f64 },
    /// `height·(1 − r/radius)` on r ≤ radius.
    Tent { height: f64, radius: f64 },
    /// `height·exp(−r²/(2 width²))` truncated at `radius`.
    Gaussian {
        height: f64,
        width: f64,
        radius: f64,
    },
    /// `height·(1 − (r/radius)²)²` on r ≤ radius.
    SmoothBump { height: f64, radius: f64 },
    /// `height` on inner ≤ r ≤ outer.
    Annulus { height: f64, inner: f64, outer: f64 },
    /// Piecewise-linear table on r = i·dr, zero beyond the last node.
    Tabulated { dr: f64, values: Vec<f64> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            Profile::Wall { height, radius }
            | Profile::Tent { height, radius }
            | Profile::SmoothBump { height, radius } => {
                if !(*height >= 0.0 && height.is_finite()) {
                    return bad("profile height must be finite and non-negative");
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("profile radius must be positive");
                }
            }
            Profile::Gaussian {
                height,
                width,
                radius,
            } => {
                if !(*height >= 0.0 && height.is_finite()) || !(*width > 0.0) || !(*radius > 0.0) {
                    return bad("gaussian needs height ≥ 0, width > 0, radius > 0");
                }
            }
            Profile::Annulus {
                height,
                inner,
                outer,
            } => {
                if !(*height >= 0.0 && height.is_finite()) || !(*inner >= 0.0) || !(*outer > *inner)
                {
                    return bad("annulus needs height ≥ 0 and 0 ≤ inner < outer");
                }
            }
            Profile::Tabulated { dr, values } => {
                if !(*dr > 0.0) || values.len() < 2 {
                    return bad("tabulated profile needs dr > 0 and at least two values");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated profile values must be finite and non-negative");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Wall { height, radius } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            Profile::Tent { height, radius } => {
                if r < *radius {
                    height * (1.0 - r / radius)
                } else {
                    0.0
                }
            }
            Profile::Gaussian {
                height,
                width,
                radius,
            } => {
                if r <= *radius {
                    height * (-0.5 * (r / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Profile::SmoothBump { height, radius } => {
                if r < *radius {
                    let t = 1.0 - (r / radius).powi(2);
                    height * t * t
                } else {
                    0.0
                }
            }
            Profile::Annulus {
                height,
                inner,
                outer,
            } => {
                if r >= *inner && r <= *outer {
                    *height
                } else {
                    0.0
                }
            }
            Profile::Tabulated { dr, values } => {
                let x = r / dr;
                let i = x.floor();
                if i < 0.0 {
                    return values[0];
                }
                let i = i as usize;
                if i + 1 >= values.len() {
                    return if i + 1 == values.len() && x == i as f64 {
                        values[i]
                    } else {
                        0.0
                    };
                }
                let t = x - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }

    /// Radius beyond which the profile vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::Wall { radius, .. }
            | Profile::Tent { radius, .. }
            | Profile::Gaussian { radius, .. }
            | Profile::SmoothBump { radius, .. } => *radius,
            Profile::Annulus { outer, .. } => *outer,
            Profile::Tabulated { dr, values } => {
                let sup = values.iter().cloned().fold(0.0, f64::max);
                let last = values.iter().rposition(|v| *v > 1e-14 * sup).unwrap_or(0);
                (last + 1).min(values.len() - 1) as f64 * dr
            }
        }
    }

    /// Points where the profile is not smooth (quadrature panels should align with them).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Annulus { inner, outer, .. } => {
                if *inner > 0.0 {
                    vec![*inner, *outer]
                } else {
                    vec![*outer]
                }
            }
            Profile::Tabulated { dr, values } => (1..values.len()).map(|i| i as f64 * dr).collect(),
            _ => vec![self.support_radius()],
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Profile::Wall { height, .. }
            | Profile::Tent { height, .. }
            | Profile::Gaussian { height, .. }
            | Profile::SmoothBump { height, .. }
            | Profile::Annulus { height, .. } => *height,
            Profile::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// The profile of λ^{-2} g(r/λ).
    pub fn rescaled(&self, lambda: f64) -> Profile {
        let s = lambda.powi(-2);
        match self {
            Profile::Wall { height, radius } => Profile::Wall {
                height: height * s,
                radius: radius * lambda,
            },
            Profile::Tent { height, radius } => Profile::Tent {
                height: height * s,
                radius: radius * lambda,
            },
            Profile::Gaussian {
                height,
                width,
                radius,
            } => Profile::Gaussian {
                height: height * s,
                width: width * lambda,
                radius: radius * lambda,
            },
            Profile::SmoothBump { height, radius } => Profile::SmoothBump {
                height: height * s,
                radius: radius * lambda,
            },
            Profile::Annulus {
                height,
                inner,
                outer,
            } => Profile::Annulus {
                height: height * s,
                inner: inner * lambda,
                outer: outer * lambda,
            },
            Profile::Tabulated { dr, values } => Profile::Tabulated {
                dr: dr * lambda,
                values: values.iter().map(|v| v * s).collect(),
            },
        }
    }

    /// The same shape with its amplitude multiplied by `factor`.
    pub fn scaled_height(&self, factor: f64) -> Profile {
        let mut p = self.clone();
        match &mut p {
            Profile::Wall { height, .. }
            | Profile::Tent { height, .. }
            | Profile::Gaussian { height, .. }
            | Profile::SmoothBump { height, .. }
            | Profile::Annulus { height, .. } => *height *= factor,
            Profile::Tabulated { values, .. } => values.iter_mut().for_each(|v| *v *= factor),
        }
        p
    }

    /// ∫_{ℝ^d} g(|x|) dx.
    pub fn l1_norm(&self, d: usize) -> f64 {
        let area = crate::quadrature::sphere_area(d);
        area * self.radial_moment(d - 1)
    }

    /// ∫_0^∞ g(r) r^p dr, exact for the piecewise-polynomial profiles.
    pub fn radial_moment(&self, p: usize) -> f64 {
        let mut edges = vec![0.0];
        edges.extend(self.breakpoints());
        edges.dedup();
        let mut total = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let pieces = if matches!(self, Profile::Gaussian { .. }) {
                16
            } else {
                1
            };
            total += crate::quadrature::integrate(
                |r| self.eval_open(r, a, b) * r.powi(p as i32),
                a,
                b,
                pieces,
                (p + 8).div_ceil(2).max(6),
            );
        }
        total
    }

    /// Evaluates on the open panel (a, b), avoiding the jump at panel edges.
    fn eval_open(&self, r: f64, a: f64, b: f64) -> f64 {
        let r = r.clamp(a + 1e-15 * (b - a), b - 1e-15 * (b - a));
        self.eval(r)
    }
}
