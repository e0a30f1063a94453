use serde::Serialize;

use crate::error::{precondition, Error, Result};

/// Model for b_R as a function of the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitForm {
    /// 1/b_R = 1/b − c/R^{d−2}; exact for radial potentials supported inside R.
    Reciprocal,
    /// b_R = b + c/R^{d−2}.
    Linear,
}

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub b: f64,
    pub c: f64,
    /// RMS misfit of the model, mapped to units of b.
    pub uncertainty: f64,
    pub form: FitForm,
}

/// Least-squares fit of (R, b_R) pairs to the chosen model.
pub fn extrapolate_to_infinity(
    values: &[(f64, f64)],
    d: usize,
    form: FitForm,
) -> Result<Extrapolation> {
    if values.len() < 3 {
        return precondition("extrapolation needs at least three radii");
    }
    if d < 3 {
        return precondition("extrapolation in R needs d ≥ 3");
    }
    if values.iter().any(|(r, b)| !(*r > 0.0) || !b.is_finite()) {
        return precondition("radii must be positive and energies finite");
    }
    if values.iter().all(|(_, b)| *b == 0.0) {
        return Ok(Extrapolation {
            b: 0.0,
            c: 0.0,
            uncertainty: 0.0,
            form,
        });
    }
    let p = d as i32 - 2;
    let xs: Vec<f64> = values.iter().map(|(r, _)| r.powi(-p)).collect();
    let ys: Vec<f64> = values
        .iter()
        .map(|(_, b)| match form {
            FitForm::Reciprocal => 1.0 / b,
            FitForm::Linear => *b,
        })
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let spread = (sxx / n).sqrt() / mx;
    if spread < 1e-3 {
        return Err(Error::InvalidInput(format!(
            "radii too clustered for extrapolation (relative spread {spread:.2e})"
        )));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(match form {
        FitForm::Reciprocal => {
            let b = 1.0 / intercept;
            Extrapolation {
                b,
                c: -slope,
                uncertainty: rms * b * b,
                form,
            }
        }
        FitForm::Linear => Extrapolation {
            b: intercept,
            c: slope,
            uncertainty: rms,
            form,
        },
    })
}

/// Richardson extrapolation of a second-order quantity from spacings h and h/2.
pub fn richardson(coarse: f64, fine: f64) -> (f64, f64) {
    let value = (4.0 * fine - coarse) / 3.0;
    (value, (fine - value).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn hard_sphere(r: f64) -> f64 {
        8.0 * PI / (1.0 - 1.0 / r)
    }

    #[test]
    fn reciprocal_fit_is_exact_for_hard_sphere() {
        let v: Vec<_> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&r| (r, hard_sphere(r)))
            .collect();
        let e = extrapolate_to_infinity(&v, 3, FitForm::Reciprocal).unwrap();
        assert!((e.b - 8.0 * PI).abs() < 1e-12 * 8.0 * PI);
        let lin = extrapolate_to_infinity(&v, 3, FitForm::Linear).unwrap();
        assert!(((lin.b - 8.0 * PI) / (8.0 * PI)).abs() > 0.02);
    }

    #[test]
    fn constant_sequence() {
        let v = [(2.0, 3.5), (3.0, 3.5), (5.0, 3.5)];
        for form in [FitForm::Reciprocal, FitForm::Linear] {
            let e = extrapolate_to_infinity(&v, 6, form).unwrap();
            assert!((e.b - 3.5).abs() < 1e-12 && e.c.abs() < 1e-10);
        }
    }

    #[test]
    fn clustered_radii_are_rejected() {
        let v = [(4.0, 1.0), (4.0, 1.1), (4.0 + 1e-9, 1.2)];
        assert!(extrapolate_to_infinity(&v, 3, FitForm::Reciprocal).is_err());
    }
}
