use std::f64::consts::PI;

use bose3b_core::potentials::{metric_matrix, PotentialSpec, Profile};
use bose3b_core::scattering::{
    extrapolate_to_infinity, hard_sphere_energy, integral_energy, modified_scattering_energy,
    radial_estimate, solve_radial, solve_variational, steep_wall_continuation,
    variational_estimate, FitForm, Route, ScatteringOptions,
};
use proptest::prelude::*;

/// 8π(a − tanh(κa)/κ) with κ = √(V₀/2), the exact wall value in d = 3.
fn wall_energy_3d(height: f64, a: f64) -> f64 {
    let k = (0.5 * height).sqrt();
    8.0 * PI * (a - (k * a).tanh() / k)
}

fn coarse() -> ScatteringOptions {
    ScatteringOptions {
        cells_per_range: 100,
        ..ScatteringOptions::default()
    }
}

#[test]
fn radial_wall_matches_closed_form() {
    for height in [1.0, 10.0, 200.0] {
        let g = Profile::Wall {
            height,
            radius: 1.0,
        };
        let (est, sol) = radial_estimate(&g, 3, &ScatteringOptions::default()).unwrap();
        let exact = wall_energy_3d(height, 1.0);
        assert!(
            (est.value - exact).abs() < 1e-5 * exact,
            "V0 = {height}: {} vs {exact}",
            est.value
        );
        assert!(sol.f_values.iter().all(|f| *f > 0.0 && *f <= 1.0));
        assert_eq!(est.route, Route::Radial);
    }
}

#[test]
fn hard_sphere_closed_forms() {
    assert!((hard_sphere_energy(3, 1.0) - 8.0 * PI).abs() < 1e-12);
    assert!((hard_sphere_energy(6, 1.0) - 8.0 * PI.powi(3)).abs() < 1e-10);
    assert!((hard_sphere_energy(6, 2.0) - 8.0 * PI.powi(3) * 16.0).abs() < 1e-9);
}

#[test]
fn steep_walls_approach_hard_sphere() {
    let opts = ScatteringOptions::default();
    let est = steep_wall_continuation(3, 1.0, 1e4, &opts).unwrap();
    let hs = 8.0 * PI;
    assert!((est.value - hs).abs() < 0.015 * hs, "{} vs {hs}", est.value);
    // a single wall of height 1e4 is already within 1.5%
    let (single, _) = radial_estimate(
        &Profile::Wall {
            height: 1e4,
            radius: 1.0,
        },
        3,
        &opts,
    )
    .unwrap();
    assert!(single.value < hs && single.value > 0.985 * hs);
}

#[test]
fn hard_sphere_truncated_sequence_extrapolates() {
    let a = 1.0;
    let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0]
        .iter()
        .map(|r| (*r, 8.0 * PI * a / (1.0 - a / r)))
        .collect();
    let fit = extrapolate_to_infinity(&pts, 3, FitForm::Reciprocal).unwrap();
    assert!((fit.b - 8.0 * PI).abs() < 1e-12 * 8.0 * PI, "{}", fit.b);
    assert!(fit.uncertainty < 1e-10);
    // the additive form carries the O(1/R²) tail of this sequence
    let lin = extrapolate_to_infinity(&pts, 3, FitForm::Linear).unwrap();
    assert!((lin.b - 8.0 * PI).abs() < 0.05 * 8.0 * PI);
}

#[test]
fn constant_sequence_is_its_own_limit() {
    let pts = [(4.0, 2.5), (6.0, 2.5), (8.0, 2.5)];
    let fit = extrapolate_to_infinity(&pts, 6, FitForm::Linear).unwrap();
    assert!((fit.b - 2.5).abs() < 1e-14);
    assert!(fit.c.abs() < 1e-12);
}

#[test]
fn truncated_wall_matches_annulus_minimizer() {
    // a wall of height V₀ inside r ≤ a, Dirichlet at R: 1/b_R = 1/b − 1/(8πR)
    let (height, a, r) = (40.0, 1.0, 3.0);
    let v = PotentialSpec::radial(Profile::Wall { height, radius: a }, 3).unwrap();
    let b = wall_energy_3d(height, a);
    let exact = 1.0 / (1.0 / b - 1.0 / (8.0 * PI * r));
    let sol = solve_variational(&v, r, 1e-3, &ScatteringOptions::default()).unwrap();
    assert!(
        (sol.b_value - exact).abs() < 1e-4 * exact,
        "{} vs {exact}",
        sol.b_value
    );
}

#[test]
fn truncated_energy_decreases_with_radius() {
    let v = PotentialSpec::radial(
        Profile::Tent {
            height: 20.0,
            radius: 1.0,
        },
        3,
    )
    .unwrap();
    let opts = ScatteringOptions::default();
    let vals: Vec<f64> = [1.5, 2.0, 4.0, 8.0]
        .iter()
        .map(|r| solve_variational(&v, *r, 5e-3, &opts).unwrap().b_value)
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn routes_agree_on_bounded_potential() {
    let g = Profile::SmoothBump {
        height: 15.0,
        radius: 1.0,
    };
    let v = PotentialSpec::radial(g.clone(), 3).unwrap();
    let opts = ScatteringOptions::default();
    let var = variational_estimate(&v, &opts).unwrap();
    let (rad, sol) = radial_estimate(&g, 3, &opts).unwrap();
    assert!(
        (var.value - rad.value).abs() < 1e-3 * rad.value,
        "{} vs {}",
        var.value,
        rad.value
    );
    let direct = integral_energy(&sol, &v).unwrap();
    assert!((direct - sol.b_value).abs() < 1e-10 * direct);
}

#[test]
fn forced_unit_field_gives_l1_norm() {
    let g = Profile::Tent {
        height: 5.0,
        radius: 1.0,
    };
    let v = PotentialSpec::radial(g.clone(), 3).unwrap();
    let mut sol = solve_radial(&g, 3, 1.0, 1e-3).unwrap();
    sol.f_values.iter_mut().for_each(|f| *f = 1.0);
    let born = integral_energy(&sol, &v).unwrap();
    assert!(
        (born - v.l1_norm).abs() < 1e-6 * v.l1_norm,
        "{born} vs {}",
        v.l1_norm
    );
}

#[test]
fn nested_indicators_are_monotone() {
    let mut last = 0.0;
    for radius in [0.5, 0.75, 1.0] {
        let g = Profile::Wall {
            height: 10.0,
            radius,
        };
        let b = solve_radial(&g, 3, radius, radius / 400.0).unwrap().b_value;
        assert!(b > last);
        last = b;
    }
    let mut last = 0.0;
    for height in [1.0, 2.0, 4.0, 8.0] {
        let g = Profile::Wall {
            height,
            radius: 1.0,
        };
        let b = solve_radial(&g, 6, 1.0, 1.0 / 400.0).unwrap().b_value;
        assert!(b > last);
        last = b;
    }
}

#[test]
fn modified_energy_of_zero_is_zero() {
    let v = PotentialSpec {
        symmetry_flag: true,
        ..PotentialSpec::zero(6)
    };
    let (est, _) = modified_scattering_energy(&v, &ScatteringOptions::default()).unwrap();
    assert_eq!(est.value, 0.0);
}

#[test]
fn modified_energy_is_det_m_times_radial_energy() {
    let g = Profile::Tent {
        height: 6.0,
        radius: 1.0,
    };
    let v = PotentialSpec::radial_in_metric(g.clone(), metric_matrix())
        .unwrap()
        .certified()
        .unwrap();
    let opts = coarse();
    let (bm, _) = modified_scattering_energy(&v, &opts).unwrap();
    let (b6, _) = radial_estimate(&g, 6, &opts).unwrap();
    let det = 0.75f64.powf(1.5);
    assert!((bm.value - det * b6.value).abs() < 1e-12 * bm.value);
}

#[test]
fn modified_energy_requires_certified_symmetry() {
    let v = PotentialSpec::radial_in_metric(
        Profile::Tent {
            height: 6.0,
            radius: 1.0,
        },
        metric_matrix(),
    )
    .unwrap();
    assert!(modified_scattering_energy(&v, &coarse()).is_err());
}

#[test]
fn modified_energy_scales_with_fourth_power() {
    let g = Profile::SmoothBump {
        height: 4.0,
        radius: 1.0,
    };
    let v = PotentialSpec::radial_in_metric(g, metric_matrix())
        .unwrap()
        .certified()
        .unwrap();
    let opts = coarse();
    let (b1, _) = modified_scattering_energy(&v, &opts).unwrap();
    let (b2, _) = modified_scattering_energy(&v.rescaled(2.0).unwrap(), &opts).unwrap();
    assert!(
        (b2.value - 16.0 * b1.value).abs() < 1e-6 * b2.value,
        "{} vs {}",
        b2.value,
        16.0 * b1.value
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn born_bound_and_positivity(height in 0.01f64..500.0, radius in 0.2f64..3.0, d in 3usize..7) {
        let g = Profile::Tent { height, radius };
        let sol = solve_radial(&g, d, radius, radius / 200.0).unwrap();
        prop_assert!(sol.b_value > 0.0);
        prop_assert!(sol.b_value <= g.l1_norm(d) * (1.0 + 1e-9));
        prop_assert!(sol.f_values.iter().all(|f| *f > 0.0 && *f <= 1.0));
    }

    #[test]
    fn lockstep_scaling_law(height in 0.5f64..50.0, lambda in prop::sample::select(vec![0.5, 2.0, 4.0]), d in prop::sample::select(vec![3usize, 6])) {
        let g = Profile::SmoothBump { height, radius: 1.0 };
        let gl = g.rescaled(lambda);
        let b = solve_radial(&g, d, 1.0, 1.0 / 200.0).unwrap().b_value;
        let bl = solve_radial(&gl, d, lambda, lambda / 200.0).unwrap().b_value;
        let expected = lambda.powi(d as i32 - 2) * b;
        prop_assert!((bl - expected).abs() < 1e-6 * expected, "{} vs {}", bl, expected);
    }
}
