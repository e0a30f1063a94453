use std::collections::BTreeMap;

use bose3b_core::lowerbound::{
    assemble_thermo_lower, box_statistics, expectation_wu, exponent_terms, leading_table,
    lower_hull, nu, optimize_exponent, optimize_exponent_with, temple_box_bound,
    temple_lower_bound, validate_window, BoxGeometry, ClusteredSampler, EqualFill, GapModel,
    OccupancySampler, TempleOptions, TempleParameters, UniformPlacement,
};
use bose3b_core::quadrature::annulus_volume;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn window_examples() {
    let w = validate_window(0.5, 0.19);
    assert!(w.valid);
    assert!(close(w.beta_window.0, 1.0 / 6.0, 1e-15));
    assert!(close(w.beta_window.1, 5.0 / 24.0, 1e-15));
    assert!(!validate_window(1.0 / 3.0, 0.01).valid);
    assert!(!validate_window(0.6, 0.28).valid);
    assert!(validate_window(0.55, 0.23).valid);
    let bad = validate_window(0.5, 0.25);
    assert!(!bad.valid);
    assert_eq!(bad.violations.len(), 1);
}

#[test]
fn window_matches_analytic_description_on_grid() {
    for i in 1..1000 {
        let alpha = i as f64 * 1e-3;
        let inside_alpha = alpha > 1.0 / 3.0 && alpha < 0.6;
        if inside_alpha {
            assert!(
                alpha - 1.0 / 3.0 < (7.0 * alpha - 1.0) / 12.0,
                "empty β-window at α = {alpha}"
            );
        }
        for j in 0..400 {
            let beta = j as f64 * 1e-3;
            let analytic =
                inside_alpha && beta > alpha - 1.0 / 3.0 && beta < (7.0 * alpha - 1.0) / 12.0;
            assert_eq!(
                validate_window(alpha, beta).valid,
                analytic,
                "α = {alpha}, β = {beta}"
            );
        }
    }
}

#[test]
fn exponents_at_the_reference_point() {
    let t = exponent_terms(0.5, 0.19);
    let expected = [0.07, 0.19, 0.31, 0.11, 0.5, 1.5];
    for (a, b) in t.iter().zip(expected) {
        assert!(close(*a, b, 1e-12), "{t:?}");
    }
    assert!(close(nu(0.5, 0.19), 0.07, 1e-12));
}

#[test]
fn optimizer_beats_reference_point() {
    let opt = optimize_exponent();
    assert!(opt.nu > 0.07);
    assert!(opt.grid_nu > 0.07);
    assert!(opt.nu >= opt.grid_nu);
    assert!(
        validate_window(opt.alpha, opt.beta).valid || opt.nu <= nu(opt.alpha, opt.beta) + 1e-12
    );
    let fine = optimize_exponent_with(800);
    assert!(fine.grid_nu >= opt.grid_nu - 1e-12);
    assert!(close(fine.nu, opt.nu, 1e-12));
    // no grid point at double resolution exceeds the vertex value
    assert!(fine.grid_nu <= opt.nu + 1e-12);
}

#[test]
fn window_edges_are_degenerate() {
    for i in 1..100 {
        let alpha = 1.0 / 3.0 + (0.6 - 1.0 / 3.0) * i as f64 / 100.0;
        assert!(nu(alpha, alpha - 1.0 / 3.0) <= 1e-12);
        assert!(nu(alpha, (7.0 * alpha - 1.0) / 12.0) <= 1e-12);
    }
}

fn reference_params(y: f64) -> TempleParameters {
    TempleParameters::new(y, 1.0, 0.5, 0.19, None).unwrap()
}

#[test]
fn temple_error_exponents_at_reference_point() {
    let p = reference_params(1e-4);
    assert!(close(p.epsilon, 1e-4f64.powf(0.11), 1e-15));
    let n = (p.rho * p.ell.powi(3)).round() as usize;
    let r = temple_lower_bound(&p, n, &TempleOptions::default()).unwrap();
    let exps: Vec<f64> = r.error_terms.iter().map(|t| t.exponent).collect();
    for (a, b) in exps.iter().zip([0.07, 0.19, 0.31, 0.11, 0.11]) {
        assert!(close(*a, b, 1e-9), "{exps:?}");
    }
    assert!(close(r.nu.unwrap(), 0.07, 1e-9));
    // the two ε-terms coincide
    let (e1, e2) = (r.error_terms[3].value, r.error_terms[4].value);
    assert!((e1 - e2).abs() <= 1e-14 * e1);
}

#[test]
fn relative_correction_shrinks_with_y() {
    let rel = |y: f64| {
        let p = reference_params(y);
        let n = (p.rho * p.ell.powi(3)).round() as usize;
        let r = temple_lower_bound(&p, n, &TempleOptions::default()).unwrap();
        r.analytic_correction.unwrap() / r.leading_term
    };
    let (a, b) = (rel(1e-4), rel(1e-5));
    assert!(a / b >= 10f64.powf(0.07), "{a} → {b}");
}

#[test]
fn small_particle_numbers_have_no_leading_term() {
    let p = reference_params(1e-4);
    for n in 0..3 {
        let w = expectation_wu(&p, n, &TempleOptions::default()).unwrap();
        assert_eq!(w.leading, 0.0);
        assert_eq!(w.lower, 0.0);
        let r = temple_lower_bound(&p, n, &TempleOptions::default()).unwrap();
        assert_eq!(r.leading_term, 0.0);
        if let Some(b) = r.asymptotic_bound {
            assert!(close(b, -r.analytic_correction.unwrap(), 1e-15));
            assert!(b <= 0.0);
        }
    }
}

#[test]
fn scale_free_upper_estimate() {
    let p = reference_params(1e-4);
    let w = expectation_wu(&p, 10, &TempleOptions::default()).unwrap();
    assert!(close(w.scale_free_upper.unwrap(), 1e-2, 1e-15));
    assert!(expectation_wu(&p, 100_000, &TempleOptions::default()).is_err());
}

#[test]
fn epsilon_dominates_the_perturbation_scale() {
    for y in [1e-2f64, 1e-4, 1e-8] {
        for i in 1..60 {
            let alpha = 1.0 / 3.0 + (0.6 - 1.0 / 3.0) * i as f64 / 60.0;
            let (lo, hi) = validate_window(alpha, 0.0).beta_window;
            for j in 1..20 {
                let beta = lo + (hi - lo) * j as f64 / 20.0;
                let eps = y.powf((7.0 * alpha - 12.0 * beta - 1.0) / 2.0);
                assert!(
                    eps > y.powf(3.0 - 5.0 * alpha),
                    "α = {alpha}, β = {beta}, Y = {y}"
                );
            }
        }
    }
}

/// Uniform density U_R(y) = R⁻⁶U(y/R) of the annulus in ℝ⁶.
fn u_r(g: &BoxGeometry, y: &[f64]) -> f64 {
    let s = y.iter().map(|c| c * c).sum::<f64>().sqrt() / g.r;
    if s >= g.u_r1 && s <= g.u_r2 {
        g.r.powi(-6) / annulus_volume(6, g.u_r1, g.u_r2)
    } else {
        0.0
    }
}

#[test]
fn three_particle_expectation_matches_monte_carlo() {
    let g = BoxGeometry {
        b_m: 1.0,
        ell: 30.0,
        n: 3,
        r0: 0.1,
        r: 0.25,
        eta: 0.5,
        epsilon: 0.5,
        u_r1: 0.4,
        u_r2: 1.0,
    };
    let opts = TempleOptions {
        u_r1: g.u_r1,
        u_r2: g.u_r2,
        ..TempleOptions::default()
    };
    let rep = temple_box_bound(&g, &opts).unwrap();
    let dyson = rep.expectation_wu_upper / rep.leading_term;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let samples = 4_000_000;
    let half_eta = 0.5 * (1.0 - g.eta);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..samples {
        let x: [[f64; 3]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5)));
        let mut acc = 0.0;
        for (i, j, k) in [
            (0, 1, 2),
            (0, 2, 1),
            (1, 0, 2),
            (1, 2, 0),
            (2, 0, 1),
            (2, 1, 0),
        ] {
            if x[i].iter().any(|c| c.abs() > half_eta) {
                continue;
            }
            let y: Vec<f64> = (0..3)
                .map(|c| x[i][c] - x[j][c])
                .chain((0..3).map(|c| x[i][c] - x[k][c]))
                .collect();
            acc += u_r(&g, &y);
        }
        sum += acc;
        sum2 += acc * acc;
    }
    let mean = sum / samples as f64;
    let sigma = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
    // ⟨W_U⟩ = b/(6ℓ⁴)·(Dyson factor)·Σ over ordered triples
    let prefactor = g.b_m / (6.0 * g.ell.powi(4)) * dyson;
    let mc = prefactor * mean;
    assert!(
        (mc - rep.expectation_wu).abs() < (3.0 * sigma * prefactor).max(0.01 * rep.expectation_wu),
        "MC {mc} ± {} vs {}",
        sigma * prefactor,
        rep.expectation_wu
    );
    assert!(sigma * prefactor < 0.03 * mc);
}

#[test]
fn failed_temple_condition_emits_no_bound() {
    let g = BoxGeometry {
        b_m: 1.0,
        ell: 2.0,
        n: 8,
        r0: 0.01,
        r: 0.2,
        eta: 0.4,
        epsilon: 1e-6,
        u_r1: 0.25,
        u_r2: 1.0,
    };
    let r = temple_box_bound(&g, &TempleOptions::default()).unwrap();
    assert!(!r.cond_temple);
    assert!(!r.valid);
    assert!(r.lower_bound.is_none());
    assert!(!r.diagnostics.is_empty());
}

#[test]
fn valid_bound_stays_below_leading_term() {
    let g = BoxGeometry {
        b_m: 1.0,
        ell: 40.0,
        n: 3,
        r0: 1.0,
        r: 0.3,
        eta: 0.6,
        epsilon: 0.5,
        u_r1: 0.25,
        u_r2: 1.0,
    };
    for gap in [GapModel::Continuum, GapModel::Discrete { sites: 6 }] {
        let opts = TempleOptions {
            gap,
            ..TempleOptions::default()
        };
        let r = temple_box_bound(&g, &opts).unwrap();
        assert!(r.valid, "{:?}", r.diagnostics);
        let lb = r.lower_bound.unwrap();
        assert!(lb <= r.leading_term);
        assert!(lb > 0.0);
        assert!(close(
            r.gap_continuum,
            0.5 * std::f64::consts::PI.powi(2),
            1e-14
        ));
    }
    assert!(GapModel::Discrete { sites: 6 }.unit_gap() < GapModel::Continuum.unit_gap());
}

#[test]
fn equal_fill_is_a_point_mass() {
    let s = EqualFill { m: 4, k0: 3 };
    let stats = box_statistics(&s, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(stats.c_k, vec![0.0, 0.0, 0.0, 1.0]);
    assert_eq!(stats.rho_ell3, 3.0);
}

#[test]
fn sum_rules_hold_for_every_sampler() {
    let samplers: Vec<Box<dyn OccupancySampler>> = vec![
        Box::new(EqualFill { m: 3, k0: 2 }),
        Box::new(UniformPlacement { m: 5, n: 200 }),
        Box::new(UniformPlacement { m: 8, n: 37 }),
        Box::new(ClusteredSampler {
            m: 4,
            n: 90,
            cluster: 7,
        }),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for s in &samplers {
        let stats = box_statistics(s.as_ref(), 3000, &mut rng).unwrap();
        let expected = s.particles() as f64 / s.boxes_per_side().pow(3) as f64;
        assert!((stats.sum_rule_total - 1.0).abs() < 1e-10);
        assert!((stats.sum_rule_mean - expected).abs() < 1e-10);
        assert!(stats.c_k.iter().all(|c| *c >= 0.0));
    }
}

fn poisson(lambda: f64) -> impl Fn(usize) -> f64 {
    move |k| {
        (-lambda + k as f64 * lambda.ln() - (1..=k).map(|j| (j as f64).ln()).sum::<f64>()).exp()
    }
}

#[test]
fn uniform_placement_approaches_poisson() {
    let lambda = 2.0;
    let m = 20;
    let s = UniformPlacement {
        m,
        n: (lambda * (m * m * m) as f64) as usize,
    };
    let stats = box_statistics(&s, 2000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let tv = stats.total_variation(poisson(lambda));
    assert!(tv < 0.01, "TV = {tv}");
}

#[test]
fn occupation_statistics_are_seed_deterministic() {
    let s = UniformPlacement { m: 6, n: 300 };
    let a = box_statistics(&s, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = box_statistics(&s, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a.c_k, b.c_k);
}

#[test]
fn lower_hull_of_convex_table_is_the_table() {
    let t = leading_table(1.0, 1.0, 20);
    let h = lower_hull(&t);
    // k = 1 is collinear with k = 0 and k = 2
    let ks: Vec<f64> = h.iter().map(|(k, _)| *k).collect();
    let expected: Vec<f64> = std::iter::once(0.0)
        .chain((2..=20).map(|k| k as f64))
        .collect();
    assert_eq!(ks, expected);
    let mut bumpy = t.clone();
    bumpy.insert(5, 1e3);
    let h = lower_hull(&bumpy);
    assert!(h.iter().all(|(k, _)| *k != 5.0));
}

#[test]
fn leading_table_assembly_minimizes_at_mean() {
    let (alpha, beta) = (0.5, 0.19);
    for y in [1e-3f64, 1e-5, 1e-7] {
        let b = 1.0;
        let rho = y;
        let ell = y.powf(-alpha);
        let k_cut = (10.0 * rho * ell.powi(3)).floor() as usize;
        let t = leading_table(b, ell, k_cut);
        let r = assemble_thermo_lower(rho, b, alpha, beta, &t).unwrap();
        assert!(r.minimum_at_mean, "{:?}", r.diagnostics);
        assert!((r.x_star - r.rho_ell3).abs() <= 1e-6 * r.rho_ell3);
        assert!(r.prefactor_readings_agree);
        let ratio = r.e_lower / r.leading;
        assert!(ratio < 1.0);
        // 1 − 3Y^{3α−1} + O(Y^{2(3α−1)})
        let lead = 3.0 * y.powf(3.0 * alpha - 1.0);
        assert!(((1.0 - ratio) - lead).abs() <= 3.0 * lead * lead, "Y = {y}");
    }
}

#[test]
fn missing_table_entries_are_rejected() {
    let mut t = leading_table(1.0, 10.0, 100);
    t.remove(&50);
    let err = assemble_thermo_lower(1e-2, 1.0, 0.5, 0.19, &t).unwrap_err();
    assert!(err.to_string().contains("misses"));
    assert!(assemble_thermo_lower(1e-2, 1.0, 0.5, 0.19, &BTreeMap::new()).is_err());
}

#[test]
fn assembly_is_monotone_in_density_and_coupling() {
    let run = |rho: f64, b: f64| {
        let ell = b.powf(0.25) * (rho * b.powf(0.75)).powf(-0.5);
        let k_cut = (10.0 * rho * ell.powi(3)).floor() as usize + 2;
        assemble_thermo_lower(rho, b, 0.5, 0.19, &leading_table(b, ell, k_cut))
            .unwrap()
            .e_lower
    };
    let rhos = [1e-4, 2e-4, 5e-4, 1e-3];
    let by_rho: Vec<f64> = rhos.iter().map(|r| run(*r, 1.0)).collect();
    assert!(by_rho.windows(2).all(|w| w[1] >= w[0]), "{by_rho:?}");
    let bs = [0.5, 1.0, 2.0, 4.0];
    let by_b: Vec<f64> = bs.iter().map(|b| run(1e-4, *b)).collect();
    assert!(by_b.windows(2).all(|w| w[1] >= w[0]), "{by_b:?}");
}

proptest! {
    #[test]
    fn nu_never_exceeds_any_term(alpha in 0.34f64..0.6, t in 0.01f64..0.99) {
        let (lo, hi) = validate_window(alpha, 0.0).beta_window;
        let beta = lo + t * (hi - lo);
        let v = nu(alpha, beta);
        prop_assert!(exponent_terms(alpha, beta).iter().all(|e| v <= *e));
        prop_assert!(v > 0.0);
        prop_assert!(v <= optimize_exponent().nu + 1e-12);
    }

    #[test]
    fn sum_rules_for_random_uniform_samplers(m in 1usize..6, n in 0usize..120, seed in 0u64..1000) {
        let s = UniformPlacement { m, n };
        let stats = box_statistics(&s, 20, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!((stats.sum_rule_total - 1.0).abs() < 1e-10);
        prop_assert!((stats.sum_rule_mean - n as f64 / (m * m * m) as f64).abs() < 1e-10);
    }
}
