use std::collections::BTreeMap;
use std::path::Path;

use bose3b_core::diag::{
    discrete_scattering_energy, lattice_diluteness, lattice_ground_state, predicted_leading,
    universality_experiment, Boundary, DiagOptions, DiscreteScatteringOptions, LatticeBox,
    UniversalityOptions,
};
use bose3b_core::dyson::{
    certify_dyson_inequality, construct_u, four_body_stress, CertGrid, DysonOptions,
};
use bose3b_core::lowerbound::{
    assemble_thermo_lower, exponent_terms, nu, optimize_exponent, temple_lower_bound,
    validate_window, TempleOptions, TempleParameters,
};
use bose3b_core::potentials::{load_potential, PotentialSpec, Profile};
use bose3b_core::scattering::{
    hard_sphere_energy, modified_scattering_energy, radial_estimate, steep_wall_continuation,
    variational_estimate, ScatteringOptions,
};
use bose3b_core::upperbound::{
    assemble_thermo_upper, PotentialNorms, UpperConstants, UpperParameters,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::Settings;
use crate::report::{Outcome, SideFile};
use crate::CliError;

const SYMMETRY_SAMPLES: usize = 10_000;
const SYMMETRY_TOL: f64 = 1e-10;

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("`{name}` is required for this command")))
}

/// Loads a potential and certifies the three-body symmetry of six-dimensional ones.
pub fn load(path: &Path, expected_d: Option<usize>, seed: u64) -> Result<PotentialSpec, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "potential file {} does not exist",
            path.display()
        )));
    }
    let v = load_potential(path)?;
    if let Some(d) = expected_d {
        if d != v.dimension {
            return Err(bose3b_core::Error::Precondition(format!(
                "--d {d} does not match the potential dimension {}",
                v.dimension
            ))
            .into());
        }
    }
    if v.dimension == 6 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(v.certify_symmetry(SYMMETRY_SAMPLES, SYMMETRY_TOL, &mut rng)?);
    }
    Ok(v)
}

fn boundary(s: &Settings) -> Result<Boundary, CliError> {
    s.boundary
        .as_deref()
        .unwrap_or("neumann")
        .parse()
        .map_err(|e: bose3b_core::Error| CliError::Config(e.to_string()))
}

fn diag_options(s: &Settings) -> DiagOptions {
    DiagOptions {
        seed: s.seed(),
        mem_cap: s.mem_cap(),
        ..DiagOptions::default()
    }
}

pub fn scatter(s: &Settings) -> Result<Outcome, CliError> {
    let path = required(&s.potential, "potential")?;
    let v = load(&path, s.d, s.seed())?;
    let opts = ScatteringOptions {
        mem_cap: s.mem_cap(),
        ..ScatteringOptions::default()
    };
    let hard_core = s.hard_core_limit.unwrap_or(false);
    let mut results = serde_json::Map::new();
    results.insert("potential".into(), v.descriptor());
    if v.dimension == 6 && !hard_core {
        let (est, _) = modified_scattering_energy(&v, &opts)?;
        results.insert("quantity".into(), json!("b_M"));
        results.insert("estimate".into(), json!(est));
    } else if let Some(g) = v.radial_profile() {
        let (est, sol) = radial_estimate(&g, v.dimension, &opts)?;
        let var = variational_estimate(&v, &opts)?;
        results.insert("quantity".into(), json!("b"));
        results.insert("estimate".into(), json!(est));
        results.insert("integral_route".into(), json!(sol.b_value));
        results.insert("variational".into(), json!(var));
        results.insert(
            "route_relative_difference".into(),
            json!((var.value - est.value).abs() / est.value.abs().max(f64::MIN_POSITIVE)),
        );
        if hard_core {
            let Profile::Wall { height, radius } = g else {
                return Err(CliError::Config(
                    "the hard-core limit needs a wall profile".into(),
                ));
            };
            let lim = steep_wall_continuation(v.dimension, radius, height, &opts)?;
            let exact = hard_sphere_energy(v.dimension, radius);
            results.insert(
                "hard_core".into(),
                json!({"estimate": lim, "hard_sphere": exact, "relative_error": (lim.value - exact) / exact}),
            );
        }
    } else {
        let est = variational_estimate(&v, &opts)?;
        results.insert("quantity".into(), json!("b"));
        results.insert("estimate".into(), json!(est));
    }
    Ok(Outcome {
        parameters: json!({"potential": path, "d": v.dimension, "hard_core_limit": hard_core, "scattering": opts,
            "symmetry_samples": SYMMETRY_SAMPLES, "symmetry_tol": SYMMETRY_TOL}),
        results: Value::Object(results),
        side_files: vec![],
    })
}

pub fn dyson(s: &Settings) -> Result<Outcome, CliError> {
    let configs = s.configs.unwrap_or(0);
    let mut results = serde_json::Map::new();
    let mut side_files = Vec::new();
    let mut parameters = json!({"configs": configs, "stress_cutoff_radius": 1.0});
    if let Some(path) = &s.potential {
        let v = load(path, s.d, s.seed())?;
        let r0 = v.range_r0;
        let r1_list = s
            .r1_list
            .clone()
            .unwrap_or_else(|| vec![10.0 * r0, 20.0 * r0]);
        let ratio = s.r2_ratio.unwrap_or(2.5);
        let h = s.cert_h.unwrap_or(0.005 * r0);
        let (b, _) = match v.radial_profile() {
            Some(g) => radial_estimate(&g, v.dimension, &ScatteringOptions::default())?,
            None => {
                return Err(CliError::Config(
                    "Dyson certification needs a radial potential".into(),
                ))
            }
        };
        let opts = DysonOptions {
            grid: CertGrid::Radial { h },
            b_reference: Some(b.value),
            ..DysonOptions::default()
        };
        let mut csv = SideFile::new(
            "dyson",
            &["r1", "r2", "lambda_min", "b", "deficit", "c_eff", "pass"],
        );
        let mut reports = Vec::new();
        for &r1 in &r1_list {
            let u = construct_u(r1, ratio * r1, v.dimension)?;
            let rep = certify_dyson_inequality(&v, &u, None, &opts)?;
            csv.push(vec![
                r1,
                ratio * r1,
                rep.lambda_min,
                b.value,
                rep.deficit.unwrap_or(f64::NAN),
                rep.c_eff.unwrap_or(f64::NAN),
                if rep.pass { 1.0 } else { 0.0 },
            ]);
            reports
                .push(json!({"report": rep, "half_b_satisfied": rep.lambda_min >= 0.5 * b.value}));
        }
        results.insert("b".into(), json!(b));
        results.insert("certifications".into(), Value::Array(reports));
        side_files.push(csv);
        parameters = json!({"potential": path, "r1_list": r1_list, "r2_ratio": ratio, "cert_h": h,
            "dyson": opts, "configs": configs, "stress_cutoff_radius": 1.0});
    } else if configs == 0 {
        return Err(CliError::Config(
            "dyson needs --potential or --configs".into(),
        ));
    }
    if configs > 0 {
        let stress = four_body_stress(configs, 1.0, s.seed())?;
        results.insert(
            "no_four_body".into(),
            json!({"stress": stress, "pass": stress.violations == 0}),
        );
    }
    Ok(Outcome {
        parameters,
        results: Value::Object(results),
        side_files,
    })
}

fn b_m_of(s: &Settings) -> Result<(f64, Option<PotentialSpec>), CliError> {
    if let Some(b) = s.b_m {
        return Ok((b, None));
    }
    let Some(path) = &s.potential else {
        return Ok((1.0, None));
    };
    let v = load(path, s.d, s.seed())?;
    let (est, _) = modified_scattering_energy(&v, &ScatteringOptions::default())?;
    Ok((est.value, Some(v)))
}

fn temple_options(s: &Settings) -> TempleOptions {
    TempleOptions {
        c_err: s.c_err.unwrap_or(1.0),
        ..TempleOptions::default()
    }
}

/// n = ρℓ³ rounded, kept below 10ρℓ³.
fn typical_n(p: &TempleParameters) -> usize {
    ((p.rho * p.ell.powi(3)).round().max(0.0) as usize).min(p.n_max.floor() as usize)
}

pub fn temple(s: &Settings) -> Result<Outcome, CliError> {
    let rho = s.rho.unwrap_or(1e-4);
    let alpha = s.alpha.unwrap_or(0.5);
    let beta = s.beta.unwrap_or(0.19);
    let (b_m, _) = b_m_of(s)?;
    let opts = temple_options(s);
    let window = validate_window(alpha, beta);
    let optimum = optimize_exponent();
    let params = TempleParameters::new(rho, b_m, alpha, beta, s.epsilon)?;
    let n = typical_n(&params);
    let report = temple_lower_bound(&params, n, &opts)?;
    let mut side_files = Vec::new();
    if let Some(ys) = &s.y_list {
        let mut csv = SideFile::new(
            "temple_sweep",
            &[
                "Y",
                "rho",
                "ell",
                "n",
                "nu",
                "leading",
                "analytic_correction",
                "asymptotic_bound",
                "lower_bound",
                "valid",
            ],
        );
        for &y in ys {
            let r = y / b_m.powf(0.75);
            let p = TempleParameters::new(r, b_m, alpha, beta, s.epsilon)?;
            let k = typical_n(&p);
            let t = temple_lower_bound(&p, k, &opts)?;
            csv.push(vec![
                y,
                r,
                p.ell,
                k as f64,
                t.nu.unwrap_or(f64::NAN),
                t.leading_term,
                t.analytic_correction.unwrap_or(f64::NAN),
                t.asymptotic_bound.unwrap_or(f64::NAN),
                t.lower_bound.unwrap_or(f64::NAN),
                if t.valid { 1.0 } else { 0.0 },
            ]);
        }
        side_files.push(csv);
    }
    Ok(Outcome {
        parameters: json!({"rho": rho, "b_m": b_m, "alpha": alpha, "beta": beta, "epsilon": params.epsilon,
            "n": n, "y_list": s.y_list, "temple": opts}),
        results: json!({
            "window": window,
            "exponent_terms": exponent_terms(alpha, beta),
            "nu": nu(alpha, beta),
            "optimum": optimum,
            "report": report,
        }),
        side_files,
    })
}

pub fn diag(s: &Settings) -> Result<Outcome, CliError> {
    let path = required(&s.potential, "potential")?;
    let v = load(&path, Some(6), s.seed())?;
    let sites = s.sites.unwrap_or(6);
    let n = s.n.unwrap_or(3);
    let spacing = s.spacing.unwrap_or(1.0);
    let bc = boundary(s)?;
    let lattice = LatticeBox::new(sites, spacing, bc)?;
    let dopts = diag_options(s);
    let sopts = DiscreteScatteringOptions::default();
    let mut parameters = json!({"potential": path, "sites": sites, "n": n, "spacing": spacing, "boundary": bc,
        "diag": dopts, "discrete_scattering": sopts});
    let results = if let Some(p2) = &s.potential2 {
        let v2 = load(p2, Some(6), s.seed())?;
        let uopts = UniversalityOptions {
            diag: dopts,
            scattering: sopts,
            ..UniversalityOptions::default()
        };
        parameters["potential2"] = json!(p2);
        parameters["b_match"] = json!(uopts.b_match);
        parameters["max_diluteness"] = json!(uopts.max_diluteness);
        json!({"universality": universality_experiment(&v, &v2, &lattice, n, &uopts)?})
    } else {
        let run = lattice_ground_state(&lattice, n, &v, &dopts)?;
        let b = discrete_scattering_energy(&v, spacing, &sopts)?;
        let side = lattice.side();
        let pred = predicted_leading(b.value, side, n);
        json!({
            "run": run,
            "b_disc": b,
            "y_disc": lattice_diluteness(b.value, side, n),
            "predicted_leading": pred,
            "ratio": run.ground.energy / pred,
        })
    };
    Ok(Outcome {
        parameters,
        results,
        side_files: vec![],
    })
}

/// Norms entering the upper bound; without a potential the L¹ and L^∞ norms
/// default to b_M and the range to b_M^{1/4}.
fn norms(b_m: f64, v: Option<&PotentialSpec>) -> PotentialNorms {
    match v {
        Some(v) => PotentialNorms::from_spec(v, b_m),
        None => PotentialNorms {
            b_m,
            l1_norm: b_m,
            sup_norm: b_m,
            range_r0: b_m.powf(0.25),
        },
    }
}

/// Box energies E(ℓ, k) ≥ Temple bound/ℓ², or 0 where the bound is not valid.
pub fn temple_energy_table(
    params: &TempleParameters,
    opts: &TempleOptions,
) -> Result<BTreeMap<usize, f64>, CliError> {
    let k_cut = (10.0 * params.rho * params.ell.powi(3)).floor() as usize;
    let mut table = BTreeMap::new();
    for k in 0..=k_cut {
        let r = temple_lower_bound(params, k, opts)?;
        let e = r.lower_bound.unwrap_or(0.0).max(0.0) / (params.ell * params.ell);
        table.insert(k, e);
    }
    Ok(table)
}

pub fn bounds(s: &Settings) -> Result<Outcome, CliError> {
    let rho = s.rho.unwrap_or(1e-4);
    let alpha = s.alpha.unwrap_or(0.5);
    let beta = s.beta.unwrap_or(0.19);
    let alpha_upper = s.alpha_upper.unwrap_or(1.0 / 75.0);
    let (b_m, v) = b_m_of(s)?;
    let w = norms(b_m, v.as_ref());
    let topts = temple_options(s);
    let tp = TempleParameters::new(rho, b_m, alpha, beta, s.epsilon)?;
    let table = temple_energy_table(&tp, &topts)?;
    let lower = assemble_thermo_lower(rho, b_m, alpha, beta, &table)?;
    let up = UpperParameters::new(rho, b_m, alpha_upper, w.range_r0)?;
    let constants = UpperConstants::default();
    let upper = assemble_thermo_upper(&up, &w, &constants)?;
    let leading = rho.powi(3) * b_m / 6.0;
    let valid_boxes = table.values().filter(|e| **e > 0.0).count();
    Ok(Outcome {
        parameters: json!({"rho": rho, "b_m": b_m, "alpha": alpha, "beta": beta, "alpha_upper": alpha_upper,
            "epsilon": tp.epsilon, "norms": w, "temple": topts, "upper_constants": constants}),
        results: json!({
            "leading": leading,
            "lower": lower,
            "upper": upper,
            "boxes_with_temple_bound": valid_boxes,
            "lower_le_leading": lower.e_lower <= leading,
            "leading_le_upper": leading <= upper.e_upper,
        }),
        side_files: vec![],
    })
}

pub fn sandwich(s: &Settings) -> Result<Outcome, CliError> {
    let path = required(&s.potential, "potential")?;
    let v = load(&path, Some(6), s.seed())?;
    let opts = crate::sandwich::SandwichOptions {
        n: s.n.unwrap_or(3),
        sites: s.sites.unwrap_or(6),
        spacing: s.spacing.unwrap_or(1.0),
        alpha_upper: s.alpha_upper.unwrap_or(1.0 / 75.0),
        diag: diag_options(s),
        ..crate::sandwich::SandwichOptions::default()
    };
    let report = crate::sandwich::sandwich(&v, &opts)?;
    Ok(Outcome {
        parameters: json!({"potential": path, "sandwich": opts}),
        results: json!(report),
        side_files: vec![],
    })
}
