use std::collections::HashMap;

use bose3b_core::diag::{
    build_hamiltonian, constant_state, discrete_scattering_energy, lattice_ground_state,
    symmetric_sector, triple_sum, truncated_discrete_energy, tune_amplitude,
    universality_experiment, Boundary, DiagOptions, DiscreteScatteringOptions, LatticeBox,
    SymmetricBasis, UniversalityOptions,
};
use bose3b_core::linalg::LinearOperator;
use bose3b_core::potentials::{metric_matrix, PotentialSpec, Profile};
use bose3b_core::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: u64 = 4 << 30;

fn tent(height: f64, radius: f64) -> PotentialSpec {
    PotentialSpec::radial_in_metric(Profile::Tent { height, radius }, metric_matrix())
        .unwrap()
        .certified()
        .unwrap()
}

#[test]
fn basis_rank_round_trips() {
    let b = SymmetricBasis::new(125, 3).unwrap();
    assert_eq!(b.dim, 127 * 126 * 125 / 6);
    assert_eq!(SymmetricBasis::dimension(125, 3), b.dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tuple = vec![0; 3];
    for _ in 0..10_000 {
        let i = rng.random_range(0..b.dim);
        b.unrank(i, &mut tuple);
        assert!(tuple.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(b.rank(&tuple), i);
        let occ = b.occupation_vector(i);
        assert_eq!(b.index_of_occupation(&occ).unwrap(), i);
    }
}

#[test]
fn advance_walks_the_ranks_in_order() {
    let b = SymmetricBasis::new(20, 4).unwrap();
    let mut walk = vec![0; 4];
    let mut fresh = vec![0; 4];
    for i in 0..b.dim {
        b.unrank(i, &mut fresh);
        assert_eq!(walk, fresh, "index {i}");
        let more = b.advance(&mut walk);
        assert_eq!(more, i + 1 < b.dim);
    }
}

#[test]
fn constant_state_has_multinomial_weights() {
    let b = SymmetricBasis::new(4, 3).unwrap();
    let c = constant_state(&b);
    let norm: f64 = c.iter().map(|x| x * x).sum();
    // Σ n!/Πn_a! = L^n
    assert!((norm - 64.0).abs() < 1e-12);
}

#[test]
fn at_most_two_particles_do_not_interact() {
    let v = tent(50.0, 2.0);
    let lattice = LatticeBox::new(4, 0.5, Boundary::Neumann).unwrap();
    for n in [1, 2] {
        let run = lattice_ground_state(&lattice, n, &v, &DiagOptions::default()).unwrap();
        assert!(
            run.ground.energy.abs() < 1e-10,
            "n = {n}: {}",
            run.ground.energy
        );
    }
}

#[test]
fn free_dirichlet_and_periodic_ground_states() {
    let zero = PotentialSpec::zero(6);
    let d = LatticeBox::new(4, 0.7, Boundary::Dirichlet).unwrap();
    let run = lattice_ground_state(&d, 3, &zero, &DiagOptions::default()).unwrap();
    assert!((run.ground.energy - 3.0 * d.dirichlet_ground()).abs() < 1e-9 * run.ground.energy);
    let p = LatticeBox::new(4, 0.7, Boundary::Periodic).unwrap();
    let run = lattice_ground_state(&p, 3, &zero, &DiagOptions::default()).unwrap();
    assert!(run.ground.energy.abs() < 1e-10);
}

/// First-quantized bookkeeping on occupation vectors, built without the basis ranks.
fn oracle_matrix(
    lattice: &LatticeBox,
    n: usize,
    v: &PotentialSpec,
) -> (Vec<Vec<usize>>, DMatrix<f64>) {
    let s = lattice.sites_per_side as i64;
    let sites = lattice.sites();
    let h = lattice.spacing;
    let mut states: Vec<Vec<usize>> = Vec::new();
    fn fill(prefix: &mut Vec<usize>, left: usize, sites: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == sites - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, left - k, sites, out);
            prefix.pop();
        }
    }
    fill(&mut Vec::new(), n, sites, &mut states);
    let index: HashMap<Vec<usize>, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let coord = |site: usize| {
        [
            (site as i64) % s,
            (site as i64 / s) % s,
            site as i64 / (s * s),
        ]
    };
    let neighbours = |site: usize| -> Vec<usize> {
        let c = coord(site);
        let mut out = Vec::new();
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let mut d = c;
                d[axis] += step;
                if lattice.boundary == Boundary::Periodic {
                    d[axis] = d[axis].rem_euclid(s);
                } else if d[axis] < 0 || d[axis] >= s {
                    continue;
                }
                out.push((d[0] + s * (d[1] + s * d[2])) as usize);
            }
        }
        out
    };
    let disp = |a: i64, b: i64| {
        let d = a - b;
        if lattice.boundary == Boundary::Periodic {
            let mut best = d;
            for k in [-1, 1] {
                if (d + k * s).abs() < best.abs() {
                    best = d + k * s;
                }
            }
            best
        } else {
            d
        }
    };
    let inv = 1.0 / (h * h);
    let dim = states.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (i, occ) in states.iter().enumerate() {
        let mut particles = Vec::new();
        for (site, &c) in occ.iter().enumerate() {
            particles.extend(std::iter::repeat_n(site, c));
        }
        for (x, &nx) in occ.iter().enumerate() {
            if nx == 0 {
                continue;
            }
            let nb = neighbours(x);
            let degree = match lattice.boundary {
                Boundary::Neumann => nb.len() as f64,
                _ => 6.0,
            };
            m[(i, i)] += degree * nx as f64 * inv;
            for y in nb {
                let mut target = occ.clone();
                target[x] -= 1;
                target[y] += 1;
                let j = index[&target];
                m[(j, i)] -= ((nx * (occ[y] + 1)) as f64).sqrt() * inv;
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    if p < q && q < r {
                        let (cp, cq, cr) = (
                            coord(particles[p]),
                            coord(particles[q]),
                            coord(particles[r]),
                        );
                        let y: Vec<f64> = (0..3)
                            .map(|k| h * disp(cp[k], cq[k]) as f64)
                            .chain((0..3).map(|k| h * disp(cp[k], cr[k]) as f64))
                            .collect();
                        m[(i, i)] += v.eval(&y);
                    }
                }
            }
        }
    }
    (states, m)
}

fn compare_with_oracle(boundary: Boundary) {
    let v = tent(40.0, 1.3);
    let lattice = LatticeBox::new(3, 0.5, boundary).unwrap();
    let h = build_hamiltonian(&lattice, 3, &v, CAP, 4).unwrap();
    let dense = h.to_dense().unwrap();
    let (states, oracle) = oracle_matrix(&lattice, 3, &v);
    assert_eq!(states.len(), h.dim());
    let perm: Vec<usize> = states
        .iter()
        .map(|o| h.basis.index_of_occupation(o).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..states.len() {
        for j in 0..states.len() {
            worst = worst.max((oracle[(i, j)] - dense[(perm[i], perm[j])]).abs());
        }
    }
    assert!(worst < 1e-12, "{boundary:?}: worst entry mismatch {worst}");
    assert!((&dense - dense.transpose()).amax() < 1e-14);
}

#[test]
fn neumann_hamiltonian_matches_first_quantized_oracle() {
    compare_with_oracle(Boundary::Neumann);
}

#[test]
fn periodic_hamiltonian_matches_first_quantized_oracle() {
    compare_with_oracle(Boundary::Periodic);
}

#[test]
fn dirichlet_hamiltonian_matches_first_quantized_oracle() {
    compare_with_oracle(Boundary::Dirichlet);
}

#[test]
fn matvec_agrees_with_dense_matrix() {
    let v = tent(25.0, 1.6);
    let lattice = LatticeBox::new(3, 0.5, Boundary::Periodic).unwrap();
    let h = build_hamiltonian(&lattice, 3, &v, CAP, 4).unwrap();
    let dense = h.to_dense().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..h.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y = vec![0.0; h.dim()];
    h.apply(&x, &mut y);
    let reference = &dense * nalgebra::DVector::from_vec(x);
    let worst = y
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-12 * reference.amax().max(1.0), "{worst}");
}

#[test]
fn invariant_sector_matches_sparse_solver() {
    let v = tent(30.0, 1.4);
    let lattice = LatticeBox::new(4, 0.5, Boundary::Neumann).unwrap();
    let h = build_hamiltonian(&lattice, 3, &v, CAP, 44).unwrap();
    let sector = symmetric_sector(&h, 5000).unwrap();
    assert_eq!(sector.orbit_sizes.iter().sum::<usize>(), h.dim());
    let sparse = lattice_ground_state(&lattice, 3, &v, &DiagOptions::default()).unwrap();
    assert!(
        (sector.ground_energy() - sparse.ground.energy).abs() < 1e-10,
        "{} vs {}",
        sector.ground_energy(),
        sparse.ground.energy
    );
    assert!(sparse.ground.energy > 0.0);
}

#[test]
fn interaction_ignores_particle_order() {
    let v = PotentialSpec::pair_product(Profile::Gaussian {
        height: 3.0,
        width: 0.6,
        radius: 2.0,
    })
    .unwrap();
    let v = v.certified().unwrap();
    let lattice = LatticeBox::new(5, 0.4, Boundary::Neumann).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let mut t: Vec<usize> = (0..4)
            .map(|_| rng.random_range(0..lattice.sites()))
            .collect();
        let base = triple_sum(&lattice, &v, &t);
        for _ in 0..5 {
            let (i, j) = (rng.random_range(0..4), rng.random_range(0..4));
            t.swap(i, j);
            assert!((triple_sum(&lattice, &v, &t) - base).abs() < 1e-12 * base.max(1.0));
        }
    }
}

#[test]
fn unordered_triples_equal_a_sixth_of_ordered_triples() {
    let v = PotentialSpec::pair_product(Profile::Gaussian {
        height: 2.0,
        width: 0.7,
        radius: 2.5,
    })
    .unwrap();
    let v = v.certified().unwrap();
    let lattice = LatticeBox::new(5, 0.5, Boundary::Neumann).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let t: Vec<usize> = (0..5)
            .map(|_| rng.random_range(0..lattice.sites()))
            .collect();
        let mut ordered = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let (ci, cj, ck) = (
                        lattice.coords(t[i]),
                        lattice.coords(t[j]),
                        lattice.coords(t[k]),
                    );
                    let y: Vec<f64> = (0..3)
                        .map(|a| 0.5 * (ci[a] - cj[a]) as f64)
                        .chain((0..3).map(|a| 0.5 * (ci[a] - ck[a]) as f64))
                        .collect();
                    ordered += v.eval(&y);
                }
            }
        }
        let unordered = triple_sum(&lattice, &v, &t);
        assert!(
            (unordered - ordered / 6.0).abs() < 1e-12 * unordered.max(1.0),
            "{unordered} vs {}",
            ordered / 6.0
        );
    }
}

#[test]
fn periodic_interaction_uses_minimum_image() {
    let v = tent(10.0, 1.5);
    let per = LatticeBox::new(5, 0.5, Boundary::Periodic).unwrap();
    let neu = LatticeBox::new(5, 0.5, Boundary::Neumann).unwrap();
    // sites 0, 4 and 3 along x wrap to displacements 1 and 2
    let wrapped = [
        per.site([0, 0, 0]),
        per.site([4, 0, 0]),
        per.site([3, 0, 0]),
    ];
    let straight = [
        neu.site([2, 0, 0]),
        neu.site([1, 0, 0]),
        neu.site([0, 0, 0]),
    ];
    let a = triple_sum(&per, &v, &wrapped);
    assert!(a > 0.0);
    assert!((a - triple_sum(&neu, &v, &straight)).abs() < 1e-14);
    assert_eq!(triple_sum(&neu, &v, &wrapped), 0.0);
}

#[test]
fn hamiltonian_preconditions() {
    let lattice = LatticeBox::new(6, 0.5, Boundary::Neumann).unwrap();
    let v = tent(1.0, 1.0);
    assert!(matches!(
        build_hamiltonian(&lattice, 3, &v, 1 << 10, 4),
        Err(Error::MemoryCap { .. })
    ));
    let raw = PotentialSpec::radial_in_metric(
        Profile::Tent {
            height: 1.0,
            radius: 1.0,
        },
        metric_matrix(),
    )
    .unwrap();
    assert!(build_hamiltonian(&lattice, 3, &raw, CAP, 4).is_err());
    assert!(build_hamiltonian(&lattice, 0, &v, CAP, 4).is_err());
    assert!(LatticeBox::new(2, 1.0, Boundary::Neumann).is_err());
    assert_eq!("periodic".parse::<Boundary>().unwrap(), Boundary::Periodic);
    assert!("torus".parse::<Boundary>().is_err());
}

fn fast_scattering() -> DiscreteScatteringOptions {
    DiscreteScatteringOptions {
        radii_in_h: vec![3.0, 4.0],
        ..DiscreteScatteringOptions::default()
    }
}

#[test]
fn discrete_scattering_of_zero_is_zero() {
    let b = discrete_scattering_energy(&PotentialSpec::zero(6), 0.5, &fast_scattering()).unwrap();
    assert_eq!(b.value, 0.0);
}

#[test]
fn discrete_scattering_scales_with_fourth_power() {
    let v = tent(8.0, 1.0);
    let opts = fast_scattering();
    let b1 = discrete_scattering_energy(&v, 0.5, &opts).unwrap();
    for lambda in [2.0, 0.5] {
        let b2 =
            discrete_scattering_energy(&v.rescaled(lambda).unwrap(), 0.5 * lambda, &opts).unwrap();
        let expected = lambda.powi(4) * b1.value;
        assert!(
            (b2.value - expected).abs() < 1e-8 * expected,
            "λ = {lambda}: {} vs {expected}",
            b2.value
        );
    }
}

#[test]
fn truncated_discrete_energies_decrease_with_radius() {
    let v = tent(8.0, 1.0);
    let opts = fast_scattering();
    let vals: Vec<f64> = [3.0, 3.5, 4.0]
        .iter()
        .map(|k| {
            truncated_discrete_energy(&v, 0.5, k * 0.5, &opts)
                .unwrap()
                .0
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    let b = discrete_scattering_energy(&v, 0.5, &opts).unwrap();
    assert!(b.value < vals[2] && b.value > 0.0);
    assert!(discrete_scattering_energy(&v, 0.2, &opts).is_err());
}

#[test]
fn amplitude_tuning_hits_the_target() {
    let v = tent(8.0, 1.0);
    let opts = fast_scattering();
    let b = discrete_scattering_energy(&v, 0.5, &opts).unwrap().value;
    let (w, hit, factor) = tune_amplitude(&v, 0.5, 1.3 * b, 1e-4, &opts).unwrap();
    assert!((hit.value - 1.3 * b).abs() <= 1e-4 * 1.3 * b);
    assert!(factor > 1.0);
    assert!((w.sup_norm - factor * v.sup_norm).abs() < 1e-12 * w.sup_norm);
}

#[test]
fn identical_potentials_are_trivially_universal() {
    let v = tent(2.0, 1.0);
    let lattice = LatticeBox::new(3, 0.5, Boundary::Periodic).unwrap();
    let opts = UniversalityOptions {
        scattering: fast_scattering(),
        max_diluteness: 10.0,
        ..UniversalityOptions::default()
    };
    let r = universality_experiment(&v, &v, &lattice, 3, &opts).unwrap();
    assert_eq!(r.e0[0], r.e0[1]);
    assert_eq!(r.relative_difference, 0.0);
    assert!(r.within_threshold);
    assert!(universality_experiment(&v, &v, &lattice, 5, &opts).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rank_is_a_bijection(sites in 1usize..40, n in 1usize..5, seed in 0u64..1000) {
        let b = SymmetricBasis::new(sites, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tuple: Vec<usize> = (0..n).map(|_| rng.random_range(0..sites)).collect();
        tuple.sort_unstable();
        let r = b.rank(&tuple);
        prop_assert!(r < b.dim);
        let mut back = vec![0; n];
        b.unrank(r, &mut back);
        prop_assert_eq!(back, tuple);
    }
}
