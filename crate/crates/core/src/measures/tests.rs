use super::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_measure(xs: &[f64], w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::new(xs.iter().map(|&x| vec![x]).collect(), w.to_vec()).unwrap()
}

#[test]
fn pushforward_identity_is_noop() {
    let m = line_measure(&[0.0, 0.25, 1.0], &[0.2, 0.3, 0.5]);
    let out = m.pushforward(|p| Ok(p.to_vec())).unwrap();
    assert_eq!(m, out);
}

#[test]
fn pushforward_translation_shifts_points_only() {
    let xs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let m = DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect(), 1.0).unwrap();
    let s = 0.375;
    let out = m.pushforward(|p| Ok(vec![p[0] + s])).unwrap();
    for i in 0..m.len() {
        assert_eq!(out.point(i)[0], m.point(i)[0] + s);
    }
    assert_eq!(out.weights(), m.weights());
    assert_eq!(out.total_mass(), m.total_mass());
}

#[test]
fn pushforward_composition_exact() {
    let m = line_measure(&[0.0, 1.0, 2.0, 5.0], &[0.25; 4]);
    let f = |p: &[f64]| Ok(vec![3.0 * p[0] - 1.0]);
    let g = |p: &[f64]| Ok(vec![p[0] * p[0]]);
    let composed = m.pushforward(|p| f(&g(p)?)).unwrap();
    let staged = m.pushforward(g).unwrap().pushforward(f).unwrap();
    assert_eq!(composed, staged);
}

#[test]
fn pushforward_error_names_point_index() {
    let m = line_measure(&[0.0, 1.0], &[0.5, 0.5]);
    let err = m
        .pushforward(|p| {
            if p[0] > 0.5 {
                Err(crate::Error::Invalid("boom".into()))
            } else {
                Ok(p.to_vec())
            }
        })
        .unwrap_err();
    match err {
        crate::Error::MapEvaluation { index, .. } => assert_eq!(index, 1),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn w2_self_distance_zero() {
    let m = line_measure(&[0.3, 0.9, 2.0], &[0.5, 0.25, 0.25]);
    assert!(wasserstein2(&m, &m).unwrap().abs() <= 1e-12);
}

#[test]
fn w2_between_diracs_is_half_squared_distance() {
    let a = DiscreteMeasure::dirac(vec![1.0, 2.0]).unwrap();
    let b = DiscreteMeasure::dirac(vec![4.0, 6.0]).unwrap();
    // ½|a−b|² = ½(9+16)
    let got = wasserstein2(&a, &b).unwrap();
    assert!((got - 12.5).abs() < 1e-12, "got {got}");
}

/// Exhaustive 3-point oracle: minimum over all 6 permutation assignments.
#[test]
fn w2_three_points_matches_permutation_oracle() {
    let xs = [0.0, 1.0, 3.0];
    let ys = [0.5, 2.5, 2.6];
    let mu = line_measure(&xs, &[1.0 / 3.0; 3]);
    let nu = line_measure(&ys, &[1.0 / 3.0; 3]);
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let oracle = perms
        .iter()
        .map(|p| {
            (0..3)
                .map(|i| 0.5 * (xs[i] - ys[p[i]]).powi(2) / 3.0)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let got = wasserstein2(&mu, &nu).unwrap();
    assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
}

#[test]
fn w2_balance_mismatch_is_error() {
    let a = line_measure(&[0.0], &[1.0]);
    let b = line_measure(&[1.0], &[2.0]);
    assert!(matches!(
        wasserstein2(&a, &b),
        Err(crate::Error::Balance { .. })
    ));
}

#[test]
fn w2_symmetry_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let n = 6;
        let mu = DiscreteMeasure::uniform(
            (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect(),
            1.0,
        )
        .unwrap();
        let nu = DiscreteMeasure::uniform(
            (0..n + 2).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect(),
            1.0,
        )
        .unwrap();
        let ab = wasserstein2(&mu, &nu).unwrap();
        let ba = wasserstein2(&nu, &mu).unwrap();
        assert_eq!(ab.to_bits(), ba.to_bits());
    }
}

#[test]
fn w2_triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let gen = |rng: &mut ChaCha8Rng| {
            let n = 5;
            DiscreteMeasure::uniform(
                (0..n).map(|_| vec![rng.gen::<f64>() * 3.0]).collect(),
                1.0,
            )
            .unwrap()
        };
        let (a, b, c) = (gen(&mut rng), gen(&mut rng), gen(&mut rng));
        let dab = wasserstein2(&a, &b).unwrap().sqrt();
        let dbc = wasserstein2(&b, &c).unwrap().sqrt();
        let dac = wasserstein2(&a, &c).unwrap().sqrt();
        assert!(dac <= dab + dbc + 1e-9, "{dac} > {dab} + {dbc}");
    }
}

#[test]
fn binned_density_dirac_unit_grid() {
    let m = DiscreteMeasure::dirac(vec![0.5]).unwrap();
    let grid = Grid::new(vec![0.0], vec![1.0], vec![1]).unwrap();
    let rho = binned_density(&m, &grid).unwrap();
    assert_eq!(rho, vec![1.0]);
}

#[test]
fn binned_density_uniform_subgrid_constant() {
    // Points at cell centers of an 8-cell grid, uniform weights.
    let cells = 8usize;
    let xs: Vec<Vec<f64>> = (0..cells).map(|i| vec![(i as f64 + 0.5) / cells as f64]).collect();
    let m = DiscreteMeasure::uniform(xs, 2.0).unwrap();
    let grid = Grid::new(vec![0.0], vec![1.0], vec![cells]).unwrap();
    let rho = binned_density(&m, &grid).unwrap();
    for v in &rho {
        assert!((v - 2.0).abs() < 1e-9, "cell value {v}");
    }
    let total: f64 = rho.iter().map(|v| v * grid.cell_volume()).sum();
    assert!((total - 2.0).abs() < 1e-9);
}

#[test]
fn binned_density_counts_escapees() {
    let m = line_measure(&[0.5, 2.0, -3.0], &[0.3, 0.3, 0.4]);
    let grid = Grid::new(vec![0.0], vec![1.0], vec![4]).unwrap();
    match binned_density(&m, &grid) {
        Err(crate::Error::OutsideGrid { count }) => assert_eq!(count, 2),
        other => panic!("expected OutsideGrid, got {other:?}"),
    }
}

/// Monte-Carlo oracle: a seeded Gaussian cloud binned on interior cells stays
/// within 5% sup-norm of the analytic density.
#[test]
fn binned_density_gaussian_within_5_percent() {
    let n = 10_000;
    let gen = Generator::Gaussian {
        n,
        dim: 1,
        mean: vec![0.0],
        std: 1.0,
    };
    let m = gen.sample(20240817).unwrap();
    let grid = Grid::new(vec![-5.0], vec![5.0], vec![12]).unwrap();
    let rho = binned_density(&m, &grid).unwrap();
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // Oracle: cell-averaged analytic density (Simpson over each cell).
    let cell_avg = |a: f64, b: f64| {
        let n = 64;
        let h = (b - a) / n as f64;
        let mut acc = pdf(a) + pdf(b);
        for k in 1..n {
            acc += pdf(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0 / (b - a)
    };
    for c in 0..grid.n_cells() {
        if !grid.is_interior(c) {
            continue;
        }
        let center = grid.cell_center(c)[0];
        if center.abs() > 1.5 {
            // Tail cells carry too few samples for a 5% bound at n = 1e4.
            continue;
        }
        let w = grid.cell_volume();
        let want = cell_avg(center - 0.5 * w, center + 0.5 * w);
        let got = rho[c];
        assert!(
            (got - want).abs() <= 0.05 * want,
            "cell at {center}: got {got}, want {want}"
        );
    }
}

#[test]
fn generators_are_seed_deterministic() {
    let gen = Generator::UniformBall {
        n: 32,
        dim: 3,
        center: vec![0.0; 3],
        radius: 1.0,
    };
    let a = gen.sample(42).unwrap();
    let b = gen.sample(42).unwrap();
    assert_eq!(a, b);
    let c = gen.sample(43).unwrap();
    assert_ne!(a, c);
}

#[test]
fn csv_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let gen = Generator::Gaussian {
        n: 17,
        dim: 2,
        mean: vec![0.5, -1.0],
        std: 0.3,
    };
    let m = gen.sample(5).unwrap();
    write_measure_csv(&path, &m).unwrap();
    let back = read_measure_csv(&path).unwrap();
    assert_eq!(m, back);
}

#[test]
fn ball_domain_defining_function_consistent() {
    let d = Domain::ball(vec![0.5, -0.5], 2.0, 32).unwrap();
    assert_eq!(d.boundary_samples().len(), 32);
    assert!(d.contains(&[0.5, -0.5]));
    assert!(!d.contains(&[4.0, 0.0]));
    let f = d.defining_fn();
    // gradient/Hessian of |x−c|²−r².
    let g = f.gradient(&[1.5, -0.5]);
    assert_eq!(g, vec![2.0, 0.0]);
}

#[test]
fn kidney_domain_is_nonconvex_at_waist() {
    let d = Domain::kidney(1.05, 1.0, 128).unwrap();
    // The waist pinches along x2: the Hessian of the defining function has a
    // negative eigenvalue somewhere on the boundary near the x2 axis.
    let mut found_negative = false;
    for b in d.boundary_samples() {
        let h = d.defining_fn().hessian(b);
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &h);
        if m.symmetric_eigenvalues().min() < -1e-9 {
            found_negative = true;
            break;
        }
    }
    assert!(found_negative, "expected a concave boundary arc");
}

#[test]
fn mass_conservation_under_operations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(1..12);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let m = DiscreteMeasure::new(points, weights).unwrap();
        let mass = m.total_mass();
        let pushed = m.pushforward(|p| Ok(vec![p[0] + 1.0, p[1] * 2.0])).unwrap();
        let rel = (pushed.total_mass() - mass).abs() / mass;
        assert!(rel <= 1e-12);
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn measure_strategy(max_n: usize) -> impl Strategy<Value = DiscreteMeasure> {
        (1..=max_n)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(-10.0..10.0f64, n),
                    proptest::collection::vec(0.01..1.0f64, n),
                )
            })
            .prop_map(|(xs, ws)| {
                DiscreteMeasure::new(xs.into_iter().map(|x| vec![x]).collect(), ws).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Mass is conserved to 1e-12 relative by any pushforward.
        #[test]
        fn pushforward_preserves_mass(m in measure_strategy(16), shift in -5.0..5.0f64) {
            let pushed = m.pushforward(|p| Ok(vec![p[0] * 1.5 + shift])).unwrap();
            let rel = (pushed.total_mass() - m.total_mass()).abs() / m.total_mass();
            prop_assert!(rel <= 1e-12);
        }

        /// Composition law: pushing through g then f equals pushing through
        /// f∘g, exactly.
        #[test]
        fn pushforward_composes(m in measure_strategy(12), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let f = move |p: &[f64]| Ok(vec![a * p[0] + b]);
            let g = |p: &[f64]| Ok(vec![p[0] * p[0]]);
            let staged = m.pushforward(g).unwrap().pushforward(f).unwrap();
            let composed = m.pushforward(|p| f(&g(p)?)).unwrap();
            prop_assert_eq!(staged, composed);
        }

        /// Bit-exact symmetry of the squared distance.
        #[test]
        fn w2_symmetric(a in measure_strategy(8), b in measure_strategy(8)) {
            let a = a.with_total_mass(1.0);
            let b = b.with_total_mass(1.0);
            let ab = wasserstein2(&a, &b).unwrap();
            let ba = wasserstein2(&b, &a).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
        }

        /// Binned mass integrates back to the total mass.
        #[test]
        fn binned_density_integrates_to_mass(m in measure_strategy(32), cells in 2usize..20) {
            let grid = Grid::covering(&m, cells, 0.01).unwrap();
            let rho = binned_density(&m, &grid).unwrap();
            let total: f64 = rho.iter().map(|v| v * grid.cell_volume()).sum();
            let rel = (total - m.total_mass()).abs() / m.total_mass();
            prop_assert!(rel <= 1e-9);
        }
    }
}
