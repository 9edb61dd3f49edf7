use super::*;
use crate::measures::DiscreteMeasure;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_line(xs: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect(), 1.0).unwrap()
}

/// All permutations of 0..n (Heap's algorithm), deterministic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            go(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    go(n, &mut a, &mut out);
    out
}

/// Brute-force assignment oracle for uniform measures: best permutation and
/// its objective.
fn brute_force(cost: &CostMatrix, maximize: bool) -> (Vec<usize>, f64) {
    let n = cost.n;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in permutations(n) {
        let total: f64 = (0..n).map(|i| cost.get(i, perm[i])).sum::<f64>() / n as f64;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    total > *b
                } else {
                    total < *b
                }
            }
        };
        if better {
            best = Some((perm, total));
        }
    }
    best.unwrap()
}

#[test]
fn single_pair_plan() {
    let mu = DiscreteMeasure::dirac(vec![1.0]).unwrap().with_total_mass(3.0);
    let nu = DiscreteMeasure::dirac(vec![2.0]).unwrap().with_total_mass(3.0);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan = solve_exact(&mu, &nu, &cost).unwrap();
    assert_eq!(plan.get(0, 0), 3.0);
    assert!((plan.objective - 3.0 * 0.5).abs() < 1e-12);
}

#[test]
fn two_point_swap_matches_enumeration() {
    let mu = uniform_line(&[0.0, 1.0]);
    let nu = uniform_line(&[1.1, -0.1]);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan = solve_exact(&mu, &nu, &cost).unwrap();
    let (perm, obj) = brute_force(&cost, false);
    assert!((plan.objective - obj).abs() < 1e-12);
    for i in 0..2 {
        assert!((plan.get(i, perm[i]) - 0.5).abs() < 1e-12);
    }
}

/// Exact solver vs exhaustive enumeration on the dual-type cost |x+y|²/4
/// maximized over 8-point uniform measures.
#[test]
fn eight_point_max_cost_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..5 {
        let xs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = uniform_line(&xs);
        let nu = uniform_line(&ys);
        let cost = CostMatrix::from_fn(&mu, &nu, Orientation::Maximize, |x, y| {
            Ok((x[0] + y[0]) * (x[0] + y[0]) / 4.0)
        })
        .unwrap();
        let plan = solve_exact(&mu, &nu, &cost).unwrap();
        let (perm, obj) = brute_force(&cost, true);
        assert!(
            (plan.objective - obj).abs() <= 1e-10,
            "{} vs {}",
            plan.objective,
            obj
        );
        for i in 0..8 {
            assert!((plan.get(i, perm[i]) - 0.125).abs() < 1e-10);
        }
    }
}

#[test]
fn orientation_consistency_and_duality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 7;
    let mu = DiscreteMeasure::uniform(
        (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect(),
        2.0,
    )
    .unwrap();
    let nu = DiscreteMeasure::uniform(
        (0..n + 3).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect(),
        2.0,
    )
    .unwrap();
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan_min = solve_exact(&mu, &nu, &cost).unwrap();
    let plan_max = solve_exact(&mu, &nu, &cost.negated()).unwrap();
    // Identical plans, negated objective.
    assert_eq!(plan_min.support(), plan_max.support());
    assert!((plan_min.objective + plan_max.objective).abs() < 1e-12);

    // LP duality: primal == dual objective.
    let dual_obj: f64 = plan_min
        .u
        .iter()
        .zip(mu.weights())
        .map(|(u, w)| u * w)
        .sum::<f64>()
        + plan_min
            .v
            .iter()
            .zip(nu.weights())
            .map(|(v, w)| v * w)
            .sum::<f64>();
    assert!(
        (plan_min.objective - dual_obj).abs() <= 1e-8 * plan_min.objective.abs().max(1e-12),
        "primal {} dual {}",
        plan_min.objective,
        dual_obj
    );

    // Complementary slackness on the support.
    for (i, j, _) in plan_min.support() {
        let r = cost.get(i, j) - plan_min.u[i] - plan_min.v[j];
        assert!(r.abs() <= 1e-8, "slackness defect {r}");
    }

    // Marginals.
    assert!(plan_min.marginal_residual(mu.weights(), nu.weights()) <= 1e-8 * 2.0);
}

#[test]
fn symmetric_cost_transposes_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 6;
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mu = uniform_line(&xs);
    let nu = uniform_line(&ys);
    let c = |x: &[f64], y: &[f64]| Ok((x[0] + y[0]).powi(2) / 4.0);
    let fwd_cost = CostMatrix::from_fn(&mu, &nu, Orientation::Maximize, c).unwrap();
    let rev_cost = CostMatrix::from_fn(&nu, &mu, Orientation::Maximize, c).unwrap();
    let fwd = solve_exact(&mu, &nu, &fwd_cost).unwrap();
    let rev = solve_exact(&nu, &mu, &rev_cost).unwrap();
    let transposed = rev.transposed();
    assert_eq!(fwd.support(), transposed.support());
}

#[test]
fn zero_weight_points_get_empty_rows() {
    let mu = DiscreteMeasure::new(
        vec![vec![0.0], vec![0.5], vec![1.0]],
        vec![0.5, 0.0, 0.5],
    )
    .unwrap();
    let nu = uniform_line(&[0.1, 0.9]);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan = solve_exact(&mu, &nu, &cost).unwrap();
    assert_eq!(plan.row(1).count(), 0);
    assert!(plan.marginal_residual(mu.weights(), nu.weights()) < 1e-12);
}

#[test]
fn size_cap_suggests_entropic() {
    let n = 2_100;
    let mu = DiscreteMeasure::uniform((0..n).map(|i| vec![i as f64]).collect(), 1.0).unwrap();
    let cost = CostMatrix::new(
        n,
        n,
        vec![0.0; n * n],
        Orientation::Minimize,
    )
    .unwrap();
    match solve_exact(&mu, &mu, &cost) {
        Err(crate::Error::SizeCap { .. }) => {}
        other => panic!("expected size cap, got {:?}", other.map(|p| p.objective)),
    }
}

#[test]
fn entropic_self_transport_is_near_diagonal() {
    let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let mu = uniform_line(&xs);
    let cost = CostMatrix::half_sq_euclidean(&mu, &mu).unwrap();
    let cfg = EntropicConfig {
        eps_start_rel: 1e-3,
        eps_end_rel: 1e-3,
        stages: 1,
        marginal_tol: 1e-10,
        max_iterations: 50_000,
    };
    let plan = solve_entropic(&mu, &mu, &cost, &cfg).unwrap();
    let off_diagonal: f64 = plan
        .support()
        .iter()
        .filter(|(i, j, _)| i != j)
        .map(|(_, _, w)| w)
        .sum();
    assert!(off_diagonal <= 1e-3, "off-diagonal mass {off_diagonal}");
}

#[test]
fn entropic_objective_approaches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let xs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mu = uniform_line(&xs);
    let nu = uniform_line(&ys);
    let cost = CostMatrix::from_fn(&mu, &nu, Orientation::Maximize, |x, y| {
        Ok((x[0] + y[0]) * (x[0] + y[0]) / 4.0)
    })
    .unwrap();
    let exact = solve_exact(&mu, &nu, &cost).unwrap();
    let cfg = EntropicConfig {
        eps_end_rel: 1e-4,
        ..EntropicConfig::default()
    };
    let ent = solve_entropic(&mu, &nu, &cost, &cfg).unwrap();
    let rel = (ent.objective - exact.objective).abs() / exact.objective.abs();
    assert!(rel <= 1e-3, "relative objective gap {rel}");
    assert!(ent.marginal_residual(mu.weights(), nu.weights()) <= 1e-6);
}

#[test]
fn entropic_residual_trace_non_increasing_single_stage() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mu = uniform_line(&xs);
    let nu = uniform_line(&ys);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let cfg = EntropicConfig {
        eps_start_rel: 5e-3,
        eps_end_rel: 5e-3,
        stages: 1,
        marginal_tol: 1e-9,
        max_iterations: 100_000,
    };
    let plan = solve_entropic(&mu, &nu, &cost, &cfg).unwrap();
    let trace = &plan.meta.residual_trace;
    assert!(trace.len() > 2);
    for w in trace.windows(2) {
        assert!(
            w[1] <= w[0] * (1.0 + 1e-12),
            "residual increased: {} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn plan_to_map_permutation_is_bijection() {
    let mu = uniform_line(&[0.0, 1.0, 2.0]);
    let nu = uniform_line(&[2.1, 0.1, 1.1]);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan = solve_exact(&mu, &nu, &cost).unwrap();
    let images = plan_to_map(&plan, &nu, MapMode::Dominant).unwrap();
    // Quadratic 1D transport is the monotone rearrangement.
    assert_eq!(images, vec![vec![0.1], vec![1.1], vec![2.1]]);
}

/// 1D quadratic-cost transport between uniform clouds is the sorted matching.
#[test]
fn monotone_rearrangement_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 16;
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mu = uniform_line(&xs);
    let nu = uniform_line(&ys);
    let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
    let plan = solve_exact(&mu, &nu, &cost).unwrap();
    let images = plan_to_map(&plan, &nu, MapMode::Dominant).unwrap();
    // Sorted-assignment oracle.
    let mut xr: Vec<usize> = (0..n).collect();
    xr.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ys_sorted = ys.clone();
    ys_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (rank, &i) in xr.iter().enumerate() {
        assert!(
            (images[i][0] - ys_sorted[rank]).abs() < 1e-12,
            "source {i} mapped to {} expected {}",
            images[i][0],
            ys_sorted[rank]
        );
    }
}

#[test]
fn dominant_mode_rejects_split_rows() {
    // Hand-built half/half split row.
    let nu = uniform_line(&[0.0, 1.0]);
    let plan = TransportPlan::from_entries(
        1,
        2,
        vec![(0, 0, 0.5), (0, 1, 0.5)],
        0.0,
        vec![0.0],
        vec![0.0, 0.0],
        SolverMeta {
            solver: "constructed".into(),
            iterations: 0,
            marginal_residual: 0.0,
            residual_trace: vec![],
        },
    );
    match plan_to_map(&plan, &nu, MapMode::Dominant) {
        Err(crate::Error::MultivaluedMap { row, fraction }) => {
            assert_eq!(row, 0);
            assert!((fraction - 0.5).abs() < 1e-12);
        }
        other => panic!("expected split-row error, got {other:?}"),
    }
    // Barycentric mode averages instead.
    let img = plan_to_map(&plan, &nu, MapMode::Barycentric).unwrap();
    assert!((img[0][0] - 0.5).abs() < 1e-12);
}

/// Exhaustive-enumeration equality on every uniform instance with n ≤ 5
/// (all sizes, one seeded instance per size) plus determinism across calls.
#[test]
fn exact_matches_enumeration_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 2..=5usize {
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = uniform_line(&xs);
        let nu = uniform_line(&ys);
        let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
        let plan = solve_exact(&mu, &nu, &cost).unwrap();
        let again = solve_exact(&mu, &nu, &cost).unwrap();
        assert_eq!(plan.support(), again.support());
        let (_, obj) = brute_force(&cost, false);
        assert!((plan.objective - obj).abs() < 1e-10);
    }
}
