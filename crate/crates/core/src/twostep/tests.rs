use std::sync::Arc;

use super::*;
use crate::measures::Generator;
use crate::ot::SolverMeta;
use crate::potentials::{Polynomial, PolyTerm, QuadraticIso, ScalarField};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_line_measure(n: usize, lo: f64, hi: f64) -> DiscreteMeasure {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
        .collect();
    DiscreteMeasure::uniform(pts, 1.0).unwrap()
}

fn zero_potential(dim: usize) -> Arc<dyn ScalarField> {
    Arc::new(QuadraticIso { dim, a: 0.0 })
}

fn translation_problem(n: usize, s: f64, t: f64) -> TwoStepProblem {
    let rho0 = uniform_line_measure(n, 0.0, 1.0);
    let rho_t = uniform_line_measure(n, s, 1.0 + s);
    TwoStepProblem::new(rho0, rho_t, zero_potential(1), t).unwrap()
}

#[test]
fn reduced_cost_zero_kick_is_quarter_square() {
    let problem = translation_problem(4, 0.5, 2.0);
    let cost = reduced_cost(&problem, CostKind::DualMax).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let x = problem.rho0.point(i)[0];
            let y = problem.rho_t.point(j)[0];
            let want = (x + y) * (x + y) / 4.0;
            assert!(
                (cost.get(i, j) - want).abs() < 1e-12,
                "entry ({i},{j}): {} vs {want}",
                cost.get(i, j)
            );
        }
    }
}

/// Maximizing the dual cost and minimizing the full two-step cost produce the
/// same plan.
#[test]
fn dual_max_and_full_min_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    let pts = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..16).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect()
    };
    let rho0 = DiscreteMeasure::uniform(pts(&mut rng), 1.0).unwrap();
    let rho_t = DiscreteMeasure::uniform(pts(&mut rng), 1.0).unwrap();
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 1, a: 1.0 });
    let problem = TwoStepProblem::new(rho0.clone(), rho_t.clone(), q, 1.0).unwrap();
    let cmax = reduced_cost(&problem, CostKind::DualMax).unwrap();
    let cmin = reduced_cost(&problem, CostKind::FullMin).unwrap();
    let pmax = crate::ot::solve_exact(&rho0, &rho_t, &cmax).unwrap();
    let pmin = crate::ot::solve_exact(&rho0, &rho_t, &cmin).unwrap();
    assert_eq!(pmax.support(), pmin.support());
}

#[test]
fn inner_minimizer_zero_kick_is_midpoint() {
    let problem = translation_problem(4, 0.25, 1.0);
    let z = inner_minimizer(&problem, &[0.2], &[0.8]).unwrap();
    assert!((z[0] - 0.5).abs() < 1e-12);
}

#[test]
fn inner_minimizer_quadratic_kick_quarter_point() {
    // Q = |z|², T = 2: the modified potential is 2|z|², so z = (x+y)/4.
    let rho0 = uniform_line_measure(4, 0.0, 1.0);
    let rho_t = uniform_line_measure(4, 0.0, 1.0);
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 1, a: 1.0 });
    let problem = TwoStepProblem::new(rho0, rho_t, q, 2.0).unwrap();
    let z = inner_minimizer(&problem, &[0.25], &[0.75]).unwrap();
    assert!((z[0] - 0.25).abs() < 1e-12, "z = {}", z[0]);
}

/// Independent oracle: Newton on the bracket
/// `(1/T)(|z−x|² + |y−z|²) + Q(z)` from the midpoint.
#[test]
fn inner_minimizer_matches_newton_oracle() {
    let q = Polynomial::new(
        2,
        vec![
            PolyTerm {
                exponents: vec![2, 0],
                coeff: 0.8,
            },
            PolyTerm {
                exponents: vec![0, 2],
                coeff: 1.4,
            },
            PolyTerm {
                exponents: vec![2, 2],
                coeff: 0.3,
            },
            PolyTerm {
                exponents: vec![1, 0],
                coeff: -0.5,
            },
        ],
    )
    .unwrap();
    let qa: Arc<dyn ScalarField> = Arc::new(q.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rho0 = Generator::UniformBox {
        n: 4,
        lo: vec![-1.0, -1.0],
        hi: vec![1.0, 1.0],
    }
    .sample(1)
    .unwrap();
    let rho_t = Generator::UniformBox {
        n: 4,
        lo: vec![-1.0, -1.0],
        hi: vec![1.0, 1.0],
    }
    .sample(2)
    .unwrap();
    let t = 1.3;
    let problem = TwoStepProblem::new(rho0, rho_t, qa, t).unwrap();
    for _ in 0..20 {
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = inner_minimizer(&problem, &x, &y).unwrap();

        // Oracle: Newton iteration on ∇f(z) = (2/T)(2z − x − y) + ∇Q(z).
        let mut zo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        for _ in 0..60 {
            let gq = q.gradient(&zo).unwrap();
            let grad: Vec<f64> = (0..2)
                .map(|k| (2.0 / t) * (2.0 * zo[k] - x[k] - y[k]) + gq[k])
                .collect();
            let mut hess = q.hessian(&zo).unwrap();
            for k in 0..2 {
                hess[(k, k)] += 4.0 / t;
            }
            let step = hess
                .lu()
                .solve(&DVector::from_column_slice(&grad))
                .unwrap();
            for k in 0..2 {
                zo[k] -= step[k];
            }
            if step.norm() < 1e-14 {
                break;
            }
        }
        for k in 0..2 {
            assert!((z[k] - zo[k]).abs() < 1e-10, "{z:?} vs {zo:?}");
        }
    }
}

#[test]
fn translation_solution_closed_form() {
    let (n, s, t) = (64, 0.5, 2.0);
    let problem = translation_problem(n, s, t);
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    for i in 0..n {
        let x = problem.rho0.point(i)[0];
        // Full map is the translation.
        assert!(
            (solution.map_points[i][0] - (x + s)).abs() < 1e-10,
            "map at {x}"
        );
        // Intermediate is the half-translation.
        assert!((solution.intermediate.point(i)[0] - (x + s / 2.0)).abs() < 1e-10);
        // Initial velocity is s/T everywhere.
        assert!((solution.grad_phi[i][0] - s / t).abs() < 1e-10);
    }
    // Pushforward diagnostic is exact.
    assert!(solution.diagnostics.pushforward_w2_error.unwrap() < 1e-10);
    // The velocity potential is affine with slope s/T up to the O(h) secant
    // offset of the discrete dual (the duals are finite-difference
    // potentials; the *gradients* are the exact objects, asserted above).
    let x0 = problem.rho0.point(0)[0];
    let h = 1.0 / (n as f64 - 1.0);
    let slope = (solution.phi[n - 1] - solution.phi[0]) / (1.0 - 0.0);
    assert!(
        (slope - s / t).abs() <= h,
        "dual potential slope {slope} vs {}",
        s / t
    );
    for i in 0..n {
        let x = problem.rho0.point(i)[0];
        let affine = slope * (x - x0);
        assert!(
            (solution.phi[i] - affine).abs() < 1e-10,
            "phi({x}) = {} deviates from affine {affine}",
            solution.phi[i]
        );
    }
}

/// With no kick the full map collapses to `x + T∇φ`.
#[test]
fn zero_kick_map_identity() {
    let problem = translation_problem(32, 0.3, 1.7);
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    for i in 0..32 {
        let x = problem.rho0.point(i)[0];
        let want = x + 1.7 * solution.grad_phi[i][0];
        assert!((solution.map_points[i][0] - want).abs() < 1e-10);
    }
}

#[test]
fn dirac_to_dirac_any_convex_kick() {
    let x0 = vec![0.2, -0.4];
    let xt = vec![1.0, 0.6];
    let rho0 = DiscreteMeasure::dirac(x0.clone()).unwrap();
    let rho_t = DiscreteMeasure::dirac(xt.clone()).unwrap();
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 2, a: 0.7 });
    let problem = TwoStepProblem::new(rho0, rho_t, q, 1.0).unwrap();
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    for k in 0..2 {
        assert!((solution.map_points[0][k] - xt[k]).abs() < 1e-10);
    }
    // z solves ∇Q̃(z) = x₀ + x_T.
    let z = &solution.grad_phi_tilde[0];
    let g = problem.q_tilde().gradient(z).unwrap();
    for k in 0..2 {
        assert!((g[k] - (x0[k] + xt[k])).abs() < 1e-9);
    }
    // Degenerate grid: no interior cell holds 10 points.
    let ma = ma_residual(&problem, &solution, 8).unwrap();
    assert_eq!(ma.cells_used, 0);
}

/// Factorization `m = m₂ ∘ m₁` and the velocity identity, checked pointwise
/// from the raw fields rather than the construction path.
#[test]
fn factorization_and_velocity_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts: Vec<Vec<f64>> = (0..12)
        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let rho0 = DiscreteMeasure::uniform(pts, 1.0).unwrap();
    let pts_t: Vec<Vec<f64>> = (0..12)
        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let rho_t = DiscreteMeasure::uniform(pts_t, 1.0).unwrap();
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 2, a: 0.5 });
    let t = 1.4;
    let problem = TwoStepProblem::new(rho0, rho_t, q, t).unwrap();
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    for i in 0..12 {
        let x = problem.rho0.point(i);
        let z = &solution.grad_phi_tilde[i]; // m₁(x) = ∇φ̃(x)
        let m2 = problem.q_tilde().gradient(z).unwrap(); // ∇Q̃(z)
        for k in 0..2 {
            let composed = m2[k] - x[k];
            assert!((solution.map_points[i][k] - composed).abs() < 1e-10);
            let vel = (2.0 / t) * (z[k] - x[k]);
            assert!((solution.grad_phi[i][k] - vel).abs() < 1e-10);
        }
    }
    // C¹ bound: observed gradient norm below the box estimate.
    assert!(solution.diagnostics.c1_norm <= solution.diagnostics.c1_bound + 1e-12);
}

#[test]
fn time_symmetry_transposes_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..9).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect()
    };
    let rho0 = DiscreteMeasure::uniform(pts(&mut rng), 1.0).unwrap();
    let rho_t = DiscreteMeasure::uniform(pts(&mut rng), 1.0).unwrap();
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 1, a: 0.3 });
    let fwd = TwoStepProblem::new(rho0.clone(), rho_t.clone(), q.clone(), 1.0).unwrap();
    let rev = TwoStepProblem::new(rho_t, rho0, q, 1.0).unwrap();
    let sf = solve(&fwd, &SolveConfig::default()).unwrap();
    let sr = solve(&rev, &SolveConfig::default()).unwrap();
    assert_eq!(sf.plan.support(), sr.plan.transposed().support());
}

/// Determinant-equation residual vanishes on the translation case:
/// LHS = det[φ̃'' − 1/2] = 1/2 and RHS = ρ₀/(ρ_T∘m · det 2) = 1/2.
#[test]
fn ma_residual_translation_case() {
    let problem = translation_problem(256, 0.5, 2.0);
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    let ma = ma_residual(&problem, &solution, 16).unwrap();
    assert!(ma.cells_used > 0);
    for (center, lhs, rhs) in &ma.cells {
        assert!((lhs - 0.5).abs() < 1e-6, "LHS at {center:?}: {lhs}");
        assert!((rhs - 0.5).abs() < 1e-6, "RHS at {center:?}: {rhs}");
    }
    assert!(ma.max_abs <= 1e-6, "max residual {}", ma.max_abs);
}

/// Gaussian-to-Gaussian with the closed-form affine map: n = 10⁴ support
/// points, constructed permutation plan, interior residual ≤ 0.1.
#[test]
fn ma_residual_gaussian_affine_case() {
    let n = 10_000;
    let gen = Generator::Gaussian {
        n,
        dim: 1,
        mean: vec![0.0],
        std: 1.0,
    };
    let base = gen.sample(314159).unwrap();
    // Sort the support so the monotone matching is the identity pairing.
    let mut xs: Vec<f64> = base.iter_points().map(|p| p[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rho0 = DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect(), 1.0).unwrap();
    // Affine target: y = a·x + b pushforward (monotone, so OT keeps pairing).
    let (a, b) = (0.8, 0.7);
    let rho_t = rho0.pushforward(|p| Ok(vec![a * p[0] + b])).unwrap();
    let t = 2.0;
    let problem = TwoStepProblem::new(rho0.clone(), rho_t, zero_potential(1), t).unwrap();

    // Closed forms: ∇φ̃(x) = (x + ax + b)/2, φ̃(x) = (1+a)x²/4 + bx/2.
    let phi_tilde_exact = |x: f64| (1.0 + a) * x * x / 4.0 + b * x / 2.0;
    let entries: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0 / n as f64)).collect();
    let u: Vec<f64> = (0..n).map(|i| phi_tilde_exact(rho0.point(i)[0])).collect();
    // v makes u ⊕ v consistent on the diagonal; only u enters the recovery.
    let v: Vec<f64> = (0..n)
        .map(|j| {
            let x = rho0.point(j)[0];
            let y = a * x + b;
            (x + y) * (x + y) / 4.0 - u[j]
        })
        .collect();
    let plan = crate::ot::TransportPlan::from_entries(
        n,
        n,
        entries,
        0.0,
        u,
        v,
        SolverMeta {
            solver: "constructed-affine".into(),
            iterations: 0,
            marginal_residual: 0.0,
            residual_trace: vec![],
        },
    );
    let cfg = SolveConfig {
        pushforward_diagnostic: false,
        ..SolveConfig::default()
    };
    let solution = solution_from_plan(&problem, plan, &cfg).unwrap();
    let ma = ma_residual(&problem, &solution, 32).unwrap();
    assert!(ma.cells_used > 5, "only {} cells", ma.cells_used);
    assert!(ma.max_abs <= 0.1, "max interior residual {}", ma.max_abs);
}

#[test]
fn functional_dirac_midpoint_and_linear_shift() {
    let x0 = vec![0.0];
    let xt = vec![1.0];
    let t = 1.0;
    let rho0 = DiscreteMeasure::dirac(x0).unwrap();
    let rho_t = DiscreteMeasure::dirac(xt).unwrap();

    // Zero kick: K(δ_z) = (1/T)(|x₀−z|² + |z−x_T|²), minimized at the midpoint.
    let k_at = |z: f64, term: FunctionalTerm<'_>| {
        let rho = DiscreteMeasure::dirac(vec![z]).unwrap();
        problem3_functional(&rho0, &rho_t, &rho, t, term).unwrap()
    };
    let zero = QuadraticIso { dim: 1, a: 0.0 };
    let k_mid = k_at(0.5, FunctionalTerm::External(&zero));
    assert!((k_mid - 0.5).abs() < 1e-12, "K(mid) = {k_mid}");
    for dz in [-0.2, -0.05, 0.05, 0.2] {
        assert!(k_at(0.5 + dz, FunctionalTerm::External(&zero)) > k_mid);
    }

    // Linear kick Q(z) = g·z shifts the minimizer to mid − gT/4.
    let g = 0.8;
    let lin = Polynomial::new(
        1,
        vec![PolyTerm {
            exponents: vec![1],
            coeff: g,
        }],
    )
    .unwrap();
    let zstar = 0.5 - g * t / 4.0;
    let k_star = k_at(zstar, FunctionalTerm::External(&lin));
    for dz in [-0.1, -0.01, 0.01, 0.1] {
        assert!(k_at(zstar + dz, FunctionalTerm::External(&lin)) > k_star);
    }
}

/// The solver's intermediate measure minimizes the three-term objective:
/// random perturbations only increase it.
#[test]
fn intermediate_measure_minimizes_functional() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let pts = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect()
    };
    let rho0 = DiscreteMeasure::uniform(pts(&mut rng, 10), 1.0).unwrap();
    let rho_t = DiscreteMeasure::uniform(pts(&mut rng, 10), 1.0).unwrap();
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 1, a: 0.6 });
    let problem = TwoStepProblem::new(rho0, rho_t, q, 1.0).unwrap();
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    let k_star = problem.functional_at(&solution.intermediate).unwrap();
    for _ in 0..20 {
        let jitter: Vec<Vec<f64>> = solution
            .intermediate
            .iter_points()
            .map(|p| vec![p[0] + 0.02 * (rng.gen::<f64>() - 0.5)])
            .collect();
        let perturbed = solution.intermediate.with_points(jitter).unwrap();
        let k = problem.functional_at(&perturbed).unwrap();
        assert!(k >= k_star - 1e-12, "perturbed {k} < optimal {k_star}");
    }
}

/// The three-term objective at the intermediate measure reproduces the
/// action implied by the optimal plan.
#[test]
fn functional_matches_implied_action() {
    let problem = translation_problem(32, 0.4, 2.0);
    let solution = solve(&problem, &SolveConfig::default()).unwrap();
    let k = problem.functional_at(&solution.intermediate).unwrap();
    let rel = (k - solution.diagnostics.implied_action).abs()
        / solution.diagnostics.implied_action.abs();
    assert!(rel <= 1e-6, "K = {k}, action = {}", solution.diagnostics.implied_action);
}

#[test]
fn balance_renormalizes_target() {
    let rho0 = uniform_line_measure(4, 0.0, 1.0);
    let rho_t = uniform_line_measure(4, 0.0, 1.0).with_total_mass(1.5);
    let problem = TwoStepProblem::new(rho0, rho_t, zero_potential(1), 1.0).unwrap();
    assert!((problem.rho_t.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn nonconvex_modified_potential_is_refused() {
    // Q = −2|z|² with T = 2 makes Q̃ = −|z|² concave.
    let rho0 = uniform_line_measure(4, 0.0, 1.0);
    let rho_t = uniform_line_measure(4, 0.0, 1.0);
    let q: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim: 1, a: -2.0 });
    match TwoStepProblem::new(rho0, rho_t, q, 2.0) {
        Err(crate::Error::Convexity { .. }) => {}
        other => panic!("expected convexity refusal, got {:?}", other.err()),
    }
}

#[test]
fn entropic_solver_drives_same_recovery() {
    // Entropic plans are diffuse at the blur scale exp(−h²/ε), so map
    // extraction runs in barycentric mode and tolerances sit at that scale.
    let problem = translation_problem(24, 0.5, 2.0);
    let cfg = SolveConfig {
        solver: SolverChoice::Entropic(crate::ot::EntropicConfig::default()),
        map_mode: crate::ot::MapMode::Barycentric,
        pushforward_diagnostic: false,
    };
    let solution = solve(&problem, &cfg).unwrap();
    for i in 0..24 {
        let x = problem.rho0.point(i)[0];
        assert!(
            (solution.map_points[i][0] - (x + 0.5)).abs() < 2e-2,
            "map at {x}: {}",
            solution.map_points[i][0]
        );
    }
}
