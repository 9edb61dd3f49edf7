use twostep::measures::{DiscreteMeasure, Generator};
use twostep::ot::{solve_exact, solve_entropic, CostMatrix, EntropicConfig};

fn main() {
    for (n, m, seed) in [(300usize, 300usize, 1u64), (500, 450, 2), (800, 800, 3)] {
        let mu = Generator::Gaussian { n, dim: 2, mean: vec![0.0, 0.0], std: 1.0 }.sample(seed).unwrap();
        let nu = Generator::UniformBall { n: m, dim: 2, center: vec![1.0, 0.5], radius: 2.0 }.sample(seed + 100).unwrap();
        let cost = CostMatrix::half_sq_euclidean(&mu, &nu).unwrap();
        let t0 = std::time::Instant::now();
        let exact = solve_exact(&mu, &nu, &cost).unwrap();
        let t_exact = t0.elapsed();
        let dual_obj: f64 = exact.u.iter().zip(mu.weights()).map(|(u, w)| u * w).sum::<f64>()
            + exact.v.iter().zip(nu.weights()).map(|(v, w)| v * w).sum::<f64>();
        let gap = (exact.objective - dual_obj).abs() / exact.objective.abs();
        let marg = exact.marginal_residual(mu.weights(), nu.weights());
        let t1 = std::time::Instant::now();
        let ent = solve_entropic(&mu, &nu, &cost, &EntropicConfig { eps_end_rel: 1e-3, marginal_tol: 1e-5, ..Default::default() }).unwrap();
        let t_ent = t1.elapsed();
        let rel = (ent.objective - exact.objective) / exact.objective;
        println!(
            "{n}x{m}: exact obj {:.6} ({} pivots, {:?}, duality gap {:.1e}, marg {:.1e}); entropic rel gap {:+.2e} ({} its, {:?})",
            exact.objective, exact.meta.iterations, t_exact, gap, marg, rel, ent.meta.iterations, t_ent
        );
        assert!(gap <= 1e-8 && marg <= 1e-8 && rel.abs() < 5e-2);
    }
    println!("stress ok");
}
