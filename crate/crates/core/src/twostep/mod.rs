//! The two-step transport problem: free motion on `[0, T/2]`, a velocity kick
//! `∇Q` at `T/2`, free motion on `[T/2, T]`.
//!
//! With the modified potential `Q̃(z) = (T/2)Q(z) + |z|²`, the problem reduces
//! to point-to-point transport with cost `c(x,y) = Q̃*(x+y)` **maximized**
//! over couplings (equivalently, the full two-step cost
//! `c_T = −(2/T)Q̃*(x+y) + (|x|²+|y|²)/T` minimized; both produce the same
//! plan). From the optimal plan the module recovers:
//!
//! - the velocity potential samples `φ̃`, `∇φ̃(x) = ∇Q̃*(x + y)`,
//!   `φ = (2/T)(φ̃ − |x|²/2)`;
//! - the intermediate measure, the pushforward of the source under `∇φ̃`;
//! - the full map `m(x) = ∇Q̃(∇φ̃(x)) − x`;
//! - determinant-equation residuals and pushforward diagnostics.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measures::{binned_density, check_balance, wasserstein2, DiscreteMeasure, Grid};
use crate::meanfield::interaction_energy;
use crate::ot::{
    plan_to_map, solve_entropic, solve_exact, CostMatrix, EntropicConfig, MapMode, Orientation,
    TransportPlan,
};
use crate::potentials::{LegendreDual, ModifiedPotential, ScalarField};

/// Stationarity tolerance of the inner minimizer (relative to the local
/// gradient scale).
const INNER_STATIONARITY_TOL: f64 = 1e-8;

/// Relative mass deviation beyond which balancing renormalization warns.
const BALANCE_WARN_TOL: f64 = 1e-6;

/// A fully assembled two-step problem.
///
/// Construction enforces mass balance (the target is renormalized to the
/// source mass; deviations above `1e-6` relative log a warning) and screens
/// uniform convexity of `Q̃` on the working box before any solve.
pub struct TwoStepProblem {
    pub rho0: DiscreteMeasure,
    pub rho_t: DiscreteMeasure,
    q: Arc<dyn ScalarField>,
    q_tilde: Arc<ModifiedPotential<Arc<dyn ScalarField>>>,
    q_star: Arc<LegendreDual<Arc<ModifiedPotential<Arc<dyn ScalarField>>>>>,
    t: f64,
}

impl TwoStepProblem {
    pub fn new(
        rho0: DiscreteMeasure,
        rho_t: DiscreteMeasure,
        q: Arc<dyn ScalarField>,
        t: f64,
    ) -> Result<Self> {
        if t <= 0.0 {
            return Err(Error::Invalid("horizon T must be positive".into()));
        }
        if rho0.dim() != q.dim() || rho_t.dim() != q.dim() {
            return Err(Error::Dimension {
                expected: q.dim(),
                got: rho0.dim(),
            });
        }
        let (m0, mt) = (rho0.total_mass(), rho_t.total_mass());
        let rel = (m0 - mt).abs() / m0.abs().max(mt.abs());
        if rel > BALANCE_WARN_TOL {
            log::warn!(
                "balance condition violated by {rel:.3e} relative; renormalizing target mass {mt} -> {m0}"
            );
        }
        let rho_t = rho_t.with_total_mass(m0);

        let q_tilde = Arc::new(ModifiedPotential::new(q.clone(), t));
        let q_star = Arc::new(LegendreDual::new(q_tilde.clone()));
        let problem = Self {
            rho0,
            rho_t,
            q,
            q_tilde,
            q_star,
            t,
        };
        problem.screen_uniform_convexity()?;
        Ok(problem)
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn kick_potential(&self) -> &Arc<dyn ScalarField> {
        &self.q
    }

    /// `Q̃ = (T/2)Q + |z|²`.
    pub fn q_tilde(&self) -> &Arc<ModifiedPotential<Arc<dyn ScalarField>>> {
        &self.q_tilde
    }

    /// `Q̃*`, evaluated by Newton gradient inversion (analytic-grade).
    pub fn q_star(&self) -> &Arc<LegendreDual<Arc<ModifiedPotential<Arc<dyn ScalarField>>>>> {
        &self.q_star
    }

    /// Min eigenvalue screen of `D²Q̃` over the working z-box.
    fn screen_uniform_convexity(&self) -> Result<()> {
        for z in self.working_z_samples(3)? {
            let h = self.q_tilde.hessian(&z)?;
            let min_eig = h.symmetric_eigenvalues().min();
            if min_eig <= 0.0 {
                return Err(Error::Convexity {
                    eigenvalue: min_eig,
                    witness: z,
                });
            }
        }
        Ok(())
    }

    /// The p-box `support(ρ₀) ⊕ support(ρ_T)` (Minkowski sum of bounding
    /// boxes), as (lo, hi).
    pub fn p_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo0, hi0) = self.rho0.bounding_box();
        let (lot, hit) = self.rho_t.bounding_box();
        let lo: Vec<f64> = lo0.iter().zip(&lot).map(|(a, b)| a + b).collect();
        let hi: Vec<f64> = hi0.iter().zip(&hit).map(|(a, b)| a + b).collect();
        (lo, hi)
    }

    /// Conservative samples of the intermediate z-domain: the image of a
    /// p-box lattice under `∇Q̃*` (gradient-norm bound argument).
    pub fn working_z_samples(&self, per_axis: usize) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = self.p_box();
        let d = lo.len();
        let n = per_axis.max(2);
        let total = n.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rest % n;
                rest /= n;
                p[k] = lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64;
            }
            out.push(self.q_star.solve_z(&p)?);
        }
        Ok(out)
    }
}

/// Which cost matrix [`reduced_cost`] assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// `Q̃*(x_i + y_j)`, to be maximized.
    DualMax,
    /// The full two-step cost `−(2/T)Q̃*(x+y) + (|x|²+|y|²)/T`, minimized.
    FullMin,
}

/// Assembles the transport cost for the problem. Maximizing the `DualMax`
/// matrix and minimizing the `FullMin` matrix yield identical plans; the
/// x/y-only terms shift the objective but not the optimizer.
pub fn reduced_cost(problem: &TwoStepProblem, kind: CostKind) -> Result<CostMatrix> {
    let qs = problem.q_star();
    let t = problem.horizon();
    match kind {
        CostKind::DualMax => CostMatrix::from_fn(
            &problem.rho0,
            &problem.rho_t,
            Orientation::Maximize,
            |x, y| {
                let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                qs.value(&p)
            },
        ),
        CostKind::FullMin => CostMatrix::from_fn(
            &problem.rho0,
            &problem.rho_t,
            Orientation::Minimize,
            |x, y| {
                let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
                Ok(-(2.0 / t) * qs.value(&p)? + (sq(x) + sq(y)) / t)
            },
        ),
    }
}

/// The kick-time position for the endpoint pair `(x, y)`:
/// `argmin_z (1/T)(|z−x|² + |y−z|²) + Q(z) = ∇Q̃*(x+y)`. Verifies the
/// stationarity relation `(y−z)/(T/2) = (z−x)/(T/2) + ∇Q(z)` and errors if
/// the dual field is inconsistent with it.
pub fn inner_minimizer(problem: &TwoStepProblem, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let z = problem.q_star().solve_z(&p)?;
    let gq = problem.kick_potential().gradient(&z)?;
    let half_t = 0.5 * problem.horizon();
    let mut resid = 0.0f64;
    let mut scale = 1.0f64;
    for k in 0..z.len() {
        let lhs = (y[k] - z[k]) / half_t;
        let rhs = (z[k] - x[k]) / half_t + gq[k];
        resid = resid.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs()).max(rhs.abs());
    }
    if resid > INNER_STATIONARITY_TOL * scale {
        return Err(Error::Stationarity {
            residual: resid,
            tolerance: INNER_STATIONARITY_TOL * scale,
        });
    }
    Ok(z)
}

/// Solver selection for [`solve`].
#[derive(Debug, Clone)]
pub enum SolverChoice {
    Exact,
    Entropic(EntropicConfig),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub solver: SolverChoice,
    pub map_mode: MapMode,
    /// Compute the pushforward W2 diagnostic (costs one extra exact solve).
    pub pushforward_diagnostic: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            solver: SolverChoice::Exact,
            map_mode: MapMode::Dominant,
            pushforward_diagnostic: true,
        }
    }
}

/// Summary statistics of the determinant-equation residual.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaResidualStats {
    pub cells_used: usize,
    pub cells_skipped: usize,
    pub max_abs: f64,
    pub l1: f64,
    /// Per-cell `(center, lhs, rhs)` for the cells that entered the stats.
    #[serde(skip)]
    pub cells: Vec<(Vec<f64>, f64, f64)>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics {
    /// `W2(m_#ρ₀, ρ_T)` (square root of the ½-convention squared distance).
    pub pushforward_w2_error: Option<f64>,
    /// Max `|∇φ̃|` over source points.
    pub c1_norm: f64,
    /// A-priori bound: max `|∇Q̃*|` over the endpoint Minkowski box.
    pub c1_bound: f64,
    /// Plan objective (the maximized `Σ π Q̃*`).
    pub objective: f64,
    /// `Σ π c_T`, the action the plan implies.
    pub implied_action: f64,
    pub solver: crate::ot::SolverMeta,
}

/// Full output of a two-step solve.
pub struct TwoStepSolution {
    pub plan: TransportPlan,
    /// Matched target per source index (dominant target or row barycenter).
    pub matched_targets: Vec<Vec<f64>>,
    /// `φ̃` samples at the source points, gauge `φ̃(x_first) = |x_first|²/2`.
    pub phi_tilde: Vec<f64>,
    pub grad_phi_tilde: Vec<Vec<f64>>,
    /// `φ = (2/T)(φ̃ − |x|²/2)`; `∇φ` is the initial velocity field.
    pub phi: Vec<f64>,
    pub grad_phi: Vec<Vec<f64>>,
    /// `ρ(T/2)`: pushforward of the source under `∇φ̃`.
    pub intermediate: DiscreteMeasure,
    /// `m(x_i) = ∇Q̃(∇φ̃(x_i)) − x_i` per source index.
    pub map_points: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// Solves the two-step problem end to end.
pub fn solve(problem: &TwoStepProblem, config: &SolveConfig) -> Result<TwoStepSolution> {
    let cost = reduced_cost(problem, CostKind::DualMax)?;
    let plan = match &config.solver {
        SolverChoice::Exact => solve_exact(&problem.rho0, &problem.rho_t, &cost)?,
        SolverChoice::Entropic(cfg) => solve_entropic(&problem.rho0, &problem.rho_t, &cost, cfg)?,
    };
    solution_from_plan(problem, plan, config)
}

/// Recovers the potential, intermediate measure, map and diagnostics from an
/// already-computed plan (the solver calls this; constructed closed-form
/// plans can reuse it directly, which also sidesteps the dense-cost size cap).
pub fn solution_from_plan(
    problem: &TwoStepProblem,
    plan: TransportPlan,
    config: &SolveConfig,
) -> Result<TwoStepSolution> {
    let rho0 = &problem.rho0;
    let t = problem.horizon();
    let n = rho0.len();
    let matched_targets = plan_to_map(&plan, &problem.rho_t, config.map_mode)?;

    let q_star = problem.q_star();
    let q_tilde = problem.q_tilde();

    let mut grad_phi_tilde = Vec::with_capacity(n);
    for i in 0..n {
        let x = rho0.point(i);
        let p: Vec<f64> = x.iter().zip(&matched_targets[i]).map(|(a, b)| a + b).collect();
        grad_phi_tilde.push(q_star.gradient(&p)?);
    }

    // φ̃ values from the dual potential, pinned at the first source point.
    let x0 = rho0.point(0);
    let gauge = 0.5 * x0.iter().map(|c| c * c).sum::<f64>() - plan.u[0];
    let phi_tilde: Vec<f64> = (0..n).map(|i| plan.u[i] + gauge).collect();

    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let x = rho0.point(i);
            (2.0 / t) * (phi_tilde[i] - 0.5 * x.iter().map(|c| c * c).sum::<f64>())
        })
        .collect();
    let grad_phi: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = rho0.point(i);
            grad_phi_tilde[i]
                .iter()
                .zip(x)
                .map(|(g, c)| (2.0 / t) * (g - c))
                .collect()
        })
        .collect();

    let intermediate = DiscreteMeasure::new(grad_phi_tilde.clone(), rho0.weights().to_vec())?;

    let mut map_points: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, g) in grad_phi_tilde.iter().enumerate() {
        let x = rho0.point(i);
        let gq = q_tilde.gradient(g)?;
        map_points.push(gq.iter().zip(x).map(|(a, b)| a - b).collect());
    }

    // Diagnostics.
    let c1_norm = grad_phi_tilde
        .iter()
        .map(|g| g.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let c1_bound = {
        let mut worst = 0.0f64;
        let (lo, hi) = problem.p_box();
        let d = lo.len();
        let per = 3usize;
        for flat in 0..per.pow(d as u32) {
            let mut rest = flat;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                p[k] = lo[k] + (hi[k] - lo[k]) * (rest % per) as f64 / (per - 1) as f64;
                rest /= per;
            }
            let g = q_star.gradient(&p)?;
            worst = worst.max(g.iter().map(|c| c * c).sum::<f64>().sqrt());
        }
        worst
    };

    let pushforward_w2_error = if config.pushforward_diagnostic {
        let image = DiscreteMeasure::new(map_points.clone(), rho0.weights().to_vec())?;
        Some(wasserstein2(&image, &problem.rho_t)?.max(0.0).sqrt())
    } else {
        None
    };

    // Implied action: Σ π c_T with c_T = −(2/T)Q̃* + (|x|²+|y|²)/T, evaluated
    // on the support only.
    let mut implied_action = 0.0;
    for (i, j, w) in plan.support() {
        let x = rho0.point(i);
        let y = problem.rho_t.point(j);
        let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
        implied_action += w * (-(2.0 / t) * q_star.value(&p)? + (sq(x) + sq(y)) / t);
    }

    let diagnostics = Diagnostics {
        pushforward_w2_error,
        c1_norm,
        c1_bound,
        objective: plan.objective,
        implied_action,
        solver: plan.meta.clone(),
    };

    Ok(TwoStepSolution {
        plan,
        matched_targets,
        phi_tilde,
        grad_phi_tilde,
        phi,
        grad_phi,
        intermediate,
        map_points,
        diagnostics,
    })
}

/// Per-cell defect of the determinant equation
/// `det[D²φ̃ − (D²Q̃(∇φ̃))⁻¹] = ρ₀ / (ρ_T∘m · det D²Q̃(∇φ̃))`
/// over interior grid cells holding at least `min_points` source points.
/// The Hessian of `φ̃` comes from a distance-weighted local quadratic fit
/// over the nearest matched pairs; boundary cells are excluded.
pub fn ma_residual(
    problem: &TwoStepProblem,
    solution: &TwoStepSolution,
    cells_per_axis: usize,
) -> Result<MaResidualStats> {
    let rho0 = &problem.rho0;
    let d = rho0.dim();
    let min_points = 10usize;
    let k_fit = 2 * d * d + 6;

    let grid = Grid::covering(rho0, cells_per_axis, 1e-6)?;
    let rho0_density = binned_density(rho0, &grid)?;
    let target_grid = Grid::covering(&problem.rho_t, cells_per_axis, 1e-6)?;
    let rho_t_density = binned_density(&problem.rho_t, &target_grid)?;

    // Bucket source indices per cell.
    let mut cell_points: Vec<Vec<usize>> = vec![Vec::new(); grid.n_cells()];
    for (i, p) in rho0.iter_points().enumerate() {
        if let Some(c) = grid.cell_index(p) {
            cell_points[c].push(i);
        }
    }

    let mut cells = Vec::new();
    let mut skipped = 0usize;
    for c in 0..grid.n_cells() {
        if !grid.is_interior(c) {
            continue;
        }
        if cell_points[c].len() < min_points {
            skipped += 1;
            continue;
        }
        let center = grid.cell_center(c);

        // Local quadratic fit of φ̃ around the cell center.
        let fit = match local_quadratic_fit(rho0, &solution.phi_tilde, &center, k_fit) {
            Some(f) => f,
            None => {
                skipped += 1;
                continue;
            }
        };
        let (grad, hess) = fit;

        // Map image of the cell: average of m(x_i) over the cell's points.
        let mut ym = vec![0.0; d];
        for &i in &cell_points[c] {
            for k in 0..d {
                ym[k] += solution.map_points[i][k];
            }
        }
        for v in &mut ym {
            *v /= cell_points[c].len() as f64;
        }
        let rho_t_at_m = match target_grid.cell_index(&ym) {
            Some(tc) => rho_t_density[tc],
            None => {
                skipped += 1;
                continue;
            }
        };
        if rho_t_at_m <= 0.0 {
            skipped += 1;
            continue;
        }

        let h_qt = problem.q_tilde().hessian(&grad)?;
        let det_h_qt = h_qt.determinant();
        let inv = h_qt.try_inverse().ok_or_else(|| Error::Conditioning {
            point: grad.clone(),
            eigenvalues: vec![],
        })?;
        let lhs = (hess - inv).determinant();
        let rhs = rho0_density[c] / (rho_t_at_m * det_h_qt);
        cells.push((center, lhs, rhs));
    }

    let max_abs = cells
        .iter()
        .map(|(_, l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    let l1 = cells.iter().map(|(_, l, r)| (l - r).abs()).sum::<f64>()
        / cells.len().max(1) as f64;
    Ok(MaResidualStats {
        cells_used: cells.len(),
        cells_skipped: skipped,
        max_abs,
        l1,
        cells,
    })
}

/// Weighted least-squares quadratic `φ̃ ≈ c + g·δ + ½ δᵀHδ` over the `k`
/// nearest source points; returns `(∇φ̃(center), D²φ̃(center))`.
fn local_quadratic_fit(
    rho0: &DiscreteMeasure,
    phi_tilde: &[f64],
    center: &[f64],
    k: usize,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let d = rho0.dim();
    let n_unknowns = 1 + d + d * (d + 1) / 2;
    let n = rho0.len();
    if n < n_unknowns {
        return None;
    }
    let k = k.min(n);

    // k nearest points by squared distance (deterministic total order).
    let mut order: Vec<(f64, usize)> = rho0
        .iter_points()
        .enumerate()
        .map(|(i, p)| {
            let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let picked = &order[..k.max(n_unknowns)];

    let r0 = picked[picked.len() / 2].0.sqrt().max(1e-12);
    let rows = picked.len();
    let mut a = DMatrix::zeros(rows, n_unknowns);
    let mut b = DVector::zeros(rows);
    for (r, &(d2, i)) in picked.iter().enumerate() {
        let w = (-d2 / (2.0 * r0 * r0)).exp().sqrt();
        let p = rho0.point(i);
        let delta: Vec<f64> = p.iter().zip(center).map(|(x, c)| x - c).collect();
        let mut col = 0;
        a[(r, col)] = w;
        col += 1;
        for dk in &delta {
            a[(r, col)] = w * dk;
            col += 1;
        }
        for ii in 0..d {
            for jj in ii..d {
                let factor = if ii == jj { 0.5 } else { 1.0 };
                a[(r, col)] = w * factor * delta[ii] * delta[jj];
                col += 1;
            }
        }
        b[r] = w * phi_tilde[i];
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;

    let grad = sol.as_slice()[1..1 + d].to_vec();
    let mut hess = DMatrix::zeros(d, d);
    let mut col = 1 + d;
    for ii in 0..d {
        for jj in ii..d {
            hess[(ii, jj)] = sol[col];
            hess[(jj, ii)] = sol[col];
            col += 1;
        }
    }
    Some((grad, hess))
}

/// What the intermediate-time functional couples to.
pub enum FunctionalTerm<'a> {
    /// Linear external potential: `F(ρ) = ∫ Q dρ`.
    External(&'a dyn ScalarField),
    /// Pairwise self-interaction: `F(ρ) = ½ ∫∫ κ(x−y) dρ dρ`.
    Interaction(&'a dyn ScalarField),
}

/// The intermediate-measure objective
/// `K(ρ) = (2/T) W2²(ρ₀, ρ) + F(ρ) + (2/T) W2²(ρ, ρ_T)`.
pub fn problem3_functional(
    rho0: &DiscreteMeasure,
    rho_t: &DiscreteMeasure,
    rho: &DiscreteMeasure,
    t: f64,
    term: FunctionalTerm<'_>,
) -> Result<f64> {
    check_balance(rho0, rho, 1e-9)?;
    let w1 = wasserstein2(rho0, rho)?;
    let w2 = wasserstein2(rho, rho_t)?;
    let f = match term {
        FunctionalTerm::External(q) => {
            let mut acc = 0.0;
            for (p, &w) in rho.iter_points().zip(rho.weights()) {
                acc += w * q.value(p)?;
            }
            acc
        }
        FunctionalTerm::Interaction(kappa) => interaction_energy(rho, kappa, None)?,
    };
    Ok((2.0 / t) * (w1 + w2) + f)
}

impl TwoStepProblem {
    /// [`problem3_functional`] with this problem's external potential.
    pub fn functional_at(&self, rho: &DiscreteMeasure) -> Result<f64> {
        problem3_functional(
            &self.rho0,
            &self.rho_t,
            rho,
            self.t,
            FunctionalTerm::External(self.q.as_ref()),
        )
    }
}

#[cfg(test)]
mod tests;
