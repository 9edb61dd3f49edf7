//! The self-interacting case: the kick potential is the convolution of a
//! pair kernel with the intermediate density itself,
//! `Q(x) = Σ_i w_i κ(x − y_i)`, and the unknown intermediate measure is a
//! fixed point: solving the non-interacting problem with the convolved
//! potential must reproduce the measure used to build the potential.
//!
//! The fixed point is approached by damped Picard iteration. No convergence
//! proof backs the iteration itself (existence and uniqueness of the
//! minimiser is known, a constructive scheme is not), so the loop reports a
//! self-consistency residual and never claims more than the observed trace.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measures::{wasserstein2, DiscreteMeasure};
use crate::ot::MapMode;
use crate::potentials::{DerivMode, QuadraticIso, ScalarField, Tensor3, Tensor4};
use crate::twostep::{
    problem3_functional, solve, FunctionalTerm, SolveConfig, TwoStepProblem, TwoStepSolution,
};
use crate::conditions::{check_h2c, check_kernel_convexity, ConditionReport, SampleRegion};

use nalgebra::DMatrix;

/// Default exclusion radius for singular kernels, as a fraction of the
/// support diameter.
pub const DEFAULT_EXCLUSION_REL: f64 = 1e-6;

/// `Q = κ ∗ ρ̄` for a discrete `ρ̄`: the weighted sum of shifted kernels.
/// Derivatives are the same weighted sums of `κ`'s derivatives — exact, no
/// quadrature error.
pub struct ConvolvedKernel {
    kernel: Arc<dyn ScalarField>,
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Colliding evaluations closer than this to a center are refused
    /// (singular kernels only; `None` means the kernel is entire).
    exclusion_radius: Option<f64>,
}

impl ConvolvedKernel {
    pub fn new(
        kernel: Arc<dyn ScalarField>,
        rho_bar: &DiscreteMeasure,
        exclusion_radius: Option<f64>,
    ) -> Result<Self> {
        if kernel.dim() != rho_bar.dim() {
            return Err(Error::Dimension {
                expected: kernel.dim(),
                got: rho_bar.dim(),
            });
        }
        Ok(Self {
            kernel,
            centers: rho_bar.iter_points().map(|p| p.to_vec()).collect(),
            weights: rho_bar.weights().to_vec(),
            exclusion_radius,
        })
    }

    fn guard(&self, x: &[f64], i: usize) -> Result<Vec<f64>> {
        let diff: Vec<f64> = x.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
        if let Some(r) = self.exclusion_radius {
            let d2: f64 = diff.iter().map(|v| v * v).sum();
            if d2 < r * r {
                return Err(Error::Singularity {
                    what: "kernel convolution".into(),
                    i,
                    j: i,
                    dist: d2.sqrt(),
                });
            }
        }
        Ok(diff)
    }
}

impl ScalarField for ConvolvedKernel {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w * self.kernel.value(&self.guard(x, i)?)?;
        }
        Ok(acc)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dim()];
        for (i, &w) in self.weights.iter().enumerate() {
            let g = self.kernel.gradient(&self.guard(x, i)?)?;
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a += w * gi;
            }
        }
        Ok(acc)
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut acc = DMatrix::zeros(d, d);
        for (i, &w) in self.weights.iter().enumerate() {
            acc += self.kernel.hessian(&self.guard(x, i)?)? * w;
        }
        Ok(acc)
    }

    fn third(&self, x: &[f64]) -> Result<Tensor3> {
        let mut acc = Tensor3::zeros(self.dim());
        for (i, &w) in self.weights.iter().enumerate() {
            acc = acc.add(&self.kernel.third(&self.guard(x, i)?)?.scale(w));
        }
        Ok(acc)
    }

    fn fourth(&self, x: &[f64]) -> Result<Tensor4> {
        let mut acc = Tensor4::zeros(self.dim());
        for (i, &w) in self.weights.iter().enumerate() {
            acc = acc.add(&self.kernel.fourth(&self.guard(x, i)?)?.scale(w));
        }
        Ok(acc)
    }

    fn mode(&self) -> DerivMode {
        self.kernel.mode()
    }
}

/// Builds `Q = κ ∗ ρ̄`.
pub fn convolve_potential(
    kappa: Arc<dyn ScalarField>,
    rho_bar: &DiscreteMeasure,
    exclusion_radius: Option<f64>,
) -> Result<ConvolvedKernel> {
    ConvolvedKernel::new(kappa, rho_bar, exclusion_radius)
}

/// `½ Σ_i Σ_j w_i w_j κ(y_i − y_j)`.
///
/// Smooth kernels (`exclusion_radius = None`) include the self-pairs through
/// `κ(0)`; singular kernels skip self-pairs and refuse off-diagonal pairs
/// closer than the exclusion radius. The double sum runs in fixed index
/// order.
pub fn interaction_energy(
    rho: &DiscreteMeasure,
    kappa: &dyn ScalarField,
    exclusion_radius: Option<f64>,
) -> Result<f64> {
    let n = rho.len();
    let w = rho.weights();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                if exclusion_radius.is_none() {
                    let zero = vec![0.0; rho.dim()];
                    acc += w[i] * w[j] * kappa.value(&zero)?;
                }
                continue;
            }
            let diff: Vec<f64> = rho
                .point(i)
                .iter()
                .zip(rho.point(j))
                .map(|(a, b)| a - b)
                .collect();
            if let Some(r) = exclusion_radius {
                let dist = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                if dist < r {
                    return Err(Error::Singularity {
                        what: "interaction energy".into(),
                        i,
                        j,
                        dist,
                    });
                }
            }
            acc += w[i] * w[j] * kappa.value(&diff)?;
        }
    }
    Ok(0.5 * acc)
}

/// The self-interacting problem setup.
pub struct MeanFieldProblem {
    pub rho0: DiscreteMeasure,
    pub rho_t: DiscreteMeasure,
    pub kappa: Arc<dyn ScalarField>,
    pub t: f64,
    /// Picard damping λ ∈ (0, 1]; halved automatically on oscillation.
    pub damping: f64,
    /// Stop when the support-distance between successive iterates drops
    /// below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `Some(r)`: treat the kernel as singular with exclusion radius `r`.
    pub exclusion_radius: Option<f64>,
}

impl MeanFieldProblem {
    pub fn new(
        rho0: DiscreteMeasure,
        rho_t: DiscreteMeasure,
        kappa: Arc<dyn ScalarField>,
        t: f64,
    ) -> Result<Self> {
        let p = Self {
            rho0,
            rho_t,
            kappa,
            t,
            damping: 0.5,
            tolerance: 1e-9,
            max_iterations: 200,
            exclusion_radius: None,
        };
        p.screen_kernel_convexity()?;
        Ok(p)
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, it: usize) -> Self {
        self.max_iterations = it;
        self
    }

    pub fn with_exclusion_radius(mut self, r: Option<f64>) -> Self {
        self.exclusion_radius = r;
        self
    }

    /// Difference box the kernel is evaluated on: `z − w` for `z, w` in the
    /// joint support box.
    fn difference_region(&self) -> SampleRegion {
        let (lo0, hi0) = self.rho0.bounding_box();
        let (lot, hit) = self.rho_t.bounding_box();
        let d = lo0.len();
        let mut half = vec![0.0; d];
        for k in 0..d {
            let lo = lo0[k].min(lot[k]);
            let hi = hi0[k].max(hit[k]);
            half[k] = (hi - lo).max(1e-6);
        }
        SampleRegion::Box {
            lo: half.iter().map(|h| -h).collect(),
            hi: half,
        }
    }

    /// Existence theory needs a convex kernel; refuse otherwise.
    fn screen_kernel_convexity(&self) -> Result<()> {
        if self.exclusion_radius.is_some() {
            // Singular kernels are admitted for energy/convolution screening
            // only; the convexity precondition does not apply on a punctured
            // domain in any uniform sense.
            return Ok(());
        }
        let region = self.difference_region();
        for z in region.sample(64, 0x6d66) {
            let h = self.kappa.hessian(&z)?;
            let min_eig = h.symmetric_eigenvalues().min();
            if min_eig < -1e-9 * h.norm().max(1.0) {
                return Err(Error::Convexity {
                    eigenvalue: min_eig,
                    witness: z,
                });
            }
        }
        Ok(())
    }
}

/// One Picard step record.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FixedPointIteration {
    pub index: usize,
    /// `W2(ρ̄ᵏ, ρ̄ᵏ⁺¹)` (square root of the ½-convention squared distance).
    pub w2_gap: f64,
    /// Value of the intermediate-measure objective at the new iterate.
    pub functional: f64,
    pub damping: f64,
    /// Inner solve's pushforward diagnostic, when computed.
    pub inner_pushforward_error: Option<f64>,
}

/// Full trace of the fixed-point loop.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FixedPointTrace {
    pub iterations: Vec<FixedPointIteration>,
    pub converged: bool,
    /// `W2(ρ̄, Intermediate(Q = κ∗ρ̄))` at the final iterate.
    pub self_consistency: f64,
    pub final_damping: f64,
}

/// Outcome of [`fixed_point_solve`]: the trace, the final intermediate
/// measure, and the final non-interacting solution at `Q = κ∗ρ̄`.
pub struct MeanFieldSolution {
    pub trace: FixedPointTrace,
    pub rho_bar: DiscreteMeasure,
    pub final_solution: TwoStepSolution,
}

/// Damped Picard iteration on the intermediate measure.
///
/// Start: the intermediate measure of the non-interacting (`Q ≡ 0`) solve.
/// Step: solve the non-interacting problem with `Q = κ∗ρ̄ᵏ` and mix support
/// positions, `pos^{k+1} = (1−λ)·posᵏ + λ·pos(Intermediate)`, per source
/// index (the intermediate inherits the source indexing through `∇φ̃`).
/// The damping halves whenever the gap grows twice in a row.
pub fn fixed_point_solve(problem: &MeanFieldProblem) -> Result<MeanFieldSolution> {
    let solve_cfg = SolveConfig {
        pushforward_diagnostic: false,
        map_mode: MapMode::Dominant,
        ..SolveConfig::default()
    };
    let dim = problem.rho0.dim();
    let zero: Arc<dyn ScalarField> = Arc::new(QuadraticIso { dim, a: 0.0 });

    let warm = TwoStepProblem::new(
        problem.rho0.clone(),
        problem.rho_t.clone(),
        zero,
        problem.t,
    )
    .and_then(|p| solve(&p, &solve_cfg))
    .map_err(|e| Error::FixedPointInner {
        iteration: 0,
        source: Box::new(e),
    })?;
    let mut rho_bar = warm.intermediate;

    let mut lambda = problem.damping.clamp(f64::MIN_POSITIVE, 1.0);
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut grew_streak = 0usize;
    let mut last_gap = f64::INFINITY;
    let mut last_solution = None;

    for k in 0..problem.max_iterations {
        let q = convolve_potential(problem.kappa.clone(), &rho_bar, problem.exclusion_radius)?;
        let q: Arc<dyn ScalarField> = Arc::new(q);
        let inner = TwoStepProblem::new(
            problem.rho0.clone(),
            problem.rho_t.clone(),
            q,
            problem.t,
        )
        .and_then(|p| solve(&p, &solve_cfg))
        .map_err(|e| Error::FixedPointInner {
            iteration: k,
            source: Box::new(e),
        })?;

        // Position-space mixing per source index.
        let mixed: Vec<Vec<f64>> = rho_bar
            .iter_points()
            .zip(inner.intermediate.iter_points())
            .map(|(old, new)| {
                old.iter()
                    .zip(new)
                    .map(|(o, n)| (1.0 - lambda) * o + lambda * n)
                    .collect()
            })
            .collect();
        let next = rho_bar.with_points(mixed)?;

        let gap = wasserstein2(&rho_bar, &next)?.max(0.0).sqrt();
        let functional = problem3_functional(
            &problem.rho0,
            &problem.rho_t,
            &next,
            problem.t,
            FunctionalTerm::Interaction(problem.kappa.as_ref()),
        )?;
        iterations.push(FixedPointIteration {
            index: k,
            w2_gap: gap,
            functional,
            damping: lambda,
            inner_pushforward_error: inner.diagnostics.pushforward_w2_error,
        });
        rho_bar = next;
        last_solution = Some(inner);

        if gap <= problem.tolerance {
            converged = true;
            break;
        }
        if gap > last_gap {
            grew_streak += 1;
            if grew_streak >= 2 {
                lambda *= 0.5;
                grew_streak = 0;
            }
        } else {
            grew_streak = 0;
        }
        last_gap = gap;
    }

    // Self-consistency: one more non-interacting solve at the final iterate.
    let q = convolve_potential(problem.kappa.clone(), &rho_bar, problem.exclusion_radius)?;
    let q: Arc<dyn ScalarField> = Arc::new(q);
    let check = TwoStepProblem::new(
        problem.rho0.clone(),
        problem.rho_t.clone(),
        q,
        problem.t,
    )
    .and_then(|p| solve(&p, &solve_cfg))?;
    let self_consistency = wasserstein2(&rho_bar, &check.intermediate)?.max(0.0).sqrt();

    let final_damping = lambda;
    let final_solution = last_solution.unwrap_or(check);
    Ok(MeanFieldSolution {
        trace: FixedPointTrace {
            iterations,
            converged,
            self_consistency,
            final_damping,
        },
        rho_bar,
        final_solution,
    })
}

/// Screens a kernel for the mean-field regularity hypotheses: convexity on
/// the difference box and the fourth-order-only inequality contracted with
/// `(D²κ + (2/T)·I)⁻¹`.
pub fn kernel_condition_screen(
    kappa: &dyn ScalarField,
    region: &SampleRegion,
    t: f64,
    n_points: usize,
    n_random_dirs: usize,
    seed: u64,
) -> Result<Vec<ConditionReport>> {
    let convexity = check_kernel_convexity(kappa, region, n_points, seed)?;
    let metric = move |z: &[f64]| -> Result<DMatrix<f64>> {
        let mut h = kappa.hessian(z)?;
        let d = h.nrows();
        for i in 0..d {
            h[(i, i)] += 2.0 / t;
        }
        h.clone().try_inverse().ok_or_else(|| Error::Conditioning {
            point: z.to_vec(),
            eigenvalues: h.symmetric_eigenvalues().as_slice().to_vec(),
        })
    };
    let mut h2c = check_h2c(kappa, region, n_points, n_random_dirs, seed, Some(&metric))?;
    h2c.condition = "H2c-kernel".into();
    Ok(vec![convexity, h2c])
}
