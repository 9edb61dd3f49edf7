//! Exact and entropic discrete optimal transport.
//!
//! The exact route is a network simplex specialized to transportation
//! polytopes, with Bland's pivoting rule so plans are deterministic and
//! reproducible. The entropic route is log-domain Sinkhorn with a geometric
//! epsilon schedule. Both sides accept a maximize/minimize orientation
//! switch; maximizing a cost `C` is solved as minimizing `−C` and yields the
//! identical plan.

mod entropic;
#[cfg(test)]
mod tests;
mod exact;

pub use entropic::{solve_entropic, EntropicConfig};
pub use exact::solve_exact;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{check_balance, DiscreteMeasure};

/// Hard cap on `n·m` for the exact solver (desk scale).
pub const EXACT_SIZE_CAP: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Minimize,
    Maximize,
}

/// Dense `n x m` cost matrix with an optimization orientation.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub n: usize,
    pub m: usize,
    /// Row-major values; all finite.
    pub values: Vec<f64>,
    pub orientation: Orientation,
}

impl CostMatrix {
    pub fn new(n: usize, m: usize, values: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::Invalid(format!(
                "cost matrix needs {n}x{m} = {} entries, got {}",
                n * m,
                values.len()
            )));
        }
        if values.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite cost entry".into()));
        }
        Ok(Self {
            n,
            m,
            values,
            orientation,
        })
    }

    /// Assembles `c(x_i, y_j)` data-parallel over rows (order-preserving, so
    /// results are identical for any thread count).
    pub fn from_fn<F>(
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        orientation: Orientation,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync,
    {
        let n = mu.len();
        let m = nu.len();
        let rows: Result<Vec<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = mu.point(i);
                (0..m).map(|j| f(x, nu.point(j))).collect::<Result<Vec<_>>>()
            })
            .collect();
        let values: Vec<f64> = rows?.into_iter().flatten().collect();
        Self::new(n, m, values, orientation)
    }

    /// The `½|x−y|²` ground cost (minimize orientation).
    pub fn half_sq_euclidean(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::Dimension {
                expected: mu.dim(),
                got: nu.dim(),
            });
        }
        Self::from_fn(mu, nu, Orientation::Minimize, |x, y| {
            Ok(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    /// (min, max) over entries.
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), &c| (lo.min(c), hi.max(c)),
        )
    }

    /// Same matrix with the opposite orientation and negated entries.
    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(|c| -c).collect(),
            orientation: match self.orientation {
                Orientation::Minimize => Orientation::Maximize,
                Orientation::Maximize => Orientation::Minimize,
            },
        }
    }
}

/// Solver bookkeeping attached to a plan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolverMeta {
    pub solver: String,
    pub iterations: usize,
    /// Worst marginal defect of the returned coupling (L1, mass units).
    pub marginal_residual: f64,
    /// Per-iteration marginal residuals (entropic only).
    pub residual_trace: Vec<f64>,
}

/// A coupling between two discrete measures with duals and diagnostics.
/// Stored row-compressed: exact plans carry at most `n + m − 1` entries, so
/// the structure scales to supports a dense matrix could not.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub n: usize,
    pub m: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Objective value in the *original* orientation's cost.
    pub objective: f64,
    /// Dual potentials: on the support of an exact plan,
    /// `u_i + v_j = cost_ij` regardless of orientation.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub meta: SolverMeta,
}

impl TransportPlan {
    /// Builds a plan from `(i, j, mass)` entries (unordered, no duplicates).
    pub fn from_entries(
        n: usize,
        m: usize,
        mut entries: Vec<(usize, usize, f64)>,
        objective: f64,
        u: Vec<f64>,
        v: Vec<f64>,
        meta: SolverMeta,
    ) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = entries.iter().map(|e| e.1).collect();
        let vals = entries.iter().map(|e| e.2).collect();
        Self {
            n,
            m,
            row_ptr,
            cols,
            vals,
            objective,
            u,
            v,
            meta,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries `(j, mass)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, w)| w).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                out[j] += w;
            }
        }
        out
    }

    /// Nonzero entries as `(i, j, mass)` in row-major order.
    pub fn support(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Transposed plan (swaps the roles of source and target).
    pub fn transposed(&self) -> TransportPlan {
        let entries = self
            .support()
            .into_iter()
            .map(|(i, j, w)| (j, i, w))
            .collect();
        TransportPlan::from_entries(
            self.m,
            self.n,
            entries,
            self.objective,
            self.v.clone(),
            self.u.clone(),
            self.meta.clone(),
        )
    }

    /// Worst absolute marginal defect against the given masses.
    pub fn marginal_residual(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (s, w) in self.row_sums().iter().zip(a) {
            worst = worst.max((s - w).abs());
        }
        for (s, w) in self.col_sums().iter().zip(b) {
            worst = worst.max((s - w).abs());
        }
        worst
    }
}

/// How [`plan_to_map`] turns rows into point images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMode {
    /// Each row must place a `1 − 1e-6` mass fraction on one target.
    Dominant,
    /// Row-weighted average of targets.
    Barycentric,
}

/// Fraction threshold for dominant-mode extraction.
pub const DOMINANT_FRACTION: f64 = 1.0 - 1e-6;

/// Extracts a pointwise map from a plan: `x_i ↦ y_{j*(i)}` in dominant mode,
/// the row barycenter in barycentric mode. Returns the image of every source
/// index.
pub fn plan_to_map(
    plan: &TransportPlan,
    nu: &DiscreteMeasure,
    mode: MapMode,
) -> Result<Vec<Vec<f64>>> {
    if nu.len() != plan.m {
        return Err(Error::Invalid(format!(
            "plan has {} columns but target has {} points",
            plan.m,
            nu.len()
        )));
    }
    let d = nu.dim();
    let mut images = Vec::with_capacity(plan.n);
    let mut worst: Option<(usize, f64)> = None;
    for i in 0..plan.n {
        let mass: f64 = plan.row(i).map(|(_, w)| w).sum();
        if mass <= 0.0 {
            // Zero-weight source point reinserted with an empty row; it
            // carries no mass, so any image works — use the target barycenter.
            images.push(nu.barycenter());
            continue;
        }
        match mode {
            MapMode::Dominant => {
                let (jmax, wmax) = plan
                    .row(i)
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                    .unwrap();
                let fraction = wmax / mass;
                if fraction < DOMINANT_FRACTION {
                    match worst {
                        Some((_, f)) if f <= fraction => {}
                        _ => worst = Some((i, fraction)),
                    }
                }
                images.push(nu.point(jmax).to_vec());
            }
            MapMode::Barycentric => {
                let mut img = vec![0.0; d];
                for (j, w) in plan.row(i) {
                    if w > 0.0 {
                        let y = nu.point(j);
                        for k in 0..d {
                            img[k] += w * y[k];
                        }
                    }
                }
                for x in &mut img {
                    *x /= mass;
                }
                images.push(img);
            }
        }
    }
    if let Some((row, fraction)) = worst {
        return Err(Error::MultivaluedMap { row, fraction });
    }
    Ok(images)
}

/// Shared preprocessing: checks balance, drops zero-weight points, and hands
/// the reduced problem to a solver; reinserted rows/columns are empty.
pub(crate) struct Reduced {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub(crate) fn reduce_problem(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<Reduced> {
    if cost.n != mu.len() || cost.m != nu.len() {
        return Err(Error::Invalid(format!(
            "cost matrix is {}x{} but measures have {} and {} points",
            cost.n,
            cost.m,
            mu.len(),
            nu.len()
        )));
    }
    let mass = check_balance(mu, nu, 1e-9)?;
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu.weights()[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Invalid("all weights are zero".into()));
    }
    let a: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    // Force exact feasibility: rescale the column masses to sum bit-exactly
    // is impossible in floats, but matching the totals to ~1 ulp keeps the
    // simplex consistent; the residual imbalance is absorbed below.
    let bsum: f64 = cols.iter().map(|&j| nu.weights()[j]).sum();
    let b: Vec<f64> = cols
        .iter()
        .map(|&j| nu.weights()[j] * (mass / bsum))
        .collect();
    Ok(Reduced { rows, cols, a, b })
}
