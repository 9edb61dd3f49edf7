//! Discrete probability measures: weighted point clouds, pushforward,
//! Wasserstein-2 distance and density binning.
//!
//! Measures are point clouds, not grid fields; grids appear only for output
//! and residual binning. All types are immutable after construction and all
//! operations are pure functions.
//!
//! The squared Wasserstein-2 distance used everywhere in this crate is
//! `W2²(μ,ν) = inf_π ∫ ½|x−y|² dπ(x,y)` — note the **1/2 factor**, which most
//! OT libraries omit. Callers comparing against other software should double
//! the values returned by [`wasserstein2`].

mod domain;
mod generate;
mod io;

pub use domain::{Domain, DomainKind};
pub use generate::Generator;
pub use io::{read_measure_csv, write_measure_csv};

use crate::error::{Error, Result};
use crate::ot;

/// A weighted point cloud in `R^d`.
///
/// Invariants enforced at construction: weights are nonnegative and finite,
/// points and weights have equal length, every point has dimension `dim`.
/// The total mass is whatever the weights sum to; balance between two
/// measures is checked (or restored) at the operations that require it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    /// Row-major `n x dim` coordinates.
    points: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl DiscreteMeasure {
    /// Builds a measure from row-major flat coordinates.
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::Invalid(format!(
                "{} coordinates do not form {} points of dimension {}",
                points.len(),
                weights.len(),
                dim
            )));
        }
        if weights.is_empty() {
            return Err(Error::Invalid("measure needs at least one point".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Invalid(format!("weight {i} is {w}, must be >= 0")));
            }
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            weights,
            dim,
        })
    }

    /// Builds a measure from per-point coordinate vectors.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Invalid("inconsistent point dimensions".into()));
        }
        let flat = points.into_iter().flatten().collect();
        Self::from_flat(dim, flat, weights)
    }

    /// Unit-mass Dirac at `point`.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        Self::from_flat(dim, point, vec![1.0])
    }

    /// Uniform weights `mass/n` on the given points.
    pub fn uniform(points: Vec<Vec<f64>>, mass: f64) -> Result<Self> {
        let n = points.len();
        let w = vec![mass / n as f64; n];
        Self::new(points, w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Total mass `M = Σ w_i`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass-weighted mean point.
    pub fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        let m = self.total_mass();
        for (p, &w) in self.iter_points().zip(&self.weights) {
            for (bi, &pi) in b.iter_mut().zip(p) {
                *bi += w * pi;
            }
        }
        for bi in &mut b {
            *bi /= m;
        }
        b
    }

    /// Returns a copy rescaled to the given total mass.
    pub fn with_total_mass(&self, mass: f64) -> Self {
        let current = self.total_mass();
        let scale = mass / current;
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= scale;
        }
        out
    }

    /// Axis-aligned bounding box of the support, as `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter_points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Pushforward `f_# μ`: moves every support point through `f`, keeping
    /// weights. Total mass is preserved exactly.
    pub fn pushforward<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut points = Vec::with_capacity(self.points.len());
        for (i, p) in self.iter_points().enumerate() {
            let q = map(p).map_err(|e| Error::MapEvaluation {
                index: i,
                reason: e.to_string(),
            })?;
            if q.len() != self.dim {
                return Err(Error::MapEvaluation {
                    index: i,
                    reason: format!("map returned dimension {}, expected {}", q.len(), self.dim),
                });
            }
            if q.iter().any(|x| !x.is_finite()) {
                return Err(Error::MapEvaluation {
                    index: i,
                    reason: format!("non-finite image {q:?}"),
                });
            }
            points.extend_from_slice(&q);
        }
        Ok(Self {
            points,
            weights: self.weights.clone(),
            dim: self.dim,
        })
    }

    /// Replaces the support points, keeping weights (positions must be
    /// index-aligned). Used by the mean-field position mixing.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != self.len() {
            return Err(Error::Invalid(format!(
                "expected {} points, got {}",
                self.len(),
                points.len()
            )));
        }
        Self::new(points, self.weights.clone())
    }
}

/// Checks mass balance of two measures to `tol` relative. Returns the common
/// mass on success.
pub fn check_balance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<f64> {
    let (a, b) = (mu.total_mass(), nu.total_mass());
    let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if rel > tol {
        return Err(Error::Balance {
            source_mass: a,
            target_mass: b,
            rel_gap: rel,
        });
    }
    Ok(a)
}

/// Squared Wasserstein-2 distance `inf_π ∫ ½|x−y|² dπ` (note the 1/2 factor),
/// computed by the exact network-simplex solver.
///
/// Symmetric in its arguments bit-for-bit: internally the pair is put into a
/// canonical order before solving.
pub fn wasserstein2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_balance(mu, nu, 1e-9)?;
    if mu.dim() != nu.dim() {
        return Err(Error::Dimension {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    // Canonical orientation so that wasserstein2(a, b) == wasserstein2(b, a)
    // exactly, not just up to solver round-off.
    let swap = match mu.len().cmp(&nu.len()) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => lex_key(mu) > lex_key(nu),
    };
    let (a, b) = if swap { (nu, mu) } else { (mu, nu) };
    let cost = ot::CostMatrix::half_sq_euclidean(a, b)?;
    let plan = ot::solve_exact(a, b, &cost)?;
    Ok(plan.objective)
}

fn lex_key(m: &DiscreteMeasure) -> impl PartialOrd + '_ {
    (m.points_flat(), m.weights())
}

/// A regular rectangular binning grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Cells per axis.
    pub shape: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != shape.len() {
            return Err(Error::Invalid("grid lo/hi/shape lengths differ".into()));
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(Error::Invalid("grid needs at least one cell per axis".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Invalid("grid lo must be strictly below hi".into()));
        }
        Ok(Self { lo, hi, shape })
    }

    /// Uniform grid over the bounding box of `mu`, padded by `pad` relative.
    /// Degenerate boxes (single support point) get an absolute floor so the
    /// grid stays valid.
    pub fn covering(mu: &DiscreteMeasure, cells_per_axis: usize, pad: f64) -> Result<Self> {
        let (mut lo, mut hi) = mu.bounding_box();
        for k in 0..lo.len() {
            let floor = 1e-6 * (1.0 + lo[k].abs().max(hi[k].abs()));
            let span = (hi[k] - lo[k]).max(floor);
            lo[k] -= pad * span + 0.5 * (span - (hi[k] - lo[k]));
            hi[k] += pad * span + 0.5 * (span - (hi[k] - lo[k]));
        }
        let shape = vec![cells_per_axis; lo.len()];
        Self::new(lo, hi, shape)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n_cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|k| (self.hi[k] - self.lo[k]) / self.shape[k] as f64)
            .product()
    }

    /// Flat index of the cell containing `p`, or `None` if outside. Points on
    /// the upper face are assigned to the last cell.
    pub fn cell_index(&self, p: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in 0..self.dim() {
            if p[k] < self.lo[k] || p[k] > self.hi[k] {
                return None;
            }
            let w = (self.hi[k] - self.lo[k]) / self.shape[k] as f64;
            let i = (((p[k] - self.lo[k]) / w) as usize).min(self.shape[k] - 1);
            idx = idx * self.shape[k] + i;
        }
        Some(idx)
    }

    /// Multi-index of a flat cell index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0; d];
        for k in (0..d).rev() {
            out[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        out
    }

    /// Center of a cell by flat index.
    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let mi = self.unravel(flat);
        (0..self.dim())
            .map(|k| {
                let w = (self.hi[k] - self.lo[k]) / self.shape[k] as f64;
                self.lo[k] + (mi[k] as f64 + 0.5) * w
            })
            .collect()
    }

    /// True if the cell touches no face of the grid.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.unravel(flat)
            .iter()
            .zip(&self.shape)
            .all(|(&i, &s)| i > 0 && i + 1 < s)
    }
}

/// Piecewise-constant density of `mu` on `grid`: cell value = mass in cell /
/// cell volume, so that `Σ value·cellvol = M`. Errors if any support point
/// escapes the grid, reporting the escapee count.
pub fn binned_density(mu: &DiscreteMeasure, grid: &Grid) -> Result<Vec<f64>> {
    if grid.dim() != mu.dim() {
        return Err(Error::Dimension {
            expected: mu.dim(),
            got: grid.dim(),
        });
    }
    let mut mass = vec![0.0; grid.n_cells()];
    let mut outside = 0usize;
    for (p, &w) in mu.iter_points().zip(mu.weights()) {
        match grid.cell_index(p) {
            Some(c) => mass[c] += w,
            None => outside += 1,
        }
    }
    if outside > 0 {
        return Err(Error::OutsideGrid { count: outside });
    }
    let vol = grid.cell_volume();
    for m in &mut mass {
        *m /= vol;
    }
    Ok(mass)
}

#[cfg(test)]
mod tests;
