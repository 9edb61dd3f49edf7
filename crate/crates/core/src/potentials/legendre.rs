//! Discrete Legendre–Fenchel transform on a sampled box.
//!
//! `F*(p) = sup_z (z·p − F(z))` evaluated over grid samples of the search
//! box. Additively separable inputs get the per-axis one-dimensional
//! conjugation; everything else pays the direct sup. Correctness over speed
//! at desk scale.
//!
//! The transform refuses nonconvex inputs (negative Hessian eigenvalue at a
//! sample) instead of silently returning the convex envelope.

use nalgebra::DMatrix;

use super::fd::{fd_fourth, fd_gradient, fd_hessian, fd_third, FdSteps};
use super::{DerivMode, ScalarField, Tensor3, Tensor4};
use crate::error::{Error, Result};

/// A field backed by values on a regular node grid, evaluated by multilinear
/// interpolation; derivatives come from centered differences on the
/// interpolant, so they are value-accurate only to the grid resolution.
#[derive(Debug, Clone)]
pub struct GridField {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Nodes per axis (≥ 2).
    nodes: Vec<usize>,
    /// Row-major over axes, last axis fastest.
    values: Vec<f64>,
    steps: FdSteps,
}

impl GridField {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nodes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expect: usize = nodes.iter().product();
        if values.len() != expect {
            return Err(Error::Invalid(format!(
                "grid values {} do not match node counts {:?}",
                values.len(),
                nodes
            )));
        }
        if nodes.iter().any(|&n| n < 2) {
            return Err(Error::Invalid("grid needs at least 2 nodes per axis".into()));
        }
        // Derivative stencils must stay inside the box; tie steps to spacing.
        let min_spacing = lo
            .iter()
            .zip(&hi)
            .zip(&nodes)
            .map(|((a, b), &n)| (b - a) / (n - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let steps = FdSteps {
            h1: min_spacing * 0.5,
            h2: min_spacing,
            h3: min_spacing,
            h4: min_spacing,
        };
        Ok(Self {
            lo,
            hi,
            nodes,
            values,
            steps,
        })
    }

    pub fn node_coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis]
            + (self.hi[axis] - self.lo[axis]) * i as f64 / (self.nodes[axis] - 1) as f64
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    fn interp(&self, p: &[f64]) -> Result<f64> {
        let d = self.lo.len();
        let mut base = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for k in 0..d {
            if p[k] < self.lo[k] - 1e-12 || p[k] > self.hi[k] + 1e-12 {
                return Err(Error::Invalid(format!(
                    "point {p:?} outside grid box [{:?}, {:?}]",
                    self.lo, self.hi
                )));
            }
            let t = (p[k] - self.lo[k]) / (self.hi[k] - self.lo[k]) * (self.nodes[k] - 1) as f64;
            let i = (t.floor() as usize).min(self.nodes[k] - 2);
            base.push(i);
            frac.push((t - i as f64).clamp(0.0, 1.0));
        }
        // Sum over the 2^d corners.
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.nodes[k] + base[k] + usize::from(up);
            }
            acc += w * self.values[flat];
        }
        Ok(acc)
    }
}

impl ScalarField for GridField {
    fn dim(&self) -> usize {
        self.lo.len()
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        self.interp(z)
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(&|q: &[f64]| self.interp(q), z, self.steps.h1)
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        fd_hessian(&|q: &[f64]| self.interp(q), z, self.steps.h2)
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        fd_third(&|q: &[f64]| self.interp(q), z, self.steps.h3)
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        fd_fourth(&|q: &[f64]| self.interp(q), z, self.steps.h4)
    }
    fn mode(&self) -> DerivMode {
        DerivMode::FiniteDifference(self.steps)
    }
}

/// Discrete Legendre–Fenchel transform of `f` sampled on `[lo, hi]` with
/// `resolution` nodes per axis.
///
/// The dual grid covers the gradient range of `f` over the box (the slopes
/// represented by the samples). Nonconvexity at any sample aborts with the
/// witness point.
pub fn legendre_transform<F: ScalarField + ?Sized>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
) -> Result<GridField> {
    let d = f.dim();
    if lo.len() != d || hi.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: lo.len(),
        });
    }
    if resolution < 3 {
        return Err(Error::Invalid("resolution must be at least 3".into()));
    }

    let nodes_axis = |k: usize| -> Vec<f64> {
        (0..resolution)
            .map(|i| lo[k] + (hi[k] - lo[k]) * i as f64 / (resolution - 1) as f64)
            .collect()
    };

    // Convexity screen and dual-slope range, on the full grid for d small.
    // Analytic inputs must be strictly convex at every sample; grid-backed
    // (finite-difference) inputs get a noise allowance proportional to the
    // Hessian scale, since their interpolants wiggle at the stencil level.
    let total: usize = resolution.pow(d as u32);
    let mut plo = vec![f64::INFINITY; d];
    let mut phi = vec![f64::NEG_INFINITY; d];
    let flat_to_point = |mut flat: usize| -> Vec<f64> {
        let mut z = vec![0.0; d];
        for k in (0..d).rev() {
            let i = flat % resolution;
            flat /= resolution;
            z[k] = lo[k] + (hi[k] - lo[k]) * i as f64 / (resolution - 1) as f64;
        }
        z
    };
    let mut worst_eig = f64::INFINITY;
    let mut worst_witness = vec![0.0; d];
    let mut hessian_scale = 0.0f64;
    for flat in 0..total {
        let z = flat_to_point(flat);
        let h = f.hessian(&z)?;
        hessian_scale = hessian_scale.max(h.abs().max());
        let min_eig = h.symmetric_eigenvalues().min();
        if min_eig < worst_eig {
            worst_eig = min_eig;
            worst_witness = z.clone();
        }
        let g = f.gradient(&z)?;
        for k in 0..d {
            plo[k] = plo[k].min(g[k]);
            phi[k] = phi[k].max(g[k]);
        }
    }
    // Grid-backed inputs carry interpolation-level curvature noise (the
    // stencil sees piecewise-linear patches), so their screen is only an
    // order-of-magnitude guard; analytic inputs are held to strictness.
    let conv_tol = match f.mode() {
        DerivMode::Analytic => 0.0,
        DerivMode::FiniteDifference(_) => 0.5 * hessian_scale,
    };
    if worst_eig <= -conv_tol {
        return Err(Error::Convexity {
            eigenvalue: worst_eig,
            witness: worst_witness,
        });
    }

    let values = if f.separable() {
        // F(z) = Σ_k g_k(z_k) with g_k(t) = F(t·e_k); the cross-term constant
        // F(0) appears d−1 times too many in Σ g_k, so correct by it.
        let f0 = f.value(&vec![0.0; d])?;
        let mut conj_per_axis: Vec<Vec<f64>> = Vec::with_capacity(d);
        for k in 0..d {
            let zs = nodes_axis(k);
            let gs: Result<Vec<f64>> = zs
                .iter()
                .map(|&t| {
                    let mut z = vec![0.0; d];
                    z[k] = t;
                    f.value(&z)
                })
                .collect();
            let gs = gs?;
            let ps: Vec<f64> = (0..resolution)
                .map(|i| plo[k] + (phi[k] - plo[k]) * i as f64 / (resolution - 1) as f64)
                .collect();
            let conj = ps
                .iter()
                .map(|&p| {
                    zs.iter()
                        .zip(&gs)
                        .map(|(&z, &g)| z * p - g)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            conj_per_axis.push(conj);
        }
        // Assemble Σ_k conj_k(p_k) + (d−1)·F(0) over the dual grid.
        let mut vals = vec![0.0; total];
        for (flat, v) in vals.iter_mut().enumerate() {
            let mut rest = flat;
            let mut acc = (d as f64 - 1.0) * f0;
            for k in (0..d).rev() {
                let i = rest % resolution;
                rest /= resolution;
                acc += conj_per_axis[k][i];
            }
            *v = acc;
        }
        vals
    } else {
        // Direct sup over the sample box.
        let zs: Vec<(Vec<f64>, f64)> = (0..total)
            .map(|flat| {
                let z = flat_to_point(flat);
                let v = f.value(&z)?;
                Ok((z, v))
            })
            .collect::<Result<_>>()?;
        let mut vals = vec![0.0; total];
        for (flat, out) in vals.iter_mut().enumerate() {
            let mut rest = flat;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rest % resolution;
                rest /= resolution;
                p[k] = plo[k] + (phi[k] - plo[k]) * i as f64 / (resolution - 1) as f64;
            }
            let mut best = f64::NEG_INFINITY;
            for (z, fz) in &zs {
                let zp: f64 = z.iter().zip(&p).map(|(a, b)| a * b).sum();
                best = best.max(zp - fz);
            }
            *out = best;
        }
        vals
    };

    GridField::new(plo, phi, vec![resolution; d], values)
}
