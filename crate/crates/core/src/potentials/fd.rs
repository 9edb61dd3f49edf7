//! Centered finite-difference derivatives of orders 1 through 4.
//!
//! A mixed partial along an index multiset is the tensor product of 1D
//! centered stencils, one per distinct axis with the axis multiplicity as the
//! 1D order. Every 1D stencil is second-order accurate; order-k derivatives
//! lose roughly k digits to cancellation in double precision, which is what
//! the default step table balances against truncation.

use nalgebra::DMatrix;

use super::{DerivMode, ScalarField, Tensor3, Tensor4};
use crate::error::{Error, Result};

/// Per-order centered-difference steps. Overridable via config.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FdSteps {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            h1: 1e-6,
            h2: 1e-5,
            h3: 3e-4,
            h4: 1e-3,
        }
    }
}

impl FdSteps {
    /// Steps tuned for polynomial integrands, where the wide stencils are
    /// exact and only rounding matters, so larger steps strictly help.
    pub fn wide() -> Self {
        Self {
            h1: 1e-5,
            h2: 1e-4,
            h3: 6e-3,
            h4: 2.5e-2,
        }
    }

    pub fn for_order(&self, order: usize) -> f64 {
        match order {
            1 => self.h1,
            2 => self.h2,
            3 => self.h3,
            _ => self.h4,
        }
    }
}

/// 1D centered stencil of the m-th derivative: (offset, coefficient) pairs,
/// to be divided by `h^m`.
fn stencil_1d(m: usize) -> &'static [(i32, f64)] {
    match m {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("stencil order {m} not supported"),
    }
}

/// Mixed partial `∂^|axes| f / Π ∂z_axes` by a tensor-product centered
/// stencil with step `h`. `axes` is an index multiset, order ≤ 4.
pub fn fd_derivative<F>(f: &F, z: &[f64], axes: &[usize], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    assert!(axes.len() <= 4, "derivative order above 4 not supported");
    // Group multiplicities per distinct axis.
    let mut mult: Vec<(usize, usize)> = Vec::new();
    for &a in axes {
        match mult.iter_mut().find(|(ax, _)| *ax == a) {
            Some((_, m)) => *m += 1,
            None => mult.push((a, 1)),
        }
    }
    let total_order: usize = axes.len();
    let scale = h.powi(total_order as i32);

    // Cartesian product over the distinct-axis stencils.
    let stencils: Vec<(usize, &[(i32, f64)])> =
        mult.iter().map(|&(a, m)| (a, stencil_1d(m))).collect();
    let mut acc = 0.0;
    let mut idx = vec![0usize; stencils.len()];
    loop {
        let mut coef = 1.0;
        let mut pt = z.to_vec();
        for (s, &i) in stencils.iter().zip(&idx) {
            let (axis, st) = (s.0, s.1);
            let (off, c) = st[i];
            coef *= c;
            pt[axis] += off as f64 * h;
        }
        let v = f(&pt)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "finite-difference stencil evaluation".into(),
                point: pt,
            });
        }
        acc += coef * v;

        // advance the multi-index
        let mut k = 0;
        loop {
            if k == stencils.len() {
                return Ok(acc / scale);
            }
            idx[k] += 1;
            if idx[k] < stencils[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn fd_gradient<F>(f: &F, z: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    (0..z.len()).map(|i| fd_derivative(f, z, &[i], h)).collect()
}

pub fn fd_hessian<F>(f: &F, z: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let d = z.len();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = fd_derivative(f, z, &[i, j], h)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

pub fn fd_third<F>(f: &F, z: &[f64], h: f64) -> Result<Tensor3>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let d = z.len();
    let mut t = Tensor3::zeros(d);
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                t.set_sym(i, j, k, fd_derivative(f, z, &[i, j, k], h)?);
            }
        }
    }
    Ok(t)
}

pub fn fd_fourth<F>(f: &F, z: &[f64], h: f64) -> Result<Tensor4>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let d = z.len();
    let mut t = Tensor4::zeros(d);
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                for l in k..d {
                    t.set_sym(i, j, k, l, fd_derivative(f, z, &[i, j, k, l], h)?);
                }
            }
        }
    }
    Ok(t)
}

/// Wraps a value function into a [`ScalarField`] whose derivatives come from
/// centered differences. The numerical fallback for user-supplied potentials.
pub struct FdField<F> {
    f: F,
    dim: usize,
    steps: FdSteps,
}

impl<F> FdField<F>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    pub fn new(dim: usize, steps: FdSteps, f: F) -> Self {
        Self { f, dim, steps }
    }
}

impl<F> ScalarField for FdField<F>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        (self.f)(z)
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(&self.f, z, self.steps.h1)
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        fd_hessian(&self.f, z, self.steps.h2)
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        fd_third(&self.f, z, self.steps.h3)
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        fd_fourth(&self.f, z, self.steps.h4)
    }
    fn mode(&self) -> DerivMode {
        DerivMode::FiniteDifference(self.steps)
    }
}
