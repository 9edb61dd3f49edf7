//! C⁴ scalar fields with derivative access through order 4, the
//! Legendre–Fenchel transform, and the catalog of named potentials.

mod catalog;
mod dual;
mod fd;
mod fields;
mod legendre;
mod tensor;

pub use catalog::{catalog_names, lookup, CatalogEntry};
pub use dual::{
    dual_fourth_tensor, dual_third_tensor, invert_gradient, radial_power_dual, LegendreDual,
};
pub use fd::{fd_derivative, fd_fourth, fd_gradient, fd_hessian, fd_third, FdField, FdSteps};
pub use fields::{
    ModifiedPotential, PolyTerm, Polynomial, QuadraticIso, RadialPower, ScaledField, ShiftedField,
    SumField,
};
pub use legendre::{legendre_transform, GridField};
pub use tensor::{Tensor3, Tensor4};

use nalgebra::DMatrix;

use crate::error::Result;

/// How a field obtains its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivMode {
    Analytic,
    /// Centered finite differences with the given step table.
    FiniteDifference(FdSteps),
}

/// A scalar field on `R^d` with derivatives through order 4.
///
/// Implementations must return a symmetric Hessian and derivative tensors
/// symmetric under index permutation; evaluation is pure and reentrant, so
/// fields can be shared across threads read-only.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &[f64]) -> Result<f64>;

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// `d x d` symmetric Hessian.
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>>;

    /// Third-derivative tensor `∂³F/∂z_i∂z_j∂z_k`.
    fn third(&self, z: &[f64]) -> Result<Tensor3>;

    /// Fourth-derivative tensor `∂⁴F/∂z_i∂z_j∂z_k∂z_l`.
    fn fourth(&self, z: &[f64]) -> Result<Tensor4>;

    fn mode(&self) -> DerivMode {
        DerivMode::Analytic
    }

    /// True when the field is additively separable across axes,
    /// `F(z) = Σ_k f_k(z_k)`; enables the per-axis Legendre pass.
    fn separable(&self) -> bool {
        false
    }
}

impl<T: ScalarField + ?Sized> ScalarField for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        (**self).value(z)
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(z)
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        (**self).hessian(z)
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        (**self).third(z)
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        (**self).fourth(z)
    }
    fn mode(&self) -> DerivMode {
        (**self).mode()
    }
    fn separable(&self) -> bool {
        (**self).separable()
    }
}

/// Builds the modified potential `Q̃(z) = (T/2)·Q(z) + |z|²` whose strict
/// convexity and curvature govern the two-step problem. Derivatives are
/// assembled analytically from `Q`'s derivatives plus the quadratic's.
pub fn modified_potential<F>(q: F, t: f64) -> ModifiedPotential<F>
where
    F: ScalarField,
{
    ModifiedPotential::new(q, t)
}
