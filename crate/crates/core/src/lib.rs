//! Discrete two-step optimal transport with an intermediate-time kick.
//!
//! A cloud of mass moves freely on `[0, T/2]`, receives a velocity kick
//! `∇Q` at `t = T/2`, and moves freely again on `[T/2, T]`. Given the
//! endpoint distributions, the library recovers the initial velocity
//! potential, the intermediate density, and the full transport map, and
//! numerically screens the structure conditions (uniform convexity, the
//! fourth-order curvature inequalities, domain q-convexity) that govern
//! regularity of the solution.
//!
//! Modules:
//! - [`measures`]: weighted point clouds, pushforward, Wasserstein-2.
//! - [`potentials`]: C4 scalar fields, derivative tensors, Legendre transform.
//! - [`ot`]: exact (network simplex) and entropic discrete transport.
//! - [`twostep`]: the reduced cost, the solve, Monge-Ampere residual.
//! - [`conditions`]: curvature-tensor routes and condition reports.
//! - [`meanfield`]: kernel convolution and the damped fixed-point loop.
//! - [`cli`]: configuration and artifact emission for the `twostep` binary.
//!
//! Convention note: throughout the crate the squared Wasserstein-2 cost
//! carries a 1/2 factor, `W2²(μ,ν) = inf_π ∫ ½|x−y|² dπ`. Most OT software
//! omits the 1/2; see [`measures::wasserstein2`].

pub mod cli;
pub mod conditions;
pub mod error;
pub mod meanfield;
pub mod measures;
pub mod ot;
pub mod potentials;
pub mod twostep;

pub use error::{Error, Result};
