//! Named potential/kernel catalog reachable from the CLI.
//!
//! Entries bundle a field with the metadata the tests and solvers need: the
//! dimension, a box on which the entry is safe to sample, and the analytic
//! Legendre dual when a closed form is known.

use std::sync::Arc;

use super::dual::radial_power_dual;
use super::fields::{PolyTerm, Polynomial, QuadraticIso, RadialPower};
use super::ScalarField;
use crate::error::{Error, Result};

/// A catalog potential: a field plus test/solve metadata.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub dim: usize,
    pub field: Arc<dyn ScalarField>,
    /// Closed-form Legendre dual, when one exists. For the inverse-power
    /// kernels this is the *formal* dual produced by the stationarity
    /// relation; the primal is not convex and a numeric transform would be
    /// meaningless (see module docs).
    pub analytic_dual: Option<Arc<dyn ScalarField>>,
    /// Box half-width around the origin on which the entry is evaluable and,
    /// where applicable, uniformly convex.
    pub sample_halfwidth: f64,
    /// Whether the entry avoids z = 0 (singular kernels).
    pub punctured: bool,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_dual", &self.analytic_dual.is_some())
            .finish()
    }
}

/// Names accepted by [`lookup`] (without parameter suffixes).
pub fn catalog_names() -> Vec<&'static str> {
    vec![
        "quadratic",
        "ex61-Q",
        "ex61-Qprime",
        "ex61-Qavg",
        "coulomb:<d>",
        "quartic",
        "negquartic",
        "negquartic-aniso",
        "poly:<coeff-file.json>",
        "zero",
    ]
}

/// Three-dimensional cubic/quartic family `±z₁z₃² ± z₁z₂² + z₂²z₃² + A|z|²`.
fn cubic_quartic_family(sign: f64, a: f64) -> Polynomial {
    let term = |e: [u32; 3], c: f64| PolyTerm {
        exponents: e.to_vec(),
        coeff: c,
    };
    Polynomial::new(
        3,
        vec![
            term([0, 2, 2], 1.0),
            term([1, 0, 2], sign),
            term([1, 2, 0], sign),
            term([2, 0, 0], a),
            term([0, 2, 0], a),
            term([0, 0, 2], a),
        ],
    )
    .expect("static polynomial")
}

/// The averaged variant `z₂²z₃² + A|z|²` (third-order terms cancelled).
fn quartic_avg(a: f64) -> Polynomial {
    let term = |e: [u32; 3], c: f64| PolyTerm {
        exponents: e.to_vec(),
        coeff: c,
    };
    Polynomial::new(
        3,
        vec![
            term([0, 2, 2], 1.0),
            term([2, 0, 0], a),
            term([0, 2, 0], a),
            term([0, 0, 2], a),
        ],
    )
    .expect("static polynomial")
}

/// Resolves a potential name of the form `name`, `name:param`, or
/// `poly:/path/to/coeffs.json`.
///
/// Catalog parameters: `ex61-*` accept `:A` (default 50); `coulomb:d`
/// requires the dimension `d ≥ 3` and accepts `:d:c` for the kernel constant;
/// `quadratic`, `quartic`, `negquartic*` and `zero` accept `:dim`
/// (default 3).
pub fn lookup(spec: &str) -> Result<CatalogEntry> {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();

    let parse_f64 = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Invalid(format!("bad numeric parameter {s:?} in {spec:?}")))
    };
    let dim_arg = |default: usize| -> Result<usize> {
        match args.first() {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Invalid(format!("bad dimension {s:?} in {spec:?}"))),
        }
    };

    match name {
        "zero" => {
            let dim = dim_arg(3)?;
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(QuadraticIso { dim, a: 0.0 }),
                analytic_dual: None,
                sample_halfwidth: 10.0,
                punctured: false,
            })
        }
        "quadratic" => {
            let dim = dim_arg(3)?;
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(QuadraticIso { dim, a: 1.0 }),
                // (a|z|²)* = |p|²/(4a)
                analytic_dual: Some(Arc::new(QuadraticIso { dim, a: 0.25 })),
                sample_halfwidth: 10.0,
                punctured: false,
            })
        }
        "quartic" => {
            let dim = dim_arg(3)?;
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(RadialPower {
                    dim,
                    coeff: 1.0,
                    exponent: 4.0,
                }),
                analytic_dual: Some(Arc::new(radial_power_dual(dim, 1.0, 4.0))),
                sample_halfwidth: 2.0,
                punctured: false,
            })
        }
        "ex61-Q" | "ex61-Qprime" | "ex61-Qavg" => {
            let a = match args.first() {
                None => 50.0,
                Some(s) => parse_f64(s)?,
            };
            let field: Arc<dyn ScalarField> = match name {
                "ex61-Q" => Arc::new(cubic_quartic_family(1.0, a)),
                "ex61-Qprime" => Arc::new(cubic_quartic_family(-1.0, a)),
                _ => Arc::new(quartic_avg(a)),
            };
            Ok(CatalogEntry {
                name: spec.into(),
                dim: 3,
                field,
                analytic_dual: None,
                // Uniformly convex while the cubic Hessian terms stay below 2A.
                sample_halfwidth: (a / 10.0).clamp(1.0, 5.0),
                punctured: false,
            })
        }
        "coulomb" => {
            if args.is_empty() {
                return Err(Error::Invalid(
                    "coulomb needs a dimension, e.g. coulomb:3".into(),
                ));
            }
            let dim: usize = args[0]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad dimension {:?}", args[0])))?;
            if dim < 3 {
                return Err(Error::Invalid("coulomb kernel needs d >= 3".into()));
            }
            let c_d = match args.get(1) {
                None => 1.0,
                Some(s) => parse_f64(s)?,
            };
            if c_d <= 0.0 {
                return Err(Error::Invalid(
                    "only the repulsive kernel (c_d > 0) is covered; attractive kernels are out of scope".into(),
                ));
            }
            let s = 2.0 - dim as f64;
            // (c·κ)*(p) = c·κ*(p/c) rescales the formal dual by c^{1−m}.
            let base = radial_power_dual(dim, 1.0, s);
            let m = base.exponent;
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(RadialPower {
                    dim,
                    coeff: c_d,
                    exponent: s,
                }),
                analytic_dual: Some(Arc::new(RadialPower {
                    dim,
                    coeff: c_d.powf(1.0 - m) * base.coeff,
                    exponent: m,
                })),
                sample_halfwidth: 2.0,
                punctured: true,
            })
        }
        "negquartic" => {
            // −|z|⁴ + A|z|², convex on the ball where 12|z|² < 2A.
            let dim = dim_arg(3)?;
            let a = 8.0;
            let field = super::fields::SumField(
                RadialPower {
                    dim,
                    coeff: -1.0,
                    exponent: 4.0,
                },
                QuadraticIso { dim, a },
            );
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(field),
                analytic_dual: None,
                sample_halfwidth: 1.0,
                punctured: false,
            })
        }
        "negquartic-aniso" => {
            // −Σ_k z_k⁴ + A|z|², same convexity ball.
            let dim = dim_arg(3)?;
            let a = 8.0;
            let mut terms: Vec<PolyTerm> = (0..dim)
                .map(|k| {
                    let mut e = vec![0u32; dim];
                    e[k] = 4;
                    PolyTerm {
                        exponents: e,
                        coeff: -1.0,
                    }
                })
                .collect();
            for k in 0..dim {
                let mut e = vec![0u32; dim];
                e[k] = 2;
                terms.push(PolyTerm {
                    exponents: e,
                    coeff: a,
                });
            }
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(Polynomial::new(dim, terms)?),
                analytic_dual: None,
                sample_halfwidth: 1.0,
                punctured: false,
            })
        }
        "poly" => {
            if args.is_empty() {
                return Err(Error::Invalid(
                    "poly needs a coefficient file, e.g. poly:coeffs.json".into(),
                ));
            }
            // Paths may contain ':' (rare); rejoin.
            let path = args.join(":");
            let poly = Polynomial::from_json_file(&path)?;
            let dim = poly.dim();
            Ok(CatalogEntry {
                name: spec.into(),
                dim,
                field: Arc::new(poly),
                analytic_dual: None,
                sample_halfwidth: 1.0,
                punctured: false,
            })
        }
        other => Err(Error::UnknownPotential(other.into())),
    }
}
