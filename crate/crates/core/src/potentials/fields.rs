//! Concrete analytic fields: polynomials, radial powers, the modified
//! potential, and small combinators.

use nalgebra::DMatrix;
use serde::Deserialize;

use super::{DerivMode, ScalarField, Tensor3, Tensor4};
use crate::error::{Error, Result};

/// One polynomial term `coeff · Π_k z_k^{exponents[k]}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// A multivariate polynomial with exact derivatives of every order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<PolyTerm>,
}

#[derive(Deserialize)]
struct PolyFile {
    dim: usize,
    terms: Vec<PolyTerm>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        for t in &terms {
            if t.exponents.len() != dim {
                return Err(Error::Invalid(format!(
                    "term exponents {:?} do not match dimension {}",
                    t.exponents, dim
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Invalid("non-finite coefficient".into()));
            }
        }
        Ok(Self { dim, terms })
    }

    /// Loads `{"dim": d, "terms": [{"exponents": [...], "coeff": c}, ...]}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let f: PolyFile = serde_json::from_str(json)?;
        Self::new(f.dim, f.terms)
    }

    pub fn from_json_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `a·|z|²` as a polynomial.
    pub fn iso_quadratic(dim: usize, a: f64) -> Self {
        let terms = (0..dim)
            .map(|k| {
                let mut e = vec![0u32; dim];
                e[k] = 2;
                PolyTerm {
                    exponents: e,
                    coeff: a,
                }
            })
            .collect();
        Self { dim, terms }
    }

    /// Exact mixed partial along the index multiset `axes`.
    pub fn partial(&self, axes: &[usize], z: &[f64]) -> f64 {
        let mut acc = 0.0;
        'terms: for t in &self.terms {
            let mut exps: Vec<u32> = t.exponents.clone();
            let mut coeff = t.coeff;
            for &a in axes {
                if exps[a] == 0 {
                    continue 'terms;
                }
                coeff *= exps[a] as f64;
                exps[a] -= 1;
            }
            let mut prod = coeff;
            for (k, &e) in exps.iter().enumerate() {
                prod *= z[k].powi(e as i32);
            }
            acc += prod;
        }
        acc
    }
}

impl ScalarField for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.partial(&[], z))
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok((0..self.dim).map(|i| self.partial(&[i], z)).collect())
    }

    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.partial(&[i, j], z);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        let d = self.dim;
        let mut t = Tensor3::zeros(d);
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    t.set_sym(i, j, k, self.partial(&[i, j, k], z));
                }
            }
        }
        Ok(t)
    }

    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        let d = self.dim;
        let mut t = Tensor4::zeros(d);
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        t.set_sym(i, j, k, l, self.partial(&[i, j, k, l], z));
                    }
                }
            }
        }
        Ok(t)
    }

    fn separable(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.exponents.iter().filter(|&&e| e > 0).count() <= 1)
    }
}

/// Isotropic quadratic `a·|z|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticIso {
    pub dim: usize,
    pub a: f64,
}

impl ScalarField for QuadraticIso {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.a * z.iter().map(|x| x * x).sum::<f64>())
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.iter().map(|x| 2.0 * self.a * x).collect())
    }
    fn hessian(&self, _z: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim) * (2.0 * self.a))
    }
    fn third(&self, _z: &[f64]) -> Result<Tensor3> {
        Ok(Tensor3::zeros(self.dim))
    }
    fn fourth(&self, _z: &[f64]) -> Result<Tensor4> {
        Ok(Tensor4::zeros(self.dim))
    }
    fn separable(&self) -> bool {
        true
    }
}

/// Radial power `c·|z|^s` with exact derivatives away from the origin.
/// Singular (or insufficiently smooth) at `z = 0` whenever `s < 4`; evaluation
/// there returns an error rather than a garbage stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPower {
    pub dim: usize,
    pub coeff: f64,
    pub exponent: f64,
}

impl RadialPower {
    fn u(&self, z: &[f64]) -> f64 {
        z.iter().map(|x| x * x).sum()
    }

    fn guard(&self, z: &[f64]) -> Result<f64> {
        let u = self.u(z);
        // Positive integer-even exponents are polynomials; others blow up at 0.
        let polynomial = self.exponent >= 0.0
            && (self.exponent / 2.0 - (self.exponent / 2.0).round()).abs() < 1e-12;
        if !polynomial && u < 1e-28 {
            return Err(Error::NonFinite {
                what: format!("|z|^{} field", self.exponent),
                point: z.to_vec(),
            });
        }
        Ok(u)
    }
}

impl ScalarField for RadialPower {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        let u = self.guard(z)?;
        Ok(self.coeff * u.powf(self.exponent / 2.0))
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let u = self.guard(z)?;
        let a = self.exponent / 2.0;
        let c = 2.0 * self.coeff * a * u.powf(a - 1.0);
        Ok(z.iter().map(|x| c * x).collect())
    }

    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let u = self.guard(z)?;
        let a = self.exponent / 2.0;
        let c1 = 2.0 * self.coeff * a * u.powf(a - 1.0);
        let c2 = 4.0 * self.coeff * a * (a - 1.0) * u.powf(a - 2.0);
        let d = self.dim;
        Ok(DMatrix::from_fn(d, d, |i, j| {
            let mut v = c2 * z[i] * z[j];
            if i == j {
                v += c1;
            }
            v
        }))
    }

    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        let u = self.guard(z)?;
        let a = self.exponent / 2.0;
        let c2 = 4.0 * self.coeff * a * (a - 1.0) * u.powf(a - 2.0);
        let c3 = 8.0 * self.coeff * a * (a - 1.0) * (a - 2.0) * u.powf(a - 3.0);
        let d = self.dim;
        let mut t = Tensor3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut v = c3 * z[i] * z[j] * z[k];
                    if i == j {
                        v += c2 * z[k];
                    }
                    if i == k {
                        v += c2 * z[j];
                    }
                    if j == k {
                        v += c2 * z[i];
                    }
                    t.set(i, j, k, v);
                }
            }
        }
        Ok(t)
    }

    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        let u = self.guard(z)?;
        let a = self.exponent / 2.0;
        let c2 = 4.0 * self.coeff * a * (a - 1.0) * u.powf(a - 2.0);
        let c3 = 8.0 * self.coeff * a * (a - 1.0) * (a - 2.0) * u.powf(a - 3.0);
        let c4 = 16.0 * self.coeff * a * (a - 1.0) * (a - 2.0) * (a - 3.0) * u.powf(a - 4.0);
        let d = self.dim;
        let mut t = Tensor4::zeros(d);
        let kron = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let deltas = kron(i, j) * kron(k, l)
                            + kron(i, k) * kron(j, l)
                            + kron(j, k) * kron(i, l);
                        let zz = kron(i, j) * z[k] * z[l]
                            + kron(i, k) * z[j] * z[l]
                            + kron(j, k) * z[i] * z[l]
                            + kron(i, l) * z[j] * z[k]
                            + kron(j, l) * z[i] * z[k]
                            + kron(k, l) * z[i] * z[j];
                        let v = c2 * deltas + c3 * zz + c4 * z[i] * z[j] * z[k] * z[l];
                        t.set(i, j, k, l, v);
                    }
                }
            }
        }
        Ok(t)
    }
}

/// The modified potential `Q̃(z) = (T/2)·Q(z) + |z|²`.
#[derive(Debug, Clone)]
pub struct ModifiedPotential<F> {
    q: F,
    t: f64,
}

impl<F: ScalarField> ModifiedPotential<F> {
    pub fn new(q: F, t: f64) -> Self {
        assert!(t > 0.0, "horizon must be positive");
        Self { q, t }
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn kick_potential(&self) -> &F {
        &self.q
    }
}

impl<F: ScalarField> ScalarField for ModifiedPotential<F> {
    fn dim(&self) -> usize {
        self.q.dim()
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        let sq: f64 = z.iter().map(|x| x * x).sum();
        Ok(0.5 * self.t * self.q.value(z)? + sq)
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let g = self.q.gradient(z)?;
        Ok(g.iter()
            .zip(z)
            .map(|(gi, zi)| 0.5 * self.t * gi + 2.0 * zi)
            .collect())
    }

    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let mut h = self.q.hessian(z)? * (0.5 * self.t);
        for i in 0..self.dim() {
            h[(i, i)] += 2.0;
        }
        Ok(h)
    }

    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        Ok(self.q.third(z)?.scale(0.5 * self.t))
    }

    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        Ok(self.q.fourth(z)?.scale(0.5 * self.t))
    }

    fn mode(&self) -> DerivMode {
        self.q.mode()
    }

    fn separable(&self) -> bool {
        self.q.separable()
    }
}

/// Pointwise sum of two fields.
#[derive(Debug, Clone)]
pub struct SumField<A, B>(pub A, pub B);

impl<A: ScalarField, B: ScalarField> ScalarField for SumField<A, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.0.value(z)? + self.1.value(z)?)
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let a = self.0.gradient(z)?;
        let b = self.1.gradient(z)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.0.hessian(z)? + self.1.hessian(z)?)
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        Ok(self.0.third(z)?.add(&self.1.third(z)?))
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        Ok(self.0.fourth(z)?.add(&self.1.fourth(z)?))
    }
    fn separable(&self) -> bool {
        self.0.separable() && self.1.separable()
    }
}

/// `s · F`.
#[derive(Debug, Clone)]
pub struct ScaledField<F> {
    pub field: F,
    pub scale: f64,
}

impl<F: ScalarField> ScalarField for ScaledField<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.scale * self.field.value(z)?)
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .field
            .gradient(z)?
            .into_iter()
            .map(|x| self.scale * x)
            .collect())
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.field.hessian(z)? * self.scale)
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        Ok(self.field.third(z)?.scale(self.scale))
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        Ok(self.field.fourth(z)?.scale(self.scale))
    }
    fn mode(&self) -> DerivMode {
        self.field.mode()
    }
    fn separable(&self) -> bool {
        self.field.separable()
    }
}

/// `F(z − shift)`.
#[derive(Debug, Clone)]
pub struct ShiftedField<F> {
    pub field: F,
    pub shift: Vec<f64>,
}

impl<F: ScalarField> ScalarField for ShiftedField<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn value(&self, z: &[f64]) -> Result<f64> {
        self.field.value(&self.arg(z))
    }
    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.field.gradient(&self.arg(z))
    }
    fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        self.field.hessian(&self.arg(z))
    }
    fn third(&self, z: &[f64]) -> Result<Tensor3> {
        self.field.third(&self.arg(z))
    }
    fn fourth(&self, z: &[f64]) -> Result<Tensor4> {
        self.field.fourth(&self.arg(z))
    }
    fn mode(&self) -> DerivMode {
        self.field.mode()
    }
}

impl<F> ShiftedField<F> {
    fn arg(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.shift).map(|(a, b)| a - b).collect()
    }
}
