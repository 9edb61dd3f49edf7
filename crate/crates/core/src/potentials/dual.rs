//! Legendre duals of smooth strictly convex fields.
//!
//! For a strictly convex C⁴ field `F`, the dual `F*(p) = sup_z (z·p − F(z))`
//! is evaluated by inverting the gradient map with Newton's method; the
//! dual's derivatives then come from the inverse-function identities
//!
//! ```text
//!   D²F*(p)            = A := (D²F(z))⁻¹,                z = ∇F⁻¹(p)
//!   D³F*(p)(u,v,w)     = −D³F(Au, Av, Aw)
//!   D⁴F*(p)(u,v,w,x)   = −D⁴F(Au,Av,Aw,Ax)
//!                        + ⟨D³F(Au,Ax,·), D³F(Av,Aw,·)⟩_A   (+ 2 pairings)
//! ```
//!
//! where `⟨a,b⟩_A = aᵀAb`. These are exact up to the Newton tolerance, so a
//! dual built this way still counts as analytic mode.

use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use super::{DerivMode, ScalarField, Tensor3, Tensor4};
use crate::error::{Error, Result};

/// Solves `∇F(z) = p` by damped Newton from `z0`. Requires `D²F ≻ 0` along
/// the path; returns the convexity error with witness otherwise.
pub fn invert_gradient<F: ScalarField + ?Sized>(
    field: &F,
    p: &[f64],
    z0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let d = field.dim();
    let pv = DVector::from_column_slice(p);
    let mut z = DVector::from_column_slice(z0);
    let mut res = DVector::from_column_slice(&field.gradient(z.as_slice())?) - &pv;
    let scale = 1.0_f64.max(pv.norm());
    for _ in 0..max_iter {
        if res.norm() <= tol * scale {
            return Ok(z.as_slice().to_vec());
        }
        let h = field.hessian(z.as_slice())?;
        let chol = h.clone().cholesky().ok_or_else(|| {
            let eig = h.symmetric_eigenvalues();
            Error::Convexity {
                eigenvalue: eig.min(),
                witness: z.as_slice().to_vec(),
            }
        })?;
        let step = chol.solve(&res);
        // Backtrack if the residual does not decrease.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &z - t * &step;
            let cand_res = DVector::from_column_slice(&field.gradient(cand.as_slice())?) - &pv;
            if cand_res.norm() < res.norm() {
                z = cand;
                res = cand_res;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res.norm() <= tol * scale * 10.0 {
        return Ok(z.as_slice().to_vec());
    }
    Err(Error::Invalid(format!(
        "gradient inversion stalled: residual {:.3e} at p = {:?} (dim {d})",
        res.norm(),
        p
    )))
}

/// `D³F*` from the primal tensors: `B³(u,v,w) = −D³F(Au, Av, Aw)`.
pub fn dual_third_tensor(a: &DMatrix<f64>, t3: &Tensor3) -> Tensor3 {
    let d = t3.d;
    let mut out = Tensor3::zeros(d);
    // Transform each slot by A (congruence on a 3-tensor), then negate.
    // One slot at a time, rotating the layout as in Tensor4::congruence.
    let mut cur = t3.v.clone();
    for _ in 0..3 {
        let mut next = vec![0.0; cur.len()];
        for base in 0..d * d {
            let row = &cur[base * d..(base + 1) * d];
            for new_k in 0..d {
                let mut acc = 0.0;
                for old_k in 0..d {
                    acc += row[old_k] * a[(old_k, new_k)];
                }
                next[new_k * d * d + base] = acc;
            }
        }
        cur = next;
    }
    for (o, c) in out.v.iter_mut().zip(&cur) {
        *o = -c;
    }
    out
}

/// `D⁴F*` from the primal tensors at `z` with `A = (D²F)⁻¹`.
pub fn dual_fourth_tensor(a: &DMatrix<f64>, t3: &Tensor3, t4: &Tensor4) -> Tensor4 {
    let d = t3.d;
    // M3[(i,j), c] = D³F(Ae_i, Ae_j, e_c)
    let cols: Vec<DVector<f64>> = (0..d).map(|i| a.column(i).into_owned()).collect();
    let mut m3 = vec![0.0; d * d * d];
    for i in 0..d {
        for j in i..d {
            let u = t3.contract2(cols[i].as_slice(), cols[j].as_slice());
            for (c, &val) in u.iter().enumerate() {
                m3[(i * d + j) * d + c] = val;
                m3[(j * d + i) * d + c] = val;
            }
        }
    }
    // G[(i,j),(r,s)] = ⟨M3[(i,j),·], M3[(r,s),·]⟩_A
    let pairs = d * d;
    let mut g = vec![0.0; pairs * pairs];
    for pq in 0..pairs {
        let u = &m3[pq * d..(pq + 1) * d];
        let au: Vec<f64> = (0..d)
            .map(|c| (0..d).map(|e| a[(c, e)] * u[e]).sum())
            .collect();
        for rs in 0..pairs {
            let v = &m3[rs * d..(rs + 1) * d];
            g[pq * pairs + rs] = au.iter().zip(v).map(|(x, y)| x * y).sum();
        }
    }
    let t4a = t4.congruence(a);
    let mut out = Tensor4::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for r in 0..d {
                for s in 0..d {
                    let pair = |a_: usize, b_: usize| a_ * d + b_;
                    let v = -t4a.get(i, j, r, s)
                        + g[pair(i, s) * pairs + pair(j, r)]
                        + g[pair(j, s) * pairs + pair(i, r)]
                        + g[pair(r, s) * pairs + pair(i, j)];
                    out.set(i, j, r, s, v);
                }
            }
        }
    }
    out
}

/// Legendre dual of a strictly convex field, evaluated by gradient inversion.
pub struct LegendreDual<F> {
    primal: F,
    z0: Vec<f64>,
    tol: f64,
    max_iter: usize,
    /// Exact-key memo of the last inversion; a pure cache, results do not
    /// depend on hits (Newton is deterministic from the fixed start).
    last: Mutex<Option<(Vec<u64>, Vec<f64>)>>,
}

impl<F: ScalarField> LegendreDual<F> {
    pub fn new(primal: F) -> Self {
        let d = primal.dim();
        Self {
            primal,
            z0: vec![0.0; d],
            tol: 1e-13,
            max_iter: 80,

            last: Mutex::new(None),
        }
    }

    pub fn with_start(mut self, z0: Vec<f64>) -> Self {
        self.z0 = z0;
        self
    }

    pub fn primal(&self) -> &F {
        &self.primal
    }

    /// The maximizer `z(p) = ∇F⁻¹(p) = ∇F*(p)`.
    pub fn solve_z(&self, p: &[f64]) -> Result<Vec<f64>> {
        let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
        if let Some((k, z)) = self.last.lock().unwrap().as_ref() {
            if *k == key {
                return Ok(z.clone());
            }
        }
        let z = invert_gradient(&self.primal, p, &self.z0, self.tol, self.max_iter)?;
        *self.last.lock().unwrap() = Some((key, z.clone()));
        Ok(z)
    }
}

impl<F: ScalarField> ScalarField for LegendreDual<F> {
    fn dim(&self) -> usize {
        self.primal.dim()
    }

    fn value(&self, p: &[f64]) -> Result<f64> {
        let z = self.solve_z(p)?;
        let zp: f64 = z.iter().zip(p).map(|(a, b)| a * b).sum();
        Ok(zp - self.primal.value(&z)?)
    }

    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.solve_z(p)
    }

    fn hessian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let z = self.solve_z(p)?;
        let h = self.primal.hessian(&z)?;
        h.clone().try_inverse().ok_or_else(|| {
            let eig = h.symmetric_eigenvalues();
            Error::Conditioning {
                point: z,
                eigenvalues: eig.as_slice().to_vec(),
            }
        })
    }

    fn third(&self, p: &[f64]) -> Result<Tensor3> {
        let z = self.solve_z(p)?;
        let a = self.hessian(p)?;
        Ok(dual_third_tensor(&a, &self.primal.third(&z)?))
    }

    fn fourth(&self, p: &[f64]) -> Result<Tensor4> {
        let z = self.solve_z(p)?;
        let a = self.hessian(p)?;
        Ok(dual_fourth_tensor(
            &a,
            &self.primal.third(&z)?,
            &self.primal.fourth(&z)?,
        ))
    }

    fn mode(&self) -> DerivMode {
        self.primal.mode()
    }
}

/// Closed-form dual of a radial power `c·|z|^s` (`c > 0`): another radial
/// power `K·|p|^m` with `m = s/(s−1)` and `K = ±((s−1)/s)·|cs|^{1−m}`.
///
/// For `s > 1` this is the honest Legendre transform (`K > 0`). For the
/// inverse-power kernels (`s = 2−d < 0`) the primal is not convex and no
/// numeric transform exists; the closed form (`K < 0`) is what the
/// stationarity relation `∇κ(z) = p` produces, and it is exposed as such
/// rather than computed numerically.
pub fn radial_power_dual(dim: usize, coeff: f64, exponent: f64) -> super::fields::RadialPower {
    let s = exponent;
    assert!(coeff > 0.0, "radial dual needs a positive coefficient");
    assert!(
        s > 1.0 || s < 0.0,
        "radial dual undefined for exponent {s}"
    );
    let m = s / (s - 1.0);
    let sign = if s > 1.0 { 1.0 } else { -1.0 };
    let k = sign * (s - 1.0) / s * (coeff * s).abs().powf(1.0 - m);
    super::fields::RadialPower {
        dim,
        coeff: k,
        exponent: m,
    }
}
