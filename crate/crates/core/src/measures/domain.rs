//! Bounded domains with smooth defining functions.
//!
//! A domain carries a defining function `φ` (negative strictly inside, zero
//! on the boundary, `∇φ ≠ 0` there) together with a deterministic set of
//! boundary sample points. The q-convexity and mean-field domain checks need
//! `φ`'s gradient and Hessian on those samples.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Trait for C² defining functions.
pub trait DefiningFn: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d x d` Hessian.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Ball,
    Box,
    Polytope,
    Implicit,
}

/// A bounded domain: kind tag, defining function and boundary samples.
#[derive(Clone)]
pub struct Domain {
    kind: DomainKind,
    f: Arc<dyn DefiningFn>,
    boundary: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Domain {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Domain")
            .field("kind", &self.kind)
            .field("dim", &self.f.dim())
            .field("boundary_samples", &self.boundary.len())
            .finish()
    }
}

const BOUNDARY_TOL: f64 = 1e-8;

impl Domain {
    /// Builds a domain, verifying `|φ| ≤ 1e-8` on every boundary sample.
    pub fn new(kind: DomainKind, f: Arc<dyn DefiningFn>, boundary: Vec<Vec<f64>>) -> Result<Self> {
        for b in &boundary {
            if b.len() != f.dim() {
                return Err(Error::Dimension {
                    expected: f.dim(),
                    got: b.len(),
                });
            }
            let v = f.value(b);
            if v.abs() > BOUNDARY_TOL {
                return Err(Error::DomainInconsistent {
                    value: v,
                    point: b.clone(),
                });
            }
        }
        Ok(Self { kind, f, boundary })
    }

    /// Ball `|x - c| < r` with defining function `|x−c|² − r²` and `n_boundary`
    /// deterministic boundary samples.
    pub fn ball(center: Vec<f64>, radius: f64, n_boundary: usize) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Invalid("ball radius must be positive".into()));
        }
        let dim = center.len();
        let dirs = sphere_directions(dim, n_boundary);
        let boundary = dirs
            .into_iter()
            .map(|u| {
                center
                    .iter()
                    .zip(&u)
                    .map(|(c, ui)| c + radius * ui)
                    .collect()
            })
            .collect();
        let f = Arc::new(BallFn { center, radius });
        Domain::new(DomainKind::Ball, f, boundary)
    }

    /// A nonconvex kidney-shaped planar domain (Cassini-oval family),
    /// `φ(x) = (x₁²+x₂²)² − 2c²(x₁²−x₂²) − (b⁴−c⁴)` with `b/c` close to 1.
    /// Concave boundary arcs sit at the waist near the x₂ axis.
    pub fn kidney(b: f64, c: f64, n_boundary: usize) -> Result<Self> {
        if !(b > c && c > 0.0) {
            return Err(Error::Invalid("kidney needs b > c > 0".into()));
        }
        // b^4 < 2 c^4 gives a genuinely pinched (nonconvex) waist.
        let f = Arc::new(KidneyFn { b, c });
        let mut boundary = Vec::with_capacity(n_boundary);
        for k in 0..n_boundary {
            let th = 2.0 * PI * k as f64 / n_boundary as f64;
            // r²(θ) = c² cos 2θ + sqrt(c⁴ cos² 2θ + b⁴ − c⁴)
            let c2t = (2.0 * th).cos();
            let r2 = c * c * c2t + (c.powi(4) * c2t * c2t + b.powi(4) - c.powi(4)).sqrt();
            let r = r2.max(0.0).sqrt();
            boundary.push(vec![r * th.cos(), r * th.sin()]);
        }
        Domain::new(DomainKind::Implicit, f, boundary)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn boundary_samples(&self) -> &[Vec<f64>] {
        &self.boundary
    }

    pub fn defining_fn(&self) -> &dyn DefiningFn {
        self.f.as_ref()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.f.value(x) < 0.0
    }
}

struct BallFn {
    center: Vec<f64>,
    radius: f64,
}

impl DefiningFn for BallFn {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        s - self.radius * self.radius
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| 2.0 * (a - b)).collect()
    }
    fn hessian(&self, _x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = 2.0;
        }
        h
    }
}

struct KidneyFn {
    b: f64,
    c: f64,
}

impl DefiningFn for KidneyFn {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        r2 * r2 - 2.0 * self.c * self.c * (x[0] * x[0] - x[1] * x[1])
            - (self.b.powi(4) - self.c.powi(4))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![
            4.0 * r2 * x[0] - 4.0 * self.c * self.c * x[0],
            4.0 * r2 * x[1] + 4.0 * self.c * self.c * x[1],
        ]
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let (x1, x2) = (x[0], x[1]);
        let r2 = x1 * x1 + x2 * x2;
        let cc = self.c * self.c;
        vec![
            4.0 * r2 + 8.0 * x1 * x1 - 4.0 * cc,
            8.0 * x1 * x2,
            8.0 * x1 * x2,
            4.0 * r2 + 8.0 * x2 * x2 + 4.0 * cc,
        ]
    }
}

/// Deterministic well-spread unit directions: endpoints in 1D, uniform angles
/// in 2D, a Fibonacci lattice in 3D and a golden-ratio lattice mapped through
/// the Gaussian quantile trick in higher dimensions.
pub fn sphere_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => {
            let mut v = vec![vec![-1.0]];
            if n > 1 {
                v.push(vec![1.0]);
            }
            v
        }
        2 => (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = 2.0 * PI * (k as f64 / golden).fract();
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5fe7_ed11);
            (0..n)
                .map(|_| {
                    loop {
                        let v: Vec<f64> = (0..dim)
                            .map(|_| {
                                // Box–Muller from two uniforms
                                let u1: f64 = rng.gen_range(1e-12..1.0);
                                let u2: f64 = rng.gen::<f64>();
                                (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                            })
                            .collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1e-6 {
                            return v.into_iter().map(|x| x / norm).collect();
                        }
                    }
                })
                .collect()
        }
    }
}
