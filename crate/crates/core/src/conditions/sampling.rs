//! Deterministic point and direction sampling for condition scans.
//!
//! Every scan uses a fixed lattice (catching axis-aligned structure) plus a
//! seeded ChaCha stream, reduced in fixed order, so reports are
//! byte-reproducible for a given seed regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Where a condition is sampled.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampleRegion {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// Ball with a small excluded core (singular kernels).
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
}

impl SampleRegion {
    pub fn dim(&self) -> usize {
        match self {
            SampleRegion::Box { lo, .. } => lo.len(),
            SampleRegion::Ball { center, .. } | SampleRegion::Annulus { center, .. } => {
                center.len()
            }
        }
    }

    pub fn unit_ball(dim: usize) -> Self {
        SampleRegion::Ball {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            SampleRegion::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| x >= a && x <= b),
            SampleRegion::Ball { center, radius } => {
                dist2(p, center) <= radius * radius
            }
            SampleRegion::Annulus {
                center,
                inner,
                outer,
            } => {
                let d2 = dist2(p, center);
                d2 >= inner * inner && d2 <= outer * outer
            }
        }
    }

    fn enclosing_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SampleRegion::Box { lo, hi } => (lo.clone(), hi.clone()),
            SampleRegion::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SampleRegion::Annulus { center, outer, .. } => (
                center.iter().map(|c| c - outer).collect(),
                center.iter().map(|c| c + outer).collect(),
            ),
        }
    }

    /// Deterministic samples: a coarse lattice filtered to the region, topped
    /// up with seeded rejection samples until `n` points are collected.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = self.dim();
        let (lo, hi) = self.enclosing_box();
        let mut out = Vec::with_capacity(n);
        let per: usize = match d {
            1 => 9,
            2 => 5,
            3 => 4,
            _ => 3,
        };
        let lattice = per.pow(d as u32);
        for flat in 0..lattice {
            if out.len() >= n {
                break;
            }
            let mut rest = flat;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rest % per;
                rest /= per;
                p[k] = lo[k] + (hi[k] - lo[k]) * (i as f64 + 0.5) / per as f64;
            }
            if self.contains(&p) {
                out.push(p);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut guard = 0usize;
        while out.len() < n && guard < 100_000 {
            guard += 1;
            let p: Vec<f64> = (0..d).map(|k| rng.gen_range(lo[k]..hi[k])).collect();
            if self.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The deterministic direction family: coordinate axes and two-axis
/// diagonals, normalized.
pub fn axis_diagonal_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        dirs.push(e);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = s;
                e[j] = sign * s;
                dirs.push(e);
            }
        }
    }
    dirs
}

/// Ordered orthogonal pairs from the deterministic family (axis/axis,
/// axis/diagonal and diagonal/diagonal pairs), followed by `n_random` seeded
/// orthonormal pairs. Axis-aligned counterexamples are always in the
/// deterministic prefix.
pub fn orthogonal_direction_pairs(d: usize, n_random: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dirs = axis_diagonal_directions(d);
    let mut pairs = Vec::new();
    for a in &dirs {
        for b in &dirs {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            if dot.abs() < 1e-12 {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        if let Some(p) = random_orthonormal_pair(d, &mut rng) {
            pairs.push(p);
        }
    }
    pairs
}

/// Ordered unit pairs without the orthogonality restriction: all pairs from
/// the deterministic family plus seeded random unit pairs.
pub fn unit_direction_pairs(d: usize, n_random: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dirs = axis_diagonal_directions(d);
    let mut pairs = Vec::new();
    for a in &dirs {
        for b in &dirs {
            pairs.push((a.clone(), b.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let a = random_unit(d, &mut rng);
        let b = random_unit(d, &mut rng);
        pairs.push((a, b));
    }
    pairs
}

pub fn random_unit<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn random_orthonormal_pair<R: Rng>(d: usize, rng: &mut R) -> Option<(Vec<f64>, Vec<f64>)> {
    if d < 2 {
        return None;
    }
    let a = random_unit(d, rng);
    for _ in 0..32 {
        let mut b = random_unit(d, rng);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        for (bk, ak) in b.iter_mut().zip(&a) {
            *bk -= dot * ak;
        }
        let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return Some((a, b.into_iter().map(|x| x / n).collect()));
        }
    }
    None
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(1e-300..1.0f64);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
