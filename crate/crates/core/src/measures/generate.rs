//! Seeded point-cloud generators for reproducible fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// Built-in measure generators. All sampling is driven by an explicit 64-bit
/// seed through a ChaCha stream, so outputs are identical across platforms
/// and thread counts.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Isotropic Gaussian with the given mean and standard deviation.
    Gaussian {
        n: usize,
        dim: usize,
        mean: Vec<f64>,
        std: f64,
    },
    /// Uniform on a solid ball.
    UniformBall {
        n: usize,
        dim: usize,
        center: Vec<f64>,
        radius: f64,
    },
    /// Uniform on an axis-aligned box.
    UniformBox { n: usize, lo: Vec<f64>, hi: Vec<f64> },
    /// Planar annulus of mid radius `radius` and radial width `width`.
    Ring {
        n: usize,
        center: Vec<f64>,
        radius: f64,
        width: f64,
    },
}

impl Generator {
    /// Draws the point cloud with unit total mass and uniform weights.
    pub fn sample(&self, seed: u64) -> Result<DiscreteMeasure> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Generator::Gaussian { n, dim, mean, std } => {
                if mean.len() != *dim {
                    return Err(Error::Dimension {
                        expected: *dim,
                        got: mean.len(),
                    });
                }
                let pts = (0..*n)
                    .map(|_| {
                        (0..*dim)
                            .map(|k| mean[k] + std * standard_normal(&mut rng))
                            .collect()
                    })
                    .collect();
                DiscreteMeasure::uniform(pts, 1.0)
            }
            Generator::UniformBall {
                n,
                dim,
                center,
                radius,
            } => {
                if center.len() != *dim {
                    return Err(Error::Dimension {
                        expected: *dim,
                        got: center.len(),
                    });
                }
                let pts = (0..*n)
                    .map(|_| {
                        // Gaussian direction, radius ~ U^{1/d} for uniform volume.
                        let g: Vec<f64> = (0..*dim).map(|_| standard_normal(&mut rng)).collect();
                        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                        let u: f64 = rng.gen::<f64>();
                        let r = radius * u.powf(1.0 / *dim as f64);
                        center
                            .iter()
                            .zip(&g)
                            .map(|(c, gi)| c + r * gi / norm)
                            .collect()
                    })
                    .collect();
                DiscreteMeasure::uniform(pts, 1.0)
            }
            Generator::UniformBox { n, lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::Invalid("box lo/hi lengths differ".into()));
                }
                let pts = (0..*n)
                    .map(|_| {
                        lo.iter()
                            .zip(hi)
                            .map(|(&a, &b)| rng.gen_range(a..b))
                            .collect()
                    })
                    .collect();
                DiscreteMeasure::uniform(pts, 1.0)
            }
            Generator::Ring {
                n,
                center,
                radius,
                width,
            } => {
                if center.len() != 2 {
                    return Err(Error::Invalid("ring generator is planar (d = 2)".into()));
                }
                let pts = (0..*n)
                    .map(|_| {
                        let th = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = radius + width * (rng.gen::<f64>() - 0.5);
                        vec![center[0] + r * th.cos(), center[1] + r * th.sin()]
                    })
                    .collect();
                DiscreteMeasure::uniform(pts, 1.0)
            }
        }
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(1e-300..1.0f64);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
