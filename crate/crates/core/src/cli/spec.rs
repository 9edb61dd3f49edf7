//! Parsers for the small spec strings the CLI accepts: measure sources
//! (CSV paths or generator specs), sampling regions, and domains.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measures::{read_measure_csv, DiscreteMeasure, Domain, Generator};
use crate::conditions::SampleRegion;

/// `key=value` list parser; vectors use `;` separators, e.g. `mean=0;0;1`.
fn parse_kv(s: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in s.split(',') {
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {part:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get_f64(kv: &BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<f64> {
    match kv.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("bad numeric value for {key}: {v:?}"))),
        None => default.ok_or_else(|| Error::Config(format!("missing parameter {key}"))),
    }
}

fn get_usize(kv: &BTreeMap<String, String>, key: &str, default: Option<usize>) -> Result<usize> {
    match kv.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("bad integer value for {key}: {v:?}"))),
        None => default.ok_or_else(|| Error::Config(format!("missing parameter {key}"))),
    }
}

fn get_vec(kv: &BTreeMap<String, String>, key: &str, dim: usize, default: f64) -> Result<Vec<f64>> {
    match kv.get(key) {
        None => Ok(vec![default; dim]),
        Some(v) => {
            let parts: Result<Vec<f64>> = v
                .split(';')
                .map(|p| {
                    p.parse()
                        .map_err(|_| Error::Config(format!("bad vector component {p:?} in {key}")))
                })
                .collect();
            let parts = parts?;
            if parts.len() == 1 {
                Ok(vec![parts[0]; dim])
            } else if parts.len() == dim {
                Ok(parts)
            } else {
                Err(Error::Config(format!(
                    "vector {key} has {} components, expected {dim}",
                    parts.len()
                )))
            }
        }
    }
}

/// A measure source: `file:<path>`, a bare CSV path, or a generator spec
/// (`gaussian:n=256,d=1,seed=42,mean=0,std=1`,
/// `uniform-ball:n=100,d=2,seed=1,c=0;0,r=1`,
/// `uniform-box:n=100,d=2,seed=1,lo=0;0,hi=1;1`,
/// `ring:n=100,seed=1,c=0;0,r=1,w=0.1`). Generators produce unit total mass.
pub fn parse_measure_source(spec: &str) -> Result<DiscreteMeasure> {
    let (head, rest) = match spec.split_once(':') {
        Some((h, r)) => (h, r),
        None => ("file", spec),
    };
    match head {
        "file" => read_measure_csv(rest),
        "gaussian" => {
            let kv = parse_kv(rest)?;
            let n = get_usize(&kv, "n", None)?;
            let d = get_usize(&kv, "d", Some(1))?;
            let seed = get_usize(&kv, "seed", None)? as u64;
            let mean = get_vec(&kv, "mean", d, 0.0)?;
            let std = get_f64(&kv, "std", Some(1.0))?;
            Generator::Gaussian {
                n,
                dim: d,
                mean,
                std,
            }
            .sample(seed)
        }
        "uniform-ball" => {
            let kv = parse_kv(rest)?;
            let n = get_usize(&kv, "n", None)?;
            let d = get_usize(&kv, "d", Some(2))?;
            let seed = get_usize(&kv, "seed", None)? as u64;
            let center = get_vec(&kv, "c", d, 0.0)?;
            let radius = get_f64(&kv, "r", Some(1.0))?;
            Generator::UniformBall {
                n,
                dim: d,
                center,
                radius,
            }
            .sample(seed)
        }
        "uniform-box" => {
            let kv = parse_kv(rest)?;
            let n = get_usize(&kv, "n", None)?;
            let d = get_usize(&kv, "d", Some(1))?;
            let seed = get_usize(&kv, "seed", None)? as u64;
            let lo = get_vec(&kv, "lo", d, 0.0)?;
            let hi = get_vec(&kv, "hi", d, 1.0)?;
            Generator::UniformBox { n, lo, hi }.sample(seed)
        }
        "ring" => {
            let kv = parse_kv(rest)?;
            let n = get_usize(&kv, "n", None)?;
            let seed = get_usize(&kv, "seed", None)? as u64;
            let center = get_vec(&kv, "c", 2, 0.0)?;
            let radius = get_f64(&kv, "r", Some(1.0))?;
            let width = get_f64(&kv, "w", Some(0.0))?;
            Generator::Ring {
                n,
                center,
                radius,
                width,
            }
            .sample(seed)
        }
        _ => {
            // Bare path containing ':' is unlikely; treat unknown heads as paths
            // only if the file exists, otherwise report the unknown generator.
            if std::path::Path::new(spec).exists() {
                read_measure_csv(spec)
            } else {
                Err(Error::Config(format!(
                    "unknown measure source {head:?} (and no such file {spec:?})"
                )))
            }
        }
    }
}

/// Region spec: `ball:c=0;0;0,r=1`, `box:lo=-1;-1,hi=1;1`, or `default`
/// (a ball of the entry's safe half-width).
pub fn parse_region_spec(spec: &str, dim: usize, default_halfwidth: f64) -> Result<SampleRegion> {
    if spec == "default" {
        return Ok(SampleRegion::Ball {
            center: vec![0.0; dim],
            radius: default_halfwidth,
        });
    }
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("bad region spec {spec:?}")))?;
    let kv = parse_kv(rest)?;
    match head {
        "ball" => Ok(SampleRegion::Ball {
            center: get_vec(&kv, "c", dim, 0.0)?,
            radius: get_f64(&kv, "r", Some(1.0))?,
        }),
        "annulus" => Ok(SampleRegion::Annulus {
            center: get_vec(&kv, "c", dim, 0.0)?,
            inner: get_f64(&kv, "inner", Some(0.1))?,
            outer: get_f64(&kv, "outer", Some(1.0))?,
        }),
        "box" => Ok(SampleRegion::Box {
            lo: get_vec(&kv, "lo", dim, -1.0)?,
            hi: get_vec(&kv, "hi", dim, 1.0)?,
        }),
        _ => Err(Error::Config(format!("unknown region kind {head:?}"))),
    }
}

/// Domain spec: `ball:d=2,c=0;0,r=1,boundary=64` or
/// `kidney:b=1.05,c=1,boundary=64` (planar).
pub fn parse_domain_spec(spec: &str) -> Result<Domain> {
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("bad domain spec {spec:?}")))?;
    let kv = parse_kv(rest)?;
    match head {
        "ball" => {
            let d = get_usize(&kv, "d", Some(2))?;
            let center = get_vec(&kv, "c", d, 0.0)?;
            let r = get_f64(&kv, "r", Some(1.0))?;
            let nb = get_usize(&kv, "boundary", Some(64))?;
            Domain::ball(center, r, nb)
        }
        "kidney" => {
            let b = get_f64(&kv, "b", Some(1.05))?;
            let c = get_f64(&kv, "c", Some(1.0))?;
            let nb = get_usize(&kv, "boundary", Some(128))?;
            Domain::kidney(b, c, nb)
        }
        _ => Err(Error::Config(format!("unknown domain kind {head:?}"))),
    }
}
