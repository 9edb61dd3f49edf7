//! Configuration and artifact emission for the `twostep` binary.
//!
//! Everything a run needs is captured in a [`RunConfig`] that round-trips
//! through JSON; the resolved config is written next to the outputs so any
//! run can be reproduced from its artifact directory alone. All emitted JSON
//! is stable-key-ordered and floats use shortest round-trip formatting, so a
//! fixed config and seed produce byte-identical outputs at any thread count.
//!
//! Exit-code contract: 0 success, 2 validation failure, 3 solver failure,
//! 4 I/O failure. Failures leave a machine-readable `error.json` and remove
//! partial outputs.

mod spec;

pub use spec::{parse_domain_spec, parse_measure_source, parse_region_spec};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_h1, check_h2, check_h2c, meanfield_domain_conditions, q_convexity, ConditionReport,
    H2Mode, SampleRegion,
};
use crate::error::{Error, Result};
use crate::meanfield::{fixed_point_solve, MeanFieldProblem};
use crate::measures::{wasserstein2, write_measure_csv};
use crate::ot::{EntropicConfig, MapMode};
use crate::potentials::{legendre_transform, lookup, LegendreDual, ScalarField};
use crate::twostep::{ma_residual, solve, SolveConfig, SolverChoice, TwoStepProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Exact,
    Entropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Solve the two-step problem and emit plan/potential/map artifacts.
    Solve {
        source: String,
        target: String,
        potential: String,
        t: f64,
        solver: SolverKind,
        map_mode: String,
        out: PathBuf,
        /// Cells per axis for the determinant-equation residual (0 = skip).
        ma_cells: usize,
    },
    /// Scan structure conditions of a named potential on a region.
    Check {
        potential: String,
        region: String,
        conditions: Vec<String>,
        points: usize,
        directions: usize,
        seed: u64,
        out: PathBuf,
    },
    /// Domain q-convexity and mean-field boundary conditions.
    CheckDomains {
        omega0: String,
        omega_t: String,
        potential: Option<String>,
        kernel: Option<String>,
        t: f64,
        mass: f64,
        seed: u64,
        out: PathBuf,
    },
    /// Mean-field fixed point.
    Meanfield {
        source: String,
        target: String,
        kernel: String,
        t: f64,
        damping: f64,
        tol: f64,
        max_iterations: usize,
        out: PathBuf,
    },
    /// Wasserstein-2 squared distance (½-factor convention) between two measures.
    W2 { a: String, b: String },
    /// Discrete Legendre transform of a named potential on a box.
    Legendre {
        potential: String,
        lo: Vec<f64>,
        hi: Vec<f64>,
        resolution: usize,
        out: PathBuf,
    },
}

/// A complete, reproducible run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    /// Worker-pool size; `None` defers to `TWOSTEP_THREADS` or the default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Exit codes of the CLI contract.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

fn classify(err: &Error) -> i32 {
    match err {
        Error::Invalid(_)
        | Error::UnknownPotential(_)
        | Error::Config(_)
        | Error::Dimension { .. }
        | Error::Balance { .. } => EXIT_VALIDATION,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

/// Runs a config to completion: returns the exit code, writing outputs (or
/// `error.json`) under the command's output directory.
pub fn run(config: &RunConfig) -> i32 {
    let threads = config
        .threads
        .or_else(|| {
            std::env::var("TWOSTEP_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    pool.install(|| run_inner(config))
}

fn run_inner(config: &RunConfig) -> i32 {
    let mut emitted = Emitted::default();
    match dispatch(config, &mut emitted) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let code = classify(&err);
            emitted.remove_all();
            if let Some(dir) = config.out_dir() {
                let _ = fs::create_dir_all(dir);
                let payload = serde_json::json!({
                    "error": err.to_string(),
                    "kind": error_kind(&err),
                    "exit_code": code,
                });
                let _ = fs::write(
                    dir.join("error.json"),
                    serde_json::to_string_pretty(&payload).unwrap_or_default(),
                );
            }
            eprintln!("error: {err}");
            code
        }
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Balance { .. } => "balance",
        Error::Dimension { .. } => "dimension",
        Error::Invalid(_) => "invalid",
        Error::UnknownPotential(_) => "unknown-potential",
        Error::Config(_) => "config",
        Error::MapEvaluation { .. } => "map-evaluation",
        Error::NonFinite { .. } => "non-finite",
        Error::Singularity { .. } => "singularity",
        Error::Convexity { .. } => "convexity",
        Error::Conditioning { .. } => "conditioning",
        Error::OutsideGrid { .. } => "outside-grid",
        Error::SizeCap { .. } => "size-cap",
        Error::MultivaluedMap { .. } => "multivalued-map",
        Error::Stationarity { .. } => "stationarity",
        Error::NonConvergence { .. } => "non-convergence",
        Error::DomainInconsistent { .. } => "domain",
        Error::FixedPointInner { .. } => "fixed-point-inner",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

impl RunConfig {
    pub fn out_dir(&self) -> Option<&Path> {
        match &self.command {
            Command::Solve { out, .. }
            | Command::Meanfield { out, .. }
            | Command::Legendre { out, .. } => Some(out),
            Command::Check { out, .. } | Command::CheckDomains { out, .. } => {
                out.parent().filter(|p| !p.as_os_str().is_empty()).or(Some(Path::new(".")))
            }
            Command::W2 { .. } => None,
        }
    }
}

/// Tracks written files so failures can clean up partial outputs.
#[derive(Default)]
struct Emitted {
    files: Vec<PathBuf>,
}

impl Emitted {
    fn record(&mut self, p: PathBuf) -> PathBuf {
        self.files.push(p.clone());
        p
    }
    fn remove_all(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
    }
}

fn write_json<T: Serialize>(emitted: &mut Emitted, path: PathBuf, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    fs::write(emitted.record(path), s + "\n")?;
    Ok(())
}

fn dispatch(config: &RunConfig, emitted: &mut Emitted) -> Result<()> {
    match &config.command {
        Command::Solve {
            source,
            target,
            potential,
            t,
            solver,
            map_mode,
            out,
            ma_cells,
        } => cmd_solve(
            config, source, target, potential, *t, solver, map_mode, out, *ma_cells, emitted,
        ),
        Command::Check {
            potential,
            region,
            conditions,
            points,
            directions,
            seed,
            out,
        } => cmd_check(
            config, potential, region, conditions, *points, *directions, *seed, out, emitted,
        ),
        Command::CheckDomains {
            omega0,
            omega_t,
            potential,
            kernel,
            t,
            mass,
            seed,
            out,
        } => cmd_check_domains(
            config, omega0, omega_t, potential, kernel, *t, *mass, *seed, out, emitted,
        ),
        Command::Meanfield {
            source,
            target,
            kernel,
            t,
            damping,
            tol,
            max_iterations,
            out,
        } => cmd_meanfield(
            config, source, target, kernel, *t, *damping, *tol, *max_iterations, out, emitted,
        ),
        Command::W2 { a, b } => {
            let ma = parse_measure_source(a)?;
            let mb = parse_measure_source(b)?;
            let v = wasserstein2(&ma, &mb)?;
            println!("{v}");
            Ok(())
        }
        Command::Legendre {
            potential,
            lo,
            hi,
            resolution,
            out,
        } => cmd_legendre(config, potential, lo, hi, *resolution, out, emitted),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    config: &RunConfig,
    source: &str,
    target: &str,
    potential: &str,
    t: f64,
    solver: &SolverKind,
    map_mode: &str,
    out: &Path,
    ma_cells: usize,
    emitted: &mut Emitted,
) -> Result<()> {
    if t <= 0.0 {
        return Err(Error::Config("T must be positive".into()));
    }
    let rho0 = parse_measure_source(source)?;
    let rho_t = parse_measure_source(target)?;
    let entry = lookup(potential)?;
    if entry.dim != rho0.dim() {
        return Err(Error::Config(format!(
            "potential {} has dimension {} but measures have {}",
            entry.name,
            entry.dim,
            rho0.dim()
        )));
    }
    let map_mode = parse_map_mode(map_mode)?;
    let problem = TwoStepProblem::new(rho0, rho_t, entry.field.clone(), t)?;
    let cfg = SolveConfig {
        solver: match solver {
            SolverKind::Exact => SolverChoice::Exact,
            SolverKind::Entropic => SolverChoice::Entropic(EntropicConfig::default()),
        },
        map_mode,
        pushforward_diagnostic: true,
    };
    let solution = solve(&problem, &cfg)?;
    let ma = if ma_cells > 0 {
        Some(ma_residual(&problem, &solution, ma_cells)?)
    } else {
        None
    };

    fs::create_dir_all(out)?;
    write_config(config, out, emitted)?;
    write_schema(out, emitted)?;

    // plan.csv: one row per nonzero coupling entry.
    {
        let mut w = csv::Writer::from_path(emitted.record(out.join("plan.csv")))?;
        w.write_record(["i", "j", "mass"])?;
        for (i, j, m) in solution.plan.support() {
            w.write_record(&[i.to_string(), j.to_string(), format!("{m}")])?;
        }
        w.flush()?;
    }
    // phi.csv: x, φ, ∇φ.
    {
        let d = problem.rho0.dim();
        let mut w = csv::Writer::from_path(emitted.record(out.join("phi.csv")))?;
        let mut hdr: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        hdr.push("phi".into());
        hdr.extend((1..=d).map(|k| format!("dphi{k}")));
        w.write_record(&hdr)?;
        for i in 0..problem.rho0.len() {
            let mut row: Vec<String> =
                problem.rho0.point(i).iter().map(|x| format!("{x}")).collect();
            row.push(format!("{}", solution.phi[i]));
            row.extend(solution.grad_phi[i].iter().map(|x| format!("{x}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    write_measure_csv(
        emitted.record(out.join("intermediate.csv")),
        &solution.intermediate,
    )?;
    // map.csv: x, m(x).
    {
        let d = problem.rho0.dim();
        let mut w = csv::Writer::from_path(emitted.record(out.join("map.csv")))?;
        let mut hdr: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        hdr.extend((1..=d).map(|k| format!("m{k}")));
        w.write_record(&hdr)?;
        for i in 0..problem.rho0.len() {
            let mut row: Vec<String> =
                problem.rho0.point(i).iter().map(|x| format!("{x}")).collect();
            row.extend(solution.map_points[i].iter().map(|x| format!("{x}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let diagnostics = serde_json::json!({
        "objective": solution.diagnostics.objective,
        "implied_action": solution.diagnostics.implied_action,
        "pushforward_w2_error": solution.diagnostics.pushforward_w2_error,
        "c1_norm": solution.diagnostics.c1_norm,
        "c1_bound": solution.diagnostics.c1_bound,
        "solver": solution.diagnostics.solver,
        "ma_residual": ma,
    });
    write_json(emitted, out.join("diagnostics.json"), &diagnostics)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    config: &RunConfig,
    potential: &str,
    region: &str,
    conditions: &[String],
    points: usize,
    directions: usize,
    seed: u64,
    out: &Path,
    emitted: &mut Emitted,
) -> Result<()> {
    let entry = lookup(potential)?;
    let region = parse_region_spec(region, entry.dim, entry.sample_halfwidth)?;
    let field = entry.field.as_ref();
    let mut reports: Vec<ConditionReport> = Vec::new();
    for c in conditions {
        let rep = match c.as_str() {
            "H0" => smoothness_probe(field, &region, seed)?,
            "H1" => check_h1(field, &region, points, seed)?,
            "H2" => check_h2(field, &region, points, directions, seed, H2Mode::Strict)?,
            "H2w" => check_h2(field, &region, points, directions, seed, H2Mode::Weak)?,
            "H2c" => check_h2c(field, &region, points, directions, seed, None)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown condition {other:?}; expected H0, H1, H2, H2w or H2c"
                )))
            }
        };
        reports.push(rep);
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let payload = serde_json::json!({
        "potential": entry.name,
        "region": region,
        "seed": seed,
        "reports": reports,
        "config": config,
    });
    write_json(emitted, out.to_path_buf(), &payload)?;
    Ok(())
}

/// H0 is a smoothness assumption; numerically it degrades to "all derivative
/// tensors evaluate finitely and symmetrically on the sample set".
fn smoothness_probe(
    field: &dyn ScalarField,
    region: &SampleRegion,
    seed: u64,
) -> Result<ConditionReport> {
    let points = region.sample(16, seed);
    let mut worst = 0.0f64;
    let mut witness = points[0].clone();
    for z in &points {
        let h = field.hessian(z)?;
        let asym = (h.clone() - h.transpose()).abs().max();
        let t3 = field.third(z)?;
        let t4 = field.fourth(z)?;
        let defect = asym
            .max(t3.symmetry_defect() / t3.max_abs().max(1.0))
            .max(t4.symmetry_defect() / t4.max_abs().max(1.0));
        if defect > worst {
            worst = defect;
            witness = z.clone();
        }
        field.value(z)?;
        field.gradient(z)?;
    }
    Ok(ConditionReport {
        condition: "H0".into(),
        verdict: worst <= 1e-8,
        margin: worst,
        witness: crate::conditions::Witness {
            z: witness,
            ..Default::default()
        },
        samples: points.len(),
        extra: BTreeMap::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_domains(
    config: &RunConfig,
    omega0: &str,
    omega_t: &str,
    potential: &Option<String>,
    kernel: &Option<String>,
    t: f64,
    mass: f64,
    seed: u64,
    out: &Path,
    emitted: &mut Emitted,
) -> Result<()> {
    let dom0 = parse_domain_spec(omega0)?;
    let dom_t = parse_domain_spec(omega_t)?;
    let mut reports = Vec::new();

    if let Some(pot) = potential {
        let entry = lookup(pot)?;
        if entry.dim != dom0.dim() {
            return Err(Error::Config(format!(
                "potential dimension {} does not match domain dimension {}",
                entry.dim,
                dom0.dim()
            )));
        }
        // q-convexity needs the dual field; closed form when known.
        let dual: std::sync::Arc<dyn ScalarField> = match &entry.analytic_dual {
            Some(d) => d.clone(),
            None => std::sync::Arc::new(LegendreDual::new(entry.field.clone())),
        };
        let t_samples: Vec<Vec<f64>> = dom_t
            .boundary_samples()
            .iter()
            .cloned()
            .chain(std::iter::once(vec![0.0; dom_t.dim()]).filter(|c| dom_t.contains(c)))
            .collect();
        let mut r0 = q_convexity(&dom0, &t_samples, dual.as_ref())?;
        r0.condition = format!("{}(omega0)", r0.condition);
        reports.push(r0);
        let s_samples: Vec<Vec<f64>> = dom0
            .boundary_samples()
            .iter()
            .cloned()
            .chain(std::iter::once(vec![0.0; dom0.dim()]).filter(|c| dom0.contains(c)))
            .collect();
        let mut r1 = q_convexity(&dom_t, &s_samples, dual.as_ref())?;
        r1.condition = format!("{}(omegaT)", r1.condition);
        reports.push(r1);
    }

    if let Some(kern) = kernel {
        let entry = lookup(kern)?;
        // Conservative kick-time box: the halved Minkowski sum of the two
        // domains' bounding boxes (exact for the kick-free map, a gradient
        // bound keeps the true intermediate domain inside a comparable box).
        let bbox = |d: &crate::measures::Domain| {
            let mut lo = vec![f64::INFINITY; d.dim()];
            let mut hi = vec![f64::NEG_INFINITY; d.dim()];
            for b in d.boundary_samples() {
                for k in 0..d.dim() {
                    lo[k] = lo[k].min(b[k]);
                    hi[k] = hi[k].max(b[k]);
                }
            }
            (lo, hi)
        };
        let (lo0, hi0) = bbox(&dom0);
        let (lot, hit) = bbox(&dom_t);
        let lo: Vec<f64> = lo0.iter().zip(&lot).map(|(a, b)| 0.5 * (a + b)).collect();
        let hi: Vec<f64> = hi0.iter().zip(&hit).map(|(a, b)| 0.5 * (a + b)).collect();
        let region = SampleRegion::Box { lo, hi };
        let samples = region.sample(8, seed);
        let (b0, b1) =
            meanfield_domain_conditions(&dom0, &dom_t, entry.field.as_ref(), t, mass, &samples)?;
        reports.push(b0);
        reports.push(b1);
    }

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let payload = serde_json::json!({
        "omega0": omega0,
        "omegaT": omega_t,
        "reports": reports,
        "config": config,
    });
    write_json(emitted, out.to_path_buf(), &payload)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_meanfield(
    config: &RunConfig,
    source: &str,
    target: &str,
    kernel: &str,
    t: f64,
    damping: f64,
    tol: f64,
    max_iterations: usize,
    out: &Path,
    emitted: &mut Emitted,
) -> Result<()> {
    let rho0 = parse_measure_source(source)?;
    let rho_t = parse_measure_source(target)?;
    let entry = lookup(kernel)?;
    let mut problem = MeanFieldProblem::new(rho0, rho_t, entry.field.clone(), t)?
        .with_damping(damping)
        .with_tolerance(tol)
        .with_max_iterations(max_iterations);
    if entry.punctured {
        let (lo, hi) = problem.rho0.bounding_box();
        let diam = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a).abs())
            .fold(0.0f64, f64::max)
            .max(1e-12);
        problem = problem.with_exclusion_radius(Some(crate::meanfield::DEFAULT_EXCLUSION_REL * diam));
    }
    let solution = fixed_point_solve(&problem)?;

    fs::create_dir_all(out)?;
    write_config(config, out, emitted)?;
    write_json(emitted, out.join("trace.json"), &solution.trace)?;
    write_measure_csv(
        emitted.record(out.join("intermediate_final.csv")),
        &solution.rho_bar,
    )?;
    // Final-iterate artifacts mirror the solve outputs.
    {
        let sol = &solution.final_solution;
        write_schema(out, emitted)?;
        let mut w = csv::Writer::from_path(emitted.record(out.join("plan.csv")))?;
        w.write_record(["i", "j", "mass"])?;
        for (i, j, m) in sol.plan.support() {
            w.write_record(&[i.to_string(), j.to_string(), format!("{m}")])?;
        }
        w.flush()?;
        let d = problem.rho0.dim();
        let mut w = csv::Writer::from_path(emitted.record(out.join("phi.csv")))?;
        let mut hdr: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        hdr.push("phi".into());
        hdr.extend((1..=d).map(|k| format!("dphi{k}")));
        w.write_record(&hdr)?;
        for i in 0..problem.rho0.len() {
            let mut row: Vec<String> =
                problem.rho0.point(i).iter().map(|x| format!("{x}")).collect();
            row.push(format!("{}", sol.phi[i]));
            row.extend(sol.grad_phi[i].iter().map(|x| format!("{x}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        write_measure_csv(
            emitted.record(out.join("intermediate.csv")),
            &sol.intermediate,
        )?;
        let mut w = csv::Writer::from_path(emitted.record(out.join("map.csv")))?;
        let mut hdr: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        hdr.extend((1..=d).map(|k| format!("m{k}")));
        w.write_record(&hdr)?;
        for i in 0..problem.rho0.len() {
            let mut row: Vec<String> =
                problem.rho0.point(i).iter().map(|x| format!("{x}")).collect();
            row.extend(sol.map_points[i].iter().map(|x| format!("{x}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        let diagnostics = serde_json::json!({
            "converged": solution.trace.converged,
            "self_consistency": solution.trace.self_consistency,
            "iterations": solution.trace.iterations.len(),
            "objective": sol.diagnostics.objective,
            "solver": sol.diagnostics.solver,
        });
        write_json(emitted, out.join("diagnostics.json"), &diagnostics)?;
    }
    Ok(())
}

fn cmd_legendre(
    config: &RunConfig,
    potential: &str,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    out: &Path,
    emitted: &mut Emitted,
) -> Result<()> {
    let entry = lookup(potential)?;
    if lo.len() != entry.dim || hi.len() != entry.dim {
        return Err(Error::Config(format!(
            "box bounds must have dimension {}",
            entry.dim
        )));
    }
    let dual = legendre_transform(entry.field.as_ref(), lo, hi, resolution)?;
    fs::create_dir_all(out)?;
    write_config(config, out, emitted)?;
    let (plo, phi_bounds) = dual.bounds();
    let d = entry.dim;
    let mut w = csv::Writer::from_path(emitted.record(out.join("dual.csv")))?;
    let mut hdr: Vec<String> = (1..=d).map(|k| format!("p{k}")).collect();
    hdr.push("value".into());
    w.write_record(&hdr)?;
    let total: usize = resolution.pow(d as u32);
    for flat in 0..total {
        let mut rest = flat;
        let mut p = vec![0.0; d];
        for k in (0..d).rev() {
            let i = rest % resolution;
            rest /= resolution;
            p[k] = plo[k] + (phi_bounds[k] - plo[k]) * i as f64 / (resolution - 1) as f64;
        }
        let v = dual.value(&p)?;
        let mut row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
        row.push(format!("{v}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_map_mode(s: &str) -> Result<MapMode> {
    match s {
        "dominant" => Ok(MapMode::Dominant),
        "barycentric" => Ok(MapMode::Barycentric),
        other => Err(Error::Config(format!(
            "unknown map mode {other:?}; expected dominant or barycentric"
        ))),
    }
}

fn write_config(config: &RunConfig, out: &Path, emitted: &mut Emitted) -> Result<()> {
    write_json(emitted, out.join("config.resolved.json"), config)
}

/// Column documentation written next to every CSV-emitting run.
fn write_schema(out: &Path, emitted: &mut Emitted) -> Result<()> {
    let schema = serde_json::json!({
        "plan.csv": {
            "columns": ["i", "j", "mass"],
            "doc": "nonzero coupling entries; i indexes source rows, j target rows",
        },
        "phi.csv": {
            "columns": ["x1..xd", "phi", "dphi1..dphid"],
            "doc": "initial velocity potential and its gradient at the source points; gauge phi(x_first) = 0",
        },
        "intermediate.csv": {
            "columns": ["x1..xd", "w"],
            "doc": "kick-time measure: source points moved to the gradient of the modified potential",
        },
        "map.csv": {
            "columns": ["x1..xd", "m1..md"],
            "doc": "full transport map images of the source points",
        },
        "diagnostics.json": {
            "doc": "objective, implied action, pushforward W2 error (1/2-convention), C1 norm/bound, solver metadata, optional determinant-equation residual stats",
        },
    });
    write_json(emitted, out.join("schema.json"), &schema)
}
