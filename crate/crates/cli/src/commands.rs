//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::json;
use szego_core::metric::{
    blowup_scan, caratheodory_lower_bound, DistanceGrid, FamilySpec, GridSpec, PathPolyline, SzegoMetric,
};
use szego_core::monogenic::{fueter_indices, fueter_polynomial};
use szego_core::szego::TruncatedSzegoKernel;
use szego_core::{Multivector64, Paravector, Polynomial64};

use crate::cache::{cache_path, load_or_build, CacheOutcome};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult, ExitStatus};
use crate::report::{csv_text, fmt_num, num, nums, write_atomic, SuiteReport};
use crate::suites::{self, Suite};

/// Default cache location for `kernel` when none is configured.
pub const DEFAULT_CACHE_DIR: &str = ".szego-cache";

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn point(cfg: &RunConfig, comps: &[f64]) -> CliResult<Paravector<f64>> {
    if comps.len() != cfg.m + 1 {
        return Err(CliError::Config(format!("point {comps:?} needs {} coordinates for m = {}", cfg.m + 1, cfg.m)));
    }
    Ok(Paravector::from_slice(comps)?)
}

/// Given points, or `cfg.points` seeded samples within `fraction` of the domain radius.
fn scan_points(cfg: &RunConfig, given: &[Vec<f64>], fraction: f64) -> CliResult<Vec<Paravector<f64>>> {
    if !given.is_empty() {
        return given.iter().map(|p| point(cfg, p)).collect();
    }
    let (c, r) = cfg.surface()?.sphere()?;
    let mut rng = suites::rng(cfg, 1);
    Ok(suites::ball_points(&mut rng, &c, fraction * r, cfg.points))
}

fn coord_header(cfg: &RunConfig) -> Vec<String> {
    (0..=cfg.m).map(|i| format!("z{i}")).collect()
}

fn load_kernel(cfg: &RunConfig) -> CliResult<TruncatedSzegoKernel> {
    Ok(load_or_build(cfg.kernel_spec()?, cfg.cache_dir.as_deref())?.0)
}

pub fn kernel(cfg: &RunConfig) -> CliResult<ExitStatus> {
    let spec = cfg.kernel_spec()?;
    let dir = cfg.cache_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
    let path = cache_path(&dir, &spec);
    let (k, outcome) = load_or_build(spec.clone(), Some(&dir))?;

    // Self-test: a seeded combination of basis polynomials must be reproduced.
    let sig = cfg.signature();
    let mut rng = suites::rng(cfg, 2);
    let mut f = Polynomial64::zero(sig);
    for d in 0..=cfg.degree {
        for alpha in fueter_indices(sig, d) {
            let coeffs = (0..sig.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            f += &fueter_polynomial::<f64>(sig, &alpha).right_mul(&Multivector64::from_coeffs(sig, coeffs)?);
        }
    }
    let pts = scan_points(cfg, &[], 0.5)?;
    let mut worst: f64 = 0.0;
    for z in &pts {
        let got = k.reproduce(&|w| f.eval(w), z)?;
        worst = worst.max((&got - &f.eval(z)?).norm() / f.eval(z)?.norm().max(1e-300));
    }
    let passed = worst <= cfg.tol;
    let gram = k.basis().gram_report();
    let report = json!({
        "command": "kernel",
        "key": spec.cache_key(),
        "key_text": spec.key_text(),
        "path": path.display().to_string(),
        "cache": match outcome { CacheOutcome::Loaded => "loaded", _ => "built" },
        "functions": k.basis().len(),
        "gram_residual": num(gram.max_scalar_residual),
        "gram_nonscalar": num(gram.max_nonscalar),
        "dropped": gram.dropped.len(),
        "self_test": {
            "points": pts.len(),
            "max_relative_residual": num(worst),
            "tolerance": num(cfg.tol),
            "status": if passed { "pass" } else { "fail" },
        },
    });
    emit(cfg.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if passed { ExitStatus::Pass } else { ExitStatus::CheckFailure })
}

pub fn metric(cfg: &RunConfig, given: &[Vec<f64>]) -> CliResult<ExitStatus> {
    let met = SzegoMetric::new(load_kernel(cfg)?);
    let family = FamilySpec::default();
    let mut header = coord_header(cfg);
    header.extend(["lambda", "curvature", "positivity", "caratheodory_lower"].map(String::from));
    let mut rows = Vec::new();
    for z in scan_points(cfg, given, 0.8)? {
        let row = met.scan_row(&z, cfg.curvature_step, &family)?;
        let mut cells: Vec<String> = row.point.iter().map(|&x| fmt_num(x)).collect();
        cells.extend([row.lambda, row.curvature, row.positivity, row.caratheodory_lower].map(fmt_num));
        rows.push(cells);
    }
    emit(cfg.out.as_deref(), &csv_text(&header, &rows)?)?;
    Ok(ExitStatus::Pass)
}

pub fn distance(cfg: &RunConfig, from: &[f64], to: &[f64], path_out: Option<&Path>) -> CliResult<ExitStatus> {
    let a = point(cfg, from)?;
    let b = point(cfg, to)?;
    let met = SzegoMetric::new(load_kernel(cfg)?);
    let grid = DistanceGrid::build(&met, GridSpec { step: cfg.grid_step, ..GridSpec::default() })?;
    let d = grid.distance(&a, &b)?;
    if let Some(p) = path_out {
        emit(Some(p), &path_csv(cfg, &d.path)?)?;
    }
    let report = json!({
        "command": "distance",
        "from": nums(a.comps()),
        "to": nums(b.comps()),
        "value": num(d.value),
        "graph_length": num(d.graph_length),
        "smoothed_length": num(d.smoothed_length),
        "straight_length": num(d.straight_length),
        "path_vertices": d.path.vertices.len(),
        "grid_nodes": grid.node_count(),
        "grid_edges": grid.edge_count(),
    });
    emit(cfg.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(ExitStatus::Pass)
}

fn path_csv(cfg: &RunConfig, path: &PathPolyline) -> CliResult<String> {
    let rows: Vec<Vec<String>> = path.vertices.iter().map(|v| v.comps().iter().map(|&x| fmt_num(x)).collect()).collect();
    csv_text(&coord_header(cfg), &rows)
}

pub fn caratheodory(cfg: &RunConfig, given: &[Vec<f64>], blowup: bool) -> CliResult<ExitStatus> {
    let family = FamilySpec::default();
    if blowup {
        let surface = cfg.surface()?;
        let deltas: Vec<f64> = (0..cfg.points.max(2)).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / (cfg.points.max(2) - 1) as f64)).collect();
        let scan = blowup_scan(&surface, &Paravector::unit(cfg.signature(), 1), &deltas, family.graded)?;
        let header = ["delta", "value", "slope"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> =
            scan.deltas.iter().zip(&scan.values).map(|(&d, &v)| vec![fmt_num(d), fmt_num(v), fmt_num(scan.slope)]).collect();
        emit(cfg.out.as_deref(), &csv_text(&header, &rows)?)?;
        return Ok(ExitStatus::Pass);
    }
    let met = SzegoMetric::new(load_kernel(cfg)?);
    let mut header = coord_header(cfg);
    header.extend(["caratheodory_lower", "lambda", "lambda_star", "witness"].map(String::from));
    let mut rows = Vec::new();
    for z in scan_points(cfg, given, 0.8)? {
        let est = caratheodory_lower_bound(&met, &z, &family)?;
        let mut cells: Vec<String> = z.comps().iter().map(|&x| fmt_num(x)).collect();
        cells.push(fmt_num(est.value));
        cells.push(fmt_num(met.lambda(&z)?));
        cells.push(fmt_num(met.lambda_star(&z, cfg.curvature_step)?.0));
        cells.push(est.witness.describe());
        rows.push(cells);
    }
    emit(cfg.out.as_deref(), &csv_text(&header, &rows)?)?;
    Ok(ExitStatus::Pass)
}

pub fn verify(cfg: &RunConfig, suite: Suite, traceability: Option<&Path>, timing: bool) -> CliResult<ExitStatus> {
    let report = suites::run(suite, cfg)?;
    for c in &report.checks {
        eprintln!("{:>4} {:<6} {}", c.status(), if c.role == crate::report::Role::Gate { "gate" } else { "record" }, c.name);
    }
    if let Some(p) = traceability {
        write_atomic(p, SuiteReport::traceability_markdown(std::slice::from_ref(&report)).as_bytes())?;
    }
    emit(cfg.out.as_deref(), &(serde_json::to_string_pretty(&report.to_json(timing))? + "\n"))?;
    Ok(if report.passed() { ExitStatus::Pass } else { ExitStatus::CheckFailure })
}
