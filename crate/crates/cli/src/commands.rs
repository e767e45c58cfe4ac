use std::io::Write;
use std::path::{Path, PathBuf};

use steklov_core::experiments::{emit_report, perturbed_mesh, run_sweep, write_result_json, SweepResult};
use steklov_core::fem::{solve, write_eigenpair_csv, write_eigenpair_summary, EnergyFunctional};
use steklov_core::geometry::{build_base_domain, generate_mesh, DomainKind, TriMesh};
use steklov_core::measures::DiscreteBoundaryMeasure;
use steklov_core::transforms::{PerturbationMap, TransformCheck, WeightField};
use steklov_core::windows::{optimize_window, write_window_summary, Window};
use steklov_core::{Error, Result};

use crate::args::Command;
use crate::config::RunConfig;

const DEFAULT_H: f64 = 1.0 / 32.0;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn note(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Weight => weight(cfg),
        Command::Solve => solve_one(cfg),
        Command::Optimize => optimize(cfg),
        Command::Sweep => sweep(cfg).map(|_| ()),
        Command::CheckTransform => check_transform(cfg),
        Command::Report => report(cfg),
    }
}

fn weight(cfg: &RunConfig) -> Result<()> {
    let field = WeightField::new(&cfg.chart(), &cfg.oscillation()?, cfg.intervals);
    note(cfg, format!("weighted boundary length {:.12}", field.total_weighted_length));
    let mut out = sink(cfg.output.as_deref())?;
    field.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Mesh for single-domain commands: the oscillating square when `eps` is
/// set, the plain square or disk otherwise.
fn single_mesh(cfg: &RunConfig) -> Result<TriMesh> {
    match (cfg.domain, cfg.eps) {
        (DomainKind::UnitDisk, Some(_)) => Err(Error::config("domain", "the disk has no oscillating boundary")),
        (DomainKind::SquareTopChart, Some(eps)) => {
            let k = cfg.cells()?[0];
            let h = cfg.h.unwrap_or((cfg.h_factor * eps).max(cfg.h_min));
            Ok(perturbed_mesh(&cfg.chart(), &cfg.oscillation()?, k, h, cfg.boundary_refine)?.1)
        }
        (kind, None) => {
            let h = cfg.h.unwrap_or(DEFAULT_H);
            generate_mesh(&build_base_domain(kind, cfg.chart(), h)?, h)
        }
    }
}

fn solve_one(cfg: &RunConfig) -> Result<()> {
    let mesh = single_mesh(cfg)?;
    note(cfg, format!("{} nodes, {} boundary edges", mesh.num_nodes(), mesh.boundary_edges.len()));
    let energy = EnergyFunctional::new(&mesh, cfg.p)?;
    let s = DiscreteBoundaryMeasure::surface(&mesh);
    let window = Window::contiguous_arc(&s.weights, cfg.alpha, 0)?;
    let solver = cfg.optimizer_config().solver;
    let pair = solve(&energy, &window, &s, &solver)?;
    let mut out = std::io::stdout().lock();
    write_eigenpair_summary(&pair, Some(cfg.alpha), &mut out)?;
    writeln!(out)?;
    if let Some(path) = &cfg.output {
        let mut w = sink(Some(path))?;
        write_eigenpair_csv(&pair, &mesh, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn optimize(cfg: &RunConfig) -> Result<()> {
    let mesh = single_mesh(cfg)?;
    note(cfg, format!("{} nodes, {} boundary edges", mesh.num_nodes(), mesh.boundary_edges.len()));
    let energy = EnergyFunctional::new(&mesh, cfg.p)?;
    let s = DiscreteBoundaryMeasure::surface(&mesh);
    let opt = optimize_window(&energy, cfg.alpha, &s, &cfg.optimizer_config())?;
    let mut out = std::io::stdout().lock();
    write_window_summary(&opt, &mut out)?;
    writeln!(out)?;
    if let Some(path) = &cfg.output {
        let mut w = sink(Some(path))?;
        opt.window.write_csv(&mesh, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn report_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cfg: &RunConfig) -> Result<SweepResult> {
    let result = run_sweep(&cfg.sweep())?;
    for row in &result.rows {
        match &row.error {
            Some(e) => eprintln!("k = {}: row failed: {e}", row.k),
            None => note(cfg, format!("k = {}: lambda {:.10}, gap {:.3e}", row.k, row.lambda, row.rel_gap)),
        }
        if let Some(e) = &row.witness_error {
            eprintln!("k = {}: witness skipped: {e}", row.k);
        }
    }
    Ok(result)
}

fn sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let result = run(cfg)?;
    let path = report_path(cfg, "sweep.csv");
    emit_report(&result, &path)?;
    match &result.fit {
        Some(f) => println!("slope {:.6} intercept {:.6} residual {:.3e}", f.slope, f.intercept, f.residual),
        None => println!("no rate fit (fewer than three successful rows)"),
    }
    println!("wrote {}", path.display());
    Ok(result)
}

fn report(cfg: &RunConfig) -> Result<()> {
    let result = run(cfg)?;
    let path = report_path(cfg, "report.csv");
    emit_report(&result, &path)?;
    let full = path.with_extension("diagnostics.json");
    let mut w = sink(Some(&full))?;
    write_result_json(&result, &mut w)?;
    w.flush()?;
    println!("wrote {} and {}", path.display(), full.display());
    Ok(())
}

/// Largest violation among the map invariants; zero when all hold.
fn violations(c: &TransformCheck) -> Vec<String> {
    let mut v = Vec::new();
    if c.max_boundary_gap > 1e-10 {
        v.push(format!("oscillating chart is mapped {:.3e} away from the base chart", c.max_boundary_gap));
    }
    if c.max_roundtrip > 1e-10 {
        v.push(format!("inverse round trip error {:.3e}", c.max_roundtrip));
    }
    if c.max_cutoff_grad > c.cutoff_constant * (1.0 + 1e-9) {
        v.push(format!("cutoff gradient {:.3e} exceeds {:.3e}", c.max_cutoff_grad, c.cutoff_constant));
    }
    v
}

fn check_transform(cfg: &RunConfig) -> Result<()> {
    let osc = cfg.oscillation()?;
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for k in cfg.cells()? {
        let map = PerturbationMap::new(cfg.chart(), osc.clone(), 1.0 / k as f64)?;
        let c = map.check(cfg.samples)?;
        failed.extend(violations(&c).into_iter().map(|m| format!("k = {k}: {m}")));
        reports.push(c);
    }
    let mut out = sink(cfg.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &reports)?;
    writeln!(out)?;
    out.flush()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Map(failed.join("; ")))
    }
}
