mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use num_complex::Complex64 as C64;

use goursat_ernst::boundary_data::{make_boundary_datum, Axis, BoundaryDatum, DatumSpec};
use goursat_ernst::diagnostics::{boundary_limit_report, Edge};
use goursat_ernst::euler_darboux::{abel_solution, solve_linear_grid, LinearRoute};
use goursat_ernst::exact_solutions::evaluate_exact;
use goursat_ernst::geometry::{build_contour_system, ContourSystem};
use goursat_ernst::rh_solver::{solve_grid, solve_point, ErnstField, GoursatData, GridConfig};

use config::{parse_grid, Format, Mode, RunConfig};
use table::{Cell, Table};

#[derive(Parser, Debug)]
#[command(version, about = "Goursat problem for the hyperbolic Ernst equation via a Riemann-Hilbert solver")]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    command: Mode,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Datum family used on both edges (khan-penrose, nutku-halil, unit, khan-penrose-log, collinear-sqrt, collinear-poly).
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Nodes per loop.
    #[arg(long)]
    nodes: Option<usize>,
    /// Grid size as `nx,ny`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for the grid solves.
    #[arg(long)]
    threads: Option<usize>,
}

/// Failure classes with their exit codes.
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

struct Report {
    passed: bool,
    summary: Vec<String>,
    table: Table,
}

fn build_config(args: &Args) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&args.config, &args.data) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(_)) => RunConfig::with_family(DatumSpec::Unit { alpha: 0.5 }, args.command),
        (None, None) => anyhow::bail!("either --config or --data is required"),
    };
    cfg.mode = args.command;
    if let Some(name) = &args.data {
        let spec = DatumSpec::from_name(name)?;
        cfg.data.x = spec.clone();
        cfg.data.y = spec;
    }
    if let Some(d) = args.delta {
        cfg.grid.delta = d;
    }
    if let Some(n) = args.nodes {
        cfg.solver.nodes_per_loop = n;
    }
    if let Some((nx, ny)) = args.grid {
        cfg.grid.nx = nx;
        cfg.grid.ny = ny;
    }
    if let Some(p) = &args.out {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn edge_data(spec: &DatumSpec, axis: Axis, as_ernst: bool) -> anyhow::Result<BoundaryDatum> {
    let d = make_boundary_datum(spec, axis)?;
    Ok(if as_ernst && spec.is_linear() { d.exponential()? } else { d })
}

/// Data for the matrix solver; collinear specs enter through `E = e^{−V}`.
fn ernst_data(cfg: &RunConfig) -> anyhow::Result<GoursatData> {
    Ok(GoursatData::new(
        edge_data(&cfg.data.x, Axis::X, true)?,
        edge_data(&cfg.data.y, Axis::Y, true)?,
    ))
}

fn linear_data(cfg: &RunConfig) -> anyhow::Result<GoursatData> {
    Ok(GoursatData::new(
        edge_data(&cfg.data.x, Axis::X, false)?,
        edge_data(&cfg.data.y, Axis::Y, false)?,
    ))
}

fn contours(cfg: &RunConfig, nodes: usize) -> anyhow::Result<ContourSystem> {
    Ok(build_contour_system(cfg.grid.delta, nodes)?)
}

fn grid(cfg: &RunConfig) -> anyhow::Result<GridConfig> {
    Ok(GridConfig::interior(cfg.grid.delta, cfg.grid.nx, cfg.grid.ny)?)
}

fn failure_lines(field: &ErnstField) -> Vec<String> {
    field
        .failures
        .iter()
        .map(|f| format!("failed at ({}, {}): {}", f.x, f.y, f.message))
        .collect()
}

fn field_table(field: &ErnstField) -> Table {
    let mut t = Table::new(&["x", "y", "re_E", "im_E", "det_residual", "sym_residual", "cond"]);
    for (x, y, v) in field.solved() {
        let d = &v.diagnostics;
        t.push(vec![
            x.into(),
            y.into(),
            v.ernst.re.into(),
            v.ernst.im.into(),
            d.det_residual.into(),
            d.symmetry_residual.into(),
            d.condition_number.into(),
        ]);
    }
    t
}

fn run_solve(cfg: &RunConfig) -> anyhow::Result<Report> {
    let field = solve_grid(&grid(cfg)?, &ernst_data(cfg)?, &contours(cfg, cfg.solver.nodes_per_loop)?);
    let mut summary = vec![format!("solved {} points", field.solved().count())];
    summary.extend(failure_lines(&field));
    Ok(Report {
        passed: field.failures.is_empty(),
        summary,
        table: field_table(&field),
    })
}

fn check_row(t: &mut Table, name: &str, worst: f64, tol: f64) -> bool {
    let ok = worst <= tol;
    t.push(vec![name.into(), worst.into(), tol.into(), Cell::Text(ok.to_string())]);
    ok
}

fn run_verify(cfg: &RunConfig) -> anyhow::Result<Report> {
    let data = ernst_data(cfg)?;
    let field = solve_grid(&grid(cfg)?, &data, &contours(cfg, cfg.solver.nodes_per_loop)?);
    let tol = &cfg.solver.tolerances;
    let worst =
        |f: fn(&goursat_ernst::rh_solver::Diagnostics) -> f64| field.solved().map(|(_, _, v)| f(&v.diagnostics)).fold(0.0, f64::max);
    let mut t = Table::new(&["check", "worst", "tolerance", "passed"]);
    let mut results = vec![
        check_row(&mut t, "det_residual", worst(|d| d.det_residual), tol.invariant),
        check_row(&mut t, "symmetry_residual", worst(|d| d.symmetry_residual), tol.invariant),
        check_row(&mut t, "structure_residual", worst(|d| d.structure_residual), tol.invariant),
        check_row(&mut t, "jump_det_residual", worst(|d| d.jump_det_residual), tol.invariant),
        check_row(&mut t, "failed_points", field.failures.len() as f64, 0.0),
    ];
    if let Some(id) = cfg.exact() {
        let mut err: f64 = 0.0;
        for (x, y, v) in field.solved() {
            err = err.max((v.ernst - evaluate_exact(id, x, y)?).norm());
        }
        results.push(check_row(&mut t, &format!("error_vs_{}", id.name()), err, tol.exact));
    }
    let small_norm = field.solved().filter(|(_, _, v)| v.diagnostics.small_norm_flag).count();
    let passed_count = results.iter().filter(|&&r| r).count();
    let mut summary = vec![
        format!("{passed_count} of {} checks pass", results.len()),
        format!("small-norm certificate at {small_norm} of {} points", field.solved().count()),
    ];
    summary.extend(failure_lines(&field));
    Ok(Report {
        passed: passed_count == results.len(),
        summary,
        table: t,
    })
}

fn run_convergence(cfg: &RunConfig) -> anyhow::Result<Report> {
    let id = cfg.exact().context("no closed-form solution for this data")?;
    let data = ernst_data(cfg)?;
    let config = grid(cfg)?;
    let mut t = Table::new(&["nodes_per_loop", "max_error", "failures"]);
    let mut errors = Vec::new();
    let mut failed = 0;
    for &n in &cfg.solver.convergence_nodes {
        let field = solve_grid(&config, &data, &contours(cfg, n)?);
        let mut err: f64 = 0.0;
        for (x, y, v) in field.solved() {
            err = err.max((v.ernst - evaluate_exact(id, x, y)?).norm());
        }
        failed += field.failures.len();
        t.push(vec![Cell::Int(n as i64), err.into(), Cell::Int(field.failures.len() as i64)]);
        errors.push(err);
    }
    let floor = 1e-10;
    let decreasing = errors.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    Ok(Report {
        passed: decreasing && failed == 0,
        summary: vec![format!(
            "{} against {}: errors {:?}",
            if decreasing { "converging" } else { "not converging" },
            id.name(),
            errors
        )],
        table: t,
    })
}

fn run_boundary(cfg: &RunConfig) -> anyhow::Result<Report> {
    let linear = cfg.data.x.is_linear();
    let data = if linear { linear_data(cfg)? } else { ernst_data(cfg)? };
    let cs = contours(cfg, cfg.solver.nodes_per_loop)?;
    let field = |x: f64, y: f64| -> goursat_ernst::Result<C64> {
        if linear {
            Ok(C64::new(abel_solution(x, y, &data)?, 0.0))
        } else {
            Ok(solve_point(x, y, &data, &cs)?.ernst)
        }
    };
    let tol = cfg.solver.tolerances.boundary_limit;
    let mut t = Table::new(&[
        "edge",
        "coordinate",
        "re_predicted",
        "im_predicted",
        "re_extrapolated",
        "im_extrapolated",
        "abs_error",
        "reliable",
        "outside_theorem",
    ]);
    let mut passed = true;
    for (edge, name) in [(Edge::X0, "x0"), (Edge::Y0, "y0")] {
        for c in [0.1, 0.3, 0.5] {
            let r = boundary_limit_report(edge, c, &data, 0.01, field)?;
            passed &= r.abs_error <= tol;
            t.push(vec![
                name.into(),
                c.into(),
                r.predicted.re.into(),
                r.predicted.im.into(),
                r.extrapolated.re.into(),
                r.extrapolated.im.into(),
                r.abs_error.into(),
                Cell::Text(r.reliable.to_string()),
                Cell::Text(r.outside_theorem.to_string()),
            ]);
        }
    }
    Ok(Report {
        passed,
        summary: vec![format!(
            "boundary limits {} within {tol:e}",
            if passed { "agree" } else { "disagree" }
        )],
        table: t,
    })
}

fn run_linear(cfg: &RunConfig) -> anyhow::Result<Report> {
    let data = linear_data(cfg)?;
    let config = grid(cfg)?;
    let cs = contours(cfg, cfg.solver.nodes_per_loop)?;
    let abel = solve_linear_grid(LinearRoute::Abel, &config, &data, &cs);
    let rh = solve_linear_grid(LinearRoute::ScalarRh, &config, &data, &cs);
    let mut t = Table::new(&["x", "y", "v_abel", "v_rh", "difference"]);
    let mut worst: f64 = 0.0;
    for (j, &y) in abel.ys.iter().enumerate() {
        for (i, &x) in abel.xs.iter().enumerate() {
            let k = j * abel.xs.len() + i;
            if let (Some(a), Some(r)) = (abel.values[k], rh.values[k]) {
                worst = worst.max((a - r).abs());
                t.push(vec![x.into(), y.into(), a.into(), r.into(), (a - r).abs().into()]);
            }
        }
    }
    let tol = cfg.solver.tolerances.linear_routes;
    let mut summary = vec![format!("Abel and scalar RH routes differ by at most {worst:e} (tol {tol:e})")];
    summary.extend(
        abel.failures
            .iter()
            .chain(&rh.failures)
            .map(|(x, y, m)| format!("failed at ({x}, {y}): {m}")),
    );
    let passed = worst <= tol && abel.failures.is_empty() && rh.failures.is_empty();
    Ok(Report { passed, summary, table: t })
}

fn run(args: &Args) -> Result<bool, Failure> {
    let cfg = build_config(args).map_err(Failure::Config)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    let report = match cfg.mode {
        Mode::Solve => run_solve(&cfg),
        Mode::Verify => run_verify(&cfg),
        Mode::Convergence => run_convergence(&cfg),
        Mode::Boundary => run_boundary(&cfg),
        Mode::Linear => run_linear(&cfg),
    }
    .map_err(Failure::Run)?;
    for line in &report.summary {
        eprintln!("{line}");
    }
    let text = report.table.render(cfg.output.format).map_err(Failure::Run)?;
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Run)?,
        None => print!("{text}"),
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
    }
}
