mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use varfrac::analysis::{check_nesting, report_from_solutions};
use varfrac::assembly::{assemble, AssemblyOptions};
use varfrac::export::{generating_sequence_csv, solution_csv, solution_summary, weight_table_csv};
use varfrac::solver::{solve_with, SolveOptions};
use varfrac::{gauss_nodes, grading_for_case, make_mesh, Error};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "varfrac", version, about = "Collocation solver for variable-order fractional Cauchy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Bundled configuration: table1_col1..3, table2_col1..2, fig1_casei, fig1_caseii, fig1_caseiii.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Write all artifacts into this directory instead of printing to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Gauss–Legendre nodes per cell [default: 80, or the config's value].
    #[arg(long, global = true, value_name = "INT")]
    quad_nodes: Option<usize>,

    /// Newton step tolerance [default: 1e-10, or the config's value].
    #[arg(long, global = true, value_name = "FLOAT")]
    newton_tol: Option<f64>,

    /// Store translation-invariant history weights (linear order, uniform mesh).
    #[arg(long, global = true)]
    fast_path: bool,

    /// Worker threads for assembly and independent solves.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve on the configured mesh and emit nodal values.
    Solve,
    /// Run the convergence study against a fine reference solution.
    Converge,
    /// Dump the assembled collocation coefficients.
    Coeffs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NewtonDiverged { .. } | Error::SingularJacobian { .. } | Error::NonConvergence { .. } => {
                Failure::Solver(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => RunConfig::from_path(path),
        (None, Some(name)) => RunConfig::preset(name),
        _ => Err("pass exactly one of --config PATH or --preset NAME".to_string()),
    }
    .map_err(Failure::Config)?;
    if let Some(q) = cli.quad_nodes {
        cfg.quad_nodes = q;
    }
    if let Some(t) = cli.newton_tol {
        cfg.newton.tol = t;
    }
    cfg.fast_path |= cli.fast_path;
    if cfg.quad_nodes < 2 {
        return Err(Failure::Config(format!("quad_nodes must be at least 2, got {}", cfg.quad_nodes)));
    }
    cfg.newton().validate()?;
    Ok(cfg)
}

fn options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        newton: cfg.newton(),
        f_term: cfg.f_term,
        assembly: AssemblyOptions {
            fast_path: cfg.fast_path,
            ..Default::default()
        },
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn cmd_solve(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let problem = cfg.problem()?;
    let r = cfg.grading(&problem.order)?;
    let mesh = make_mesh(problem.horizon, cfg.mesh.cells, r)?;
    let rule = gauss_nodes(cfg.quad_nodes)?;
    let start = Instant::now();
    let solution = solve_with(&problem, &mesh, &rule, &options(cfg))?;
    let elapsed = start.elapsed().as_secs_f64();

    let csv = solution_csv(&solution);
    let summary = json!({
        "summary": solution_summary(&problem, &solution),
        "quad_nodes": cfg.quad_nodes,
        "newton_tol": cfg.newton.tol,
        "seconds": elapsed,
    });
    match &cli.out {
        Some(dir) => {
            write_file(dir, "solution.csv", &csv)?;
            write_file(dir, "summary.json", &pretty(&summary))
        }
        None => {
            match cli.format {
                Format::Csv => print!("{csv}"),
                Format::Json => {
                    let full = json!({
                        "summary": summary,
                        "t": mesh.nodes(),
                        "U": solution.values(),
                    });
                    print!("{}", pretty(&full));
                }
            }
            Ok(())
        }
    }
}

fn cmd_converge(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let problem = cfg.problem()?;
    let study = cfg.convergence.clone().unwrap_or_default();
    check_nesting(&study.n_list, study.ref_n)?;
    let case = cfg.case(&problem.order)?;
    let r = grading_for_case(&problem.order, case)?;
    if let Some(explicit) = cfg.mesh.r {
        if explicit != r {
            return Err(Failure::Config(format!(
                "mesh.r = {explicit} disagrees with the grading {r} of case {case}"
            )));
        }
    }
    let rule = gauss_nodes(cfg.quad_nodes)?;
    let opts = options(cfg);

    let mut sizes = study.n_list.clone();
    sizes.push(study.ref_n);
    let start = Instant::now();
    let mut solutions = sizes
        .par_iter()
        .map(|&n| solve_with(&problem, &make_mesh(problem.horizon, n, r)?, &rule, &opts))
        .collect::<varfrac::Result<Vec<_>>>()?;
    let reference = solutions.pop().expect("reference run is always present");
    let id = cli
        .preset
        .clone()
        .unwrap_or_else(|| format!("f = {}, alpha(0) = {}", problem.rhs.describe(), problem.order.alpha0()));
    let report = report_from_solutions(&id, &problem, case, &solutions, &reference)?;
    let elapsed = start.elapsed().as_secs_f64();

    let table = report.to_table();
    let report_json = json!({ "report": report, "seconds": elapsed });
    match &cli.out {
        Some(dir) => {
            write_file(dir, "convergence.csv", &report.to_csv())?;
            write_file(dir, "convergence.json", &pretty(&report_json))?;
            write_file(dir, "convergence.txt", &table)
        }
        None => {
            eprint!("{table}");
            match cli.format {
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => print!("{}", pretty(&report_json)),
            }
            Ok(())
        }
    }
}

fn cmd_coeffs(cli: &Cli, cfg: &RunConfig) -> Outcome {
    let order = cfg.order()?;
    let r = cfg.grading(&order)?;
    let mesh = make_mesh(cfg.problem.horizon, cfg.mesh.cells, r)?;
    let rule = gauss_nodes(cfg.quad_nodes)?;
    let dense = assemble(&order, &mesh, &rule, AssemblyOptions::default())?;
    let applicable = mesh.is_uniform() && order.linear_coefficients().is_some();
    let fast = if cfg.fast_path || applicable {
        Some(assemble(
            &order,
            &mesh,
            &rule,
            AssemblyOptions {
                fast_path: true,
                ..Default::default()
            },
        )?)
    } else {
        None
    };
    let discrepancy = fast.as_ref().map(|f| dense.max_history_discrepancy(f));
    if let Some(d) = discrepancy {
        eprintln!("max |dense - fast| = {d:.3e}");
    }

    let summary = json!({
        "cells": mesh.cells(),
        "grading": r,
        "quad_nodes": cfg.quad_nodes,
        "dense_history_entries": dense.history_storage(),
        "fast_history_entries": fast.as_ref().map(|f| f.history_storage()),
        "max_discrepancy": discrepancy,
    });
    let dense_csv = weight_table_csv(&dense);
    let seq_csv = fast.as_ref().and_then(generating_sequence_csv);
    match &cli.out {
        Some(dir) => {
            write_file(dir, "weights.csv", &dense_csv)?;
            if let Some(s) = &seq_csv {
                write_file(dir, "generating_sequence.csv", s)?;
            }
            write_file(dir, "coeffs.json", &pretty(&summary))
        }
        None => {
            match cli.format {
                Format::Csv => {
                    print!("{dense_csv}");
                    if let Some(s) = &seq_csv {
                        print!("\n{s}");
                    }
                }
                Format::Json => {
                    let rows: Vec<_> = (1..=dense.cells())
                        .map(|n| {
                            let (wl, wr): (Vec<f64>, Vec<f64>) = (1..=n).map(|i| dense.moments(n, i)).unzip();
                            json!({ "n": n, "h0": dense.h0(n), "h": dense.history_row(n), "wL": wl, "wR": wr })
                        })
                        .collect();
                    let seq = fast
                        .as_ref()
                        .and_then(|f| f.generating_sequence())
                        .map(|(d, t)| json!({ "diag": d, "tail": t }));
                    let full = json!({ "summary": summary, "rows": rows, "generating_sequence": seq });
                    print!("{}", pretty(&full));
                }
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start worker pool: {e}")))?;
    }
    let cfg = load(cli)?;
    match cli.command {
        Command::Solve => cmd_solve(cli, &cfg),
        Command::Converge => cmd_converge(cli, &cfg),
        Command::Coeffs => cmd_coeffs(cli, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("varfrac: {f}");
            ExitCode::from(f.code())
        }
    }
}
