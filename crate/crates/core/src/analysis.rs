//! Convergence studies, rate fitting and the initial-layer exponent.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{grading_for_case, make_mesh, ErrorCase};
use crate::quadrature::QuadratureRule;
use crate::solver::{solve_with, Problem, Solution, SolveOptions};

pub const DEFAULT_N_LIST: [usize; 4] = [48, 72, 96, 120];
pub const DEFAULT_REF_N: usize = 1440;

/// κ_j = ln(e_j / e_{j+1}) / ln(N_{j+1} / N_j).
pub fn fit_rate(errors: &[f64], ns: &[usize]) -> Result<Vec<f64>> {
    if errors.len() != ns.len() || errors.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two (N, error) pairs of equal length, got {} errors and {} sizes",
            errors.len(),
            ns.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::Degenerate(format!("errors must be positive and finite, got {e}")));
    }
    if ns.windows(2).any(|w| w[0] == w[1] || w[0] == 0) {
        return Err(Error::Degenerate("mesh sizes must be distinct and positive".into()));
    }
    Ok(errors
        .windows(2)
        .zip(ns.windows(2))
        .map(|(e, n)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect())
}

/// max_i |coarse(t_i) − reference(t_{i·k})| over the coarse nodes, k = N_ref/N.
pub fn nodal_error(coarse: &Solution, reference: &Solution) -> Result<f64> {
    let n = coarse.mesh().cells();
    let m = reference.mesh().cells();
    if n == 0 || m % n != 0 {
        return Err(Error::MeshPrecondition(format!("N = {n} does not divide the reference N = {m}")));
    }
    let k = m / n;
    let cv = coarse.values();
    let rv = reference.values();
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let (tc, tr) = (coarse.mesh().node(i), reference.mesh().node(i * k));
        if (tc - tr).abs() > 1e-12 * (1.0 + tr.abs()) {
            return Err(Error::MeshPrecondition(format!(
                "coarse node {i} at {tc} is not a reference node ({tr})"
            )));
        }
        worst = worst.max((cv[i] - rv[i * k]).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub id: String,
    pub case: ErrorCase,
    pub alpha0: f64,
    pub grading: f64,
    pub n_list: Vec<usize>,
    pub ref_n: usize,
    pub errors: Vec<f64>,
    /// rates[j] is measured between n_list[j] and n_list[j + 1].
    pub rates: Vec<f64>,
    pub predicted_rate: f64,
    pub max_newton_iterations: usize,
}

impl ConvergenceReport {
    pub fn final_rate(&self) -> Option<f64> {
        self.rates.last().copied()
    }

    /// Columns N, error, rate; the first row has an empty rate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,error,rate\n");
        for (j, (&n, &e)) in self.n_list.iter().zip(&self.errors).enumerate() {
            let rate = if j == 0 { String::new() } else { format!("{:.16e}", self.rates[j - 1]) };
            let _ = writeln!(out, "{n},{e:.16e},{rate}");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}  case {}  alpha(0) = {}  r = {:.6}  reference N = {}",
            self.id, self.case, self.alpha0, self.grading, self.ref_n
        );
        let _ = writeln!(out, "{:>6}  {:>12}  {:>6}", "N", "error", "rate");
        for (j, (&n, &e)) in self.n_list.iter().zip(&self.errors).enumerate() {
            let rate = if j == 0 { "-".to_string() } else { format!("{:.2}", self.rates[j - 1]) };
            let _ = writeln!(out, "{n:>6}  {e:>12.2e}  {rate:>6}");
        }
        let _ = writeln!(out, "predicted rate {:.2}", self.predicted_rate);
        out
    }
}

/// Solves at the reference resolution and at every N in `n_list` on meshes
/// graded for `case`, and reports nodal errors and successive rates.
pub fn run_convergence(
    id: &str,
    problem: &Problem,
    case: ErrorCase,
    n_list: &[usize],
    ref_n: usize,
    rule: &QuadratureRule,
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    let grading = grading_for_case(&problem.order, case)?;
    check_nesting(n_list, ref_n)?;
    let reference = solve_with(problem, &make_mesh(problem.horizon, ref_n, grading)?, rule, opts)?;
    let runs = n_list
        .iter()
        .map(|&n| solve_with(problem, &make_mesh(problem.horizon, n, grading)?, rule, opts))
        .collect::<Result<Vec<_>>>()?;
    report_from_solutions(id, problem, case, &runs, &reference)
}

/// Every N must be positive, strictly increasing and divide ref_N.
pub fn check_nesting(n_list: &[usize], ref_n: usize) -> Result<()> {
    if n_list.len() < 2 {
        return Err(Error::InsufficientData("a convergence study needs at least two N".into()));
    }
    for &n in n_list {
        if n == 0 || ref_n % n != 0 || n >= ref_n {
            return Err(Error::MeshPrecondition(format!(
                "N = {n} must be a proper divisor of the reference N = {ref_n}"
            )));
        }
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::MeshPrecondition("N list must be strictly increasing".into()));
    }
    Ok(())
}

/// Builds the report from already computed coarse solutions and reference.
pub fn report_from_solutions(
    id: &str,
    problem: &Problem,
    case: ErrorCase,
    runs: &[Solution],
    reference: &Solution,
) -> Result<ConvergenceReport> {
    let n_list: Vec<usize> = runs.iter().map(|s| s.mesh().cells()).collect();
    let errors = runs
        .iter()
        .map(|s| nodal_error(s, reference))
        .collect::<Result<Vec<_>>>()?;
    let rates = fit_rate(&errors, &n_list)?;
    let alpha0 = problem.order.alpha0();
    let max_newton_iterations = runs
        .iter()
        .chain(std::iter::once(reference))
        .map(Solution::max_newton_iterations)
        .max()
        .unwrap_or(0);
    Ok(ConvergenceReport {
        id: id.to_string(),
        case,
        alpha0,
        grading: reference.mesh().grading(),
        n_list,
        ref_n: reference.mesh().cells(),
        errors,
        rates,
        predicted_rate: case.predicted_rate(alpha0),
        max_newton_iterations,
    })
}

/// Fitted exponent β in U′(t) ~ t^β near t = 0.
///
/// Uses the difference quotients (U_{i+1} − U_i)/τ_{i+1} at cell midpoints
/// over the first tenth of the cells, skipping the first cell, and returns
/// the least-squares slope of their logarithms against ln t.
pub fn singularity_exponent(solution: &Solution) -> Result<f64> {
    let mesh = solution.mesh();
    let v = solution.values();
    let window = mesh.cells().div_ceil(10);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 2..=window {
        let q = (v[i] - v[i - 1]) / mesh.step(i);
        let mid = 0.5 * (mesh.node(i) + mesh.node(i - 1));
        if q.abs() > 0.0 && q.is_finite() && mid > 0.0 {
            xs.push(mid.ln());
            ys.push(q.abs().ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs at least 8 usable nodes, found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("exponent fit abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}
