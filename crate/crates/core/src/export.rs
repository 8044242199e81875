//! CSV and JSON renderings. Floats carry 17 significant digits, lines end in LF.

use std::fmt::Write as _;

use serde::Serialize;

use crate::assembly::WeightTable;
use crate::solver::{Problem, Solution};

/// Columns t, U.
pub fn solution_csv(solution: &Solution) -> String {
    let mut out = String::from("t,U\n");
    for (t, u) in solution.mesh().nodes().iter().zip(solution.values()) {
        let _ = writeln!(out, "{t:.16e},{u:.16e}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub rhs: String,
    pub u0: f64,
    pub horizon: f64,
    pub alpha0: f64,
    pub cells: usize,
    pub grading: f64,
    pub u_final: f64,
    pub max_abs_u: f64,
    pub newton_iterations: Vec<usize>,
    pub max_newton_iterations: usize,
    pub total_newton_iterations: usize,
}

pub fn solution_summary(problem: &Problem, solution: &Solution) -> SolutionSummary {
    let its = solution.newton_iterations().to_vec();
    SolutionSummary {
        rhs: problem.rhs.describe(),
        u0: problem.u0,
        horizon: problem.horizon,
        alpha0: problem.order.alpha0(),
        cells: solution.mesh().cells(),
        grading: solution.mesh().grading(),
        u_final: *solution.values().last().unwrap(),
        max_abs_u: solution.max_abs(),
        max_newton_iterations: solution.max_newton_iterations(),
        total_newton_iterations: its.iter().sum(),
        newton_iterations: its,
    }
}

/// Row-major dump n, i, h, wL, wR; the u0 coefficient appears as i = 0
/// with empty moment columns.
pub fn weight_table_csv(table: &WeightTable) -> String {
    let mut out = String::from("n,i,h,wL,wR\n");
    for n in 1..=table.cells() {
        let _ = writeln!(out, "{n},0,{:.16e},,", table.h0(n));
        for i in 1..=n {
            let (l, r) = table.moments(n, i);
            let _ = writeln!(out, "{n},{i},{:.16e},{l:.16e},{r:.16e}", table.h(n, i));
        }
    }
    out
}

/// Columns k, diag, tail of a translation-invariant table, if it is one.
pub fn generating_sequence_csv(table: &WeightTable) -> Option<String> {
    let (diag, tail) = table.generating_sequence()?;
    let mut out = String::from("k,diag,tail\n");
    for (k, (d, t)) in diag.iter().zip(tail).enumerate() {
        let _ = writeln!(out, "{k},{d:.16e},{t:.16e}");
    }
    Some(out)
}
