//! Graded partitions t_i = T (i/N)^r of [0, T].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::VariableOrder;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    horizon: f64,
    grading: f64,
    nodes: Vec<f64>,
    steps: Vec<f64>,
}

/// Builds the mesh t_i = T (i/N)^r, 0 ≤ i ≤ N. `r = 1` is the uniform partition.
///
/// Each node comes straight from the closed form, so meshes whose sizes
/// divide one another share nodes bit-for-bit.
pub fn make_mesh(horizon: f64, cells: usize, grading: f64) -> Result<Mesh> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::MeshPrecondition(format!("T must be positive, got {horizon}")));
    }
    if cells == 0 {
        return Err(Error::MeshPrecondition("N must be at least 1".into()));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(Error::MeshPrecondition(format!(
            "grading exponent r must satisfy r >= 1, got {grading}"
        )));
    }
    let n = cells as f64;
    let nodes: Vec<f64> = (0..=cells)
        .map(|i| {
            if i == cells {
                horizon
            } else if grading == 1.0 {
                horizon * (i as f64 / n)
            } else {
                horizon * (i as f64 / n).powf(grading)
            }
        })
        .collect();
    let steps = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(Mesh {
        horizon,
        grading,
        nodes,
        steps,
    })
}

impl Mesh {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of cells N.
    pub fn cells(&self) -> usize {
        self.steps.len()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == 1.0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// τ_i = t_i − t_{i−1} for 1 ≤ i ≤ N.
    #[inline]
    pub fn step(&self, i: usize) -> f64 {
        self.steps[i - 1]
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().copied().fold(0.0, f64::max)
    }

    /// The a-priori step bound rT/N.
    pub fn step_bound(&self) -> f64 {
        self.grading * self.horizon / self.cells() as f64
    }

    /// Index i ≥ 1 of the cell [t_{i−1}, t_i] containing t (clamped to [1, N]).
    pub fn locate(&self, t: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x < t);
        idx.clamp(1, self.cells())
    }
}

/// The three regimes of the error analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCase {
    /// α(0) = 1, α′(0) = 0, uniform mesh.
    I,
    /// α(0) < 1, graded mesh with r = 1/α(0).
    II,
    /// α(0) < 1, uniform mesh.
    III,
}

impl fmt::Display for ErrorCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorCase::I => "I",
            ErrorCase::II => "II",
            ErrorCase::III => "III",
        };
        f.write_str(s)
    }
}

impl FromStr for ErrorCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(ErrorCase::I),
            "II" | "ii" | "2" => Ok(ErrorCase::II),
            "III" | "iii" | "3" => Ok(ErrorCase::III),
            other => Err(Error::Domain(format!("unknown case {other:?}; expected I, II or III"))),
        }
    }
}

impl ErrorCase {
    /// Predicted convergence order in the discrete max norm.
    pub fn predicted_rate(&self, alpha0: f64) -> f64 {
        match self {
            ErrorCase::I | ErrorCase::II => 2.0,
            ErrorCase::III => 2.0 * alpha0,
        }
    }
}

/// Mesh grading matched to the regime: r = 1 for I and III, r = 1/α(0) for II.
pub fn grading_for_case(order: &VariableOrder, case: ErrorCase) -> Result<f64> {
    let alpha0 = order.alpha0();
    let mismatch = || Error::CaseMismatch {
        case: case.to_string(),
        alpha0,
    };
    match case {
        ErrorCase::I if alpha0 == 1.0 => Ok(1.0),
        ErrorCase::II if alpha0 < 1.0 => Ok(1.0 / alpha0),
        ErrorCase::III if alpha0 < 1.0 => Ok(1.0),
        _ => Err(mismatch()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{make_sine_order, VariableOrder};

    #[test]
    fn uniform_and_quadratic_nodes() {
        let m = make_mesh(1.0, 4, 1.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);

        let m = make_mesh(1.0, 4, 2.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
        assert_eq!(m.max_step(), 7.0 / 16.0);
        assert!(m.max_step() <= m.step_bound());
        assert_eq!(m.step_bound(), 0.5);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(make_mesh(1.0, 4, 0.5), Err(Error::MeshPrecondition(_))));
        assert!(matches!(make_mesh(1.0, 0, 1.0), Err(Error::MeshPrecondition(_))));
        assert!(matches!(make_mesh(-1.0, 4, 1.0), Err(Error::MeshPrecondition(_))));
    }

    #[test]
    fn nested_meshes_share_nodes() {
        for r in [1.0, 1.0 / 0.6, 2.5] {
            let fine = make_mesh(1.0, 1440, r).unwrap();
            for n in [48usize, 72, 96, 120] {
                let coarse = make_mesh(1.0, n, r).unwrap();
                let k = 1440 / n;
                for i in 0..=n {
                    assert!((coarse.node(i) - fine.node(i * k)).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn locate_cells() {
        let m = make_mesh(1.0, 4, 1.0).unwrap();
        assert_eq!(m.locate(0.0), 1);
        assert_eq!(m.locate(0.1), 1);
        assert_eq!(m.locate(0.25), 1);
        assert_eq!(m.locate(0.26), 2);
        assert_eq!(m.locate(1.0), 4);
    }

    #[test]
    fn grading_by_case() {
        let o = make_sine_order(0.6, 0.1).unwrap();
        assert!((grading_for_case(&o, ErrorCase::II).unwrap() - 1.0 / 0.6).abs() < 1e-15);
        let o1 = make_sine_order(1.0, 0.1).unwrap();
        assert_eq!(grading_for_case(&o1, ErrorCase::I).unwrap(), 1.0);
        let o4 = VariableOrder::constant(0.4, 1.0).unwrap();
        assert_eq!(grading_for_case(&o4, ErrorCase::III).unwrap(), 1.0);
        assert!(matches!(
            grading_for_case(&o1, ErrorCase::II),
            Err(Error::CaseMismatch { .. })
        ));
        assert!(grading_for_case(&o4, ErrorCase::I).is_err());
    }

    #[test]
    fn case_parsing_and_prediction() {
        assert_eq!("II".parse::<ErrorCase>().unwrap(), ErrorCase::II);
        assert!("IV".parse::<ErrorCase>().is_err());
        assert_eq!(ErrorCase::III.predicted_rate(0.4), 0.8);
        assert_eq!(ErrorCase::II.predicted_rate(0.4), 2.0);
    }
}
