//! JSON run configuration and bundled presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use varfrac::analysis::{DEFAULT_N_LIST, DEFAULT_REF_N};
use varfrac::mesh::grading_for_case;
use varfrac::order::VariableOrder;
use varfrac::solver::FTerm;
use varfrac::{make_sine_order, BuiltinRhs, ErrorCase, NewtonConfig, Problem, DEFAULT_NODE_COUNT};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub order: OrderSpec,
    pub mesh: MeshSpec,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default)]
    pub newton: NewtonSpec,
    #[serde(default)]
    pub fast_path: bool,
    #[serde(default)]
    pub f_term: FTerm,
    #[serde(default)]
    pub convergence: Option<ConvergenceSpec>,
}

fn default_quad_nodes() -> usize {
    DEFAULT_NODE_COUNT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// "zero", "constant c", "linear l" or "sin4".
    pub f: String,
    pub u0: f64,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum OrderSpec {
    /// α(t) = α(1) + (α(0) − α(1))((1 − t) − sin(2π(1 − t))/(2π)) on [0, 1].
    Sine { alpha0: f64, alpha1: f64 },
    Constant { value: f64 },
    /// α(t) = alpha0 + slope · t
    Linear { alpha0: f64, slope: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(rename = "N")]
    pub cells: usize,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub case: Option<ErrorCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub damping: bool,
}

fn default_tol() -> f64 {
    NewtonConfig::default().tol
}

fn default_max_iter() -> usize {
    NewtonConfig::default().max_iter
}

impl Default for NewtonSpec {
    fn default() -> Self {
        let d = NewtonConfig::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    #[serde(rename = "N_list", default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(rename = "ref_N", default = "default_ref_n")]
    pub ref_n: usize,
}

fn default_n_list() -> Vec<usize> {
    DEFAULT_N_LIST.to_vec()
}

fn default_ref_n() -> usize {
    DEFAULT_REF_N
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            n_list: default_n_list(),
            ref_n: default_ref_n(),
        }
    }
}

pub const PRESETS: [(&str, &str); 8] = [
    ("table1_col1", include_str!("../configs/table1_col1.json")),
    ("table1_col2", include_str!("../configs/table1_col2.json")),
    ("table1_col3", include_str!("../configs/table1_col3.json")),
    ("table2_col1", include_str!("../configs/table2_col1.json")),
    ("table2_col2", include_str!("../configs/table2_col2.json")),
    ("fig1_casei", include_str!("../configs/fig1_casei.json")),
    ("fig1_caseii", include_str!("../configs/fig1_caseii.json")),
    ("fig1_caseiii", include_str!("../configs/fig1_caseiii.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid configuration: {e}"))
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self, String> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| format!("unknown preset {name:?}; available: {}", preset_names().join(", ")))?;
        Self::from_json(text)
    }

    pub fn order(&self) -> varfrac::Result<VariableOrder> {
        match self.order {
            OrderSpec::Sine { alpha0, alpha1 } => make_sine_order(alpha0, alpha1),
            OrderSpec::Constant { value } => VariableOrder::constant(value, self.problem.horizon),
            OrderSpec::Linear { alpha0, slope } => VariableOrder::linear(alpha0, slope, self.problem.horizon),
        }
    }

    pub fn problem(&self) -> varfrac::Result<Problem> {
        let rhs: BuiltinRhs = self.problem.f.parse()?;
        Problem::builtin(rhs, self.problem.u0, self.problem.horizon, self.order()?)
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton.tol,
            max_iter: self.newton.max_iter,
            damping: self.newton.damping,
        }
    }

    /// The explicit `r`, or the grading matched to `case`; uniform if neither is given.
    pub fn grading(&self, order: &VariableOrder) -> varfrac::Result<f64> {
        match (self.mesh.r, self.mesh.case) {
            (Some(_), Some(_)) => Err(varfrac::Error::MeshPrecondition(
                "give either mesh.r or mesh.case, not both".into(),
            )),
            (Some(r), None) => Ok(r),
            (None, Some(case)) => grading_for_case(order, case),
            (None, None) => Ok(1.0),
        }
    }

    /// The regime for a convergence study: the explicit case, or inferred
    /// from α(0) and the grading.
    pub fn case(&self, order: &VariableOrder) -> varfrac::Result<ErrorCase> {
        if let Some(c) = self.mesh.case {
            return Ok(c);
        }
        let r = self.grading(order)?;
        Ok(if order.alpha0() == 1.0 {
            ErrorCase::I
        } else if r == 1.0 {
            ErrorCase::III
        } else {
            ErrorCase::II
        })
    }
}
