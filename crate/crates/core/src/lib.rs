//! Piecewise-linear collocation for the variable-order fractional ODE
//! D^{α(t)} u = f(u, t), u(0) = u0, recast as a second-kind Volterra
//! integral equation with kernel K(t, s) = (t − s)^{α(t)−α(s)} / Γ(1 + α(t) − α(s)).

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod export;
pub mod kernel;
pub mod mesh;
pub mod order;
pub mod quadrature;
pub mod solver;
pub mod specialfns;

pub use assembly::{assemble, AssemblyOptions, DiagonalRule, WeightTable};
pub use error::{Error, Result};
pub use mesh::{grading_for_case, make_mesh, ErrorCase, Mesh};
pub use order::{make_sine_order, validate_assumption_a, VariableOrder};
pub use quadrature::{gauss_nodes, QuadratureRule, DEFAULT_NODE_COUNT};
pub use solver::{solve, solve_with, BuiltinRhs, NewtonConfig, Problem, RightHandSide, Solution, SolveOptions};
