use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Γ(x) was requested at a non-positive integer.
    #[error("gamma pole at x = {0}")]
    Pole(f64),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not reach its tolerance within the term budget.
    #[error("series did not converge after {terms} terms (last term {last_term:e})")]
    NonConvergence { terms: usize, last_term: f64 },

    /// Mesh parameters violate `T > 0`, `N >= 1`, `r >= 1`.
    #[error("mesh precondition violated: {0}")]
    MeshPrecondition(String),

    /// Requested error-analysis case disagrees with α(0).
    #[error("case {case} is incompatible with alpha(0) = {alpha0}")]
    CaseMismatch { case: String, alpha0: f64 },

    /// Translation-invariant assembly was requested but does not apply.
    #[error("fast path rejected: {0}")]
    FastPathRejected(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// Newton iteration failed to converge at a mesh node.
    #[error("Newton iteration diverged at node {node} after {iterations} iterations (last residual {residual:e})")]
    NewtonDiverged {
        node: usize,
        iterations: usize,
        residual: f64,
    },

    /// The Newton derivative vanished at a mesh node.
    #[error("singular Jacobian at node {node} (g'(x) = {derivative:e})")]
    SingularJacobian { node: usize, derivative: f64 },

    /// A fit needs more data than was supplied.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Rate fitting hit a zero or non-positive error.
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
