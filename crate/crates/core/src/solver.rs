//! Node-by-node Newton march for the collocation equations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, AssemblyOptions, WeightTable};
use crate::error::{Error, Result};
use crate::kernel::{initial_coefficient, ks_from_parts};
use crate::mesh::Mesh;
use crate::order::VariableOrder;
use crate::quadrature::QuadratureRule;
use crate::specialfns::gamma_pos;

/// The nonlinearity f(u, t) with its u-derivative.
pub trait RightHandSide: Send + Sync {
    fn f(&self, u: f64, t: f64) -> f64;
    fn df_du(&self, u: f64, t: f64) -> f64;

    fn describe(&self) -> String {
        "custom".into()
    }
}

/// Right-hand sides addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BuiltinRhs {
    Zero,
    Constant(f64),
    /// f = λ u
    Linear(f64),
    /// f = 0.5 sin⁴ u
    Sin4,
}

impl RightHandSide for BuiltinRhs {
    fn f(&self, u: f64, _t: f64) -> f64 {
        match *self {
            BuiltinRhs::Zero => 0.0,
            BuiltinRhs::Constant(c) => c,
            BuiltinRhs::Linear(l) => l * u,
            BuiltinRhs::Sin4 => 0.5 * u.sin().powi(4),
        }
    }

    fn df_du(&self, u: f64, _t: f64) -> f64 {
        match *self {
            BuiltinRhs::Zero | BuiltinRhs::Constant(_) => 0.0,
            BuiltinRhs::Linear(l) => l,
            BuiltinRhs::Sin4 => 2.0 * u.sin().powi(3) * u.cos(),
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BuiltinRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinRhs::Zero => write!(f, "zero"),
            BuiltinRhs::Constant(c) => write!(f, "constant {c}"),
            BuiltinRhs::Linear(l) => write!(f, "linear {l}"),
            BuiltinRhs::Sin4 => write!(f, "sin4"),
        }
    }
}

impl FromStr for BuiltinRhs {
    type Err = Error;

    /// Accepts `zero`, `constant c`, `linear λ`, `sin4`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let name = parts.next().unwrap_or("");
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(Error::Domain(format!("unrecognised right-hand side {s:?}")));
        }
        let number = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::Domain(format!("{name:?} needs a numeric parameter")))?;
            let v: f64 = a
                .parse()
                .map_err(|_| Error::Domain(format!("bad number {a:?} in {s:?}")))?;
            if !v.is_finite() {
                return Err(Error::Domain(format!("parameter must be finite in {s:?}")));
            }
            Ok(v)
        };
        match (name, arg) {
            ("zero", None) => Ok(BuiltinRhs::Zero),
            ("sin4", None) => Ok(BuiltinRhs::Sin4),
            ("constant", a) => Ok(BuiltinRhs::Constant(number(a)?)),
            ("linear", a) => Ok(BuiltinRhs::Linear(number(a)?)),
            _ => Err(Error::Domain(format!(
                "unrecognised right-hand side {s:?}; expected zero, constant c, linear l or sin4"
            ))),
        }
    }
}

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A right-hand side from a pair of closures.
#[derive(Clone)]
pub struct ClosureRhs {
    f: Fn2,
    df: Fn2,
}

impl ClosureRhs {
    pub fn new(f: Fn2, df: Fn2) -> Self {
        Self { f, df }
    }
}

impl RightHandSide for ClosureRhs {
    fn f(&self, u: f64, t: f64) -> f64 {
        (self.f)(u, t)
    }

    fn df_du(&self, u: f64, t: f64) -> f64 {
        (self.df)(u, t)
    }
}

#[derive(Clone)]
pub struct Problem {
    pub rhs: Arc<dyn RightHandSide>,
    pub u0: f64,
    pub horizon: f64,
    pub order: VariableOrder,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("rhs", &self.rhs.describe())
            .field("u0", &self.u0)
            .field("horizon", &self.horizon)
            .field("order", &self.order)
            .finish()
    }
}

impl Problem {
    pub fn new(rhs: Arc<dyn RightHandSide>, u0: f64, horizon: f64, order: VariableOrder) -> Result<Self> {
        if !u0.is_finite() {
            return Err(Error::Domain(format!("u0 must be finite, got {u0}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("T must be positive, got {horizon}")));
        }
        if horizon > order.horizon() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "T = {horizon} exceeds the order's horizon {}",
                order.horizon()
            )));
        }
        Ok(Self { rhs, u0, horizon, order })
    }

    pub fn builtin(rhs: BuiltinRhs, u0: f64, horizon: f64, order: VariableOrder) -> Result<Self> {
        Self::new(Arc::new(rhs), u0, horizon, order)
    }

    /// Largest |df_du − central difference of f| over a grid of `samples`
    /// points in [u_lo, u_hi] × [0, T].
    pub fn derivative_consistency(&self, u_lo: f64, u_hi: f64, samples: usize) -> f64 {
        let samples = samples.max(2);
        let mut worst: f64 = 0.0;
        for a in 0..samples {
            let u = u_lo + (u_hi - u_lo) * a as f64 / (samples - 1) as f64;
            for b in 0..samples {
                let t = self.horizon * b as f64 / (samples - 1) as f64;
                let h = 1e-6 * (1.0 + u.abs());
                let fd = (self.rhs.f(u + h, t) - self.rhs.f(u - h, t)) / (2.0 * h);
                worst = worst.max((fd - self.rhs.df_du(u, t)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Halve the step until |g| decreases.
    pub damping: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            damping: false,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Domain(format!("Newton tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("Newton max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// How ∫ f(U(s), s)(t_n − s)^{α(t_n)−1} ds / Γ(α(t_n)) is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FTerm {
    /// Product integration: f interpolated linearly, weight integrated exactly.
    #[default]
    Moments,
    /// f(U(s), s) sampled at the quadrature points of every cell.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub newton: NewtonConfig,
    pub f_term: FTerm,
    pub assembly: AssemblyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    #[serde(skip)]
    mesh: Mesh,
    values: Vec<f64>,
    newton_iterations: Vec<usize>,
}

impl Solution {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// U(t_i), i = 0..=N.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Newton iterations per node; entry 0 (the initial value) is 0.
    pub fn newton_iterations(&self) -> &[usize] {
        &self.newton_iterations
    }

    pub fn max_newton_iterations(&self) -> usize {
        self.newton_iterations.iter().copied().max().unwrap_or(0)
    }

    /// The piecewise-linear interpolant, constant beyond [0, T].
    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.mesh.nodes();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.mesh.horizon() {
            return *self.values.last().unwrap();
        }
        let i = self.mesh.locate(t);
        if t == nodes[i] {
            return self.values[i];
        }
        let theta = (t - nodes[i - 1]) / self.mesh.step(i);
        self.values[i - 1] + (self.values[i] - self.values[i - 1]) * theta
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Everything about row n that does not depend on U(t_n).
struct RowKnown {
    known: f64,
    h_nn: f64,
    w_nn: f64,
}

fn row_known_moments(problem: &Problem, weights: &WeightTable, values: &[f64], fvals: &[f64], n: usize) -> RowKnown {
    let tn = weights.mesh().node(n);
    let known = weights.history_known(n, values)
        + weights.moments_known(n, fvals)
        + initial_coefficient(&problem.order, tn, problem.u0);
    RowKnown {
        known,
        h_nn: weights.h(n, n),
        w_nn: weights.moments(n, n).1,
    }
}

/// f-term over cells 1..n−1 by direct quadrature of f(U(s), s).
fn quadrature_f_known(problem: &Problem, weights: &WeightTable, rule: &QuadratureRule, values: &[f64], n: usize) -> f64 {
    let mesh = weights.mesh();
    let tn = mesh.node(n);
    let alpha = weights.row_alpha(n);
    let mut acc = 0.0;
    for j in 1..n {
        let (l, r) = (values[j - 1], values[j]);
        let left = mesh.node(j - 1);
        let tau = mesh.step(j);
        acc += rule.integrate(0.0, 1.0, |x| {
            let s = left + tau * x;
            let u = l + (r - l) * x;
            problem.rhs.f(u, s) * (tn - s).powf(alpha - 1.0)
        }) * tau;
    }
    acc * weights.row_rgamma(n)
}

/// f-term on the last cell as a function of x = U(t_n), with its x-derivative.
fn quadrature_f_diag(problem: &Problem, weights: &WeightTable, rule: &QuadratureRule, prev: f64, x: f64, n: usize) -> (f64, f64) {
    let mesh = weights.mesh();
    let tn = mesh.node(n);
    let tau = mesh.step(n);
    let alpha = weights.row_alpha(n);
    let rg = weights.row_rgamma(n);
    let val = rule.integrate_power_weight(tau, alpha, |v| {
        let theta = 1.0 - v / tau;
        problem.rhs.f(prev + (x - prev) * theta, tn - v)
    });
    let der = rule.integrate_power_weight(tau, alpha, |v| {
        let theta = 1.0 - v / tau;
        problem.rhs.df_du(prev + (x - prev) * theta, tn - v) * theta
    });
    (val * rg, der * rg)
}

fn newton<G: Fn(f64) -> (f64, f64)>(g: G, x0: f64, n: usize, cfg: &NewtonConfig) -> Result<(f64, usize)> {
    let mut x = x0;
    let (mut gx, mut dg) = g(x);
    for it in 1..=cfg.max_iter {
        if !(dg.abs() >= 1e-14) {
            return Err(Error::SingularJacobian { node: n, derivative: dg });
        }
        let dx = gx / dg;
        let mut lambda = 1.0;
        let mut next = x - dx;
        let (mut gn, mut dn) = g(next);
        if cfg.damping {
            let mut halvings = 0;
            while !(gn.abs() < gx.abs()) && halvings < 30 {
                lambda *= 0.5;
                next = x - lambda * dx;
                (gn, dn) = g(next);
                halvings += 1;
            }
        }
        if !next.is_finite() || !gn.is_finite() {
            return Err(Error::NewtonDiverged {
                node: n,
                iterations: it,
                residual: gn,
            });
        }
        let step = (next - x).abs();
        x = next;
        gx = gn;
        dg = dn;
        if step <= cfg.tol * (1.0 + x.abs()) {
            return Ok((x, it));
        }
    }
    Err(Error::NewtonDiverged {
        node: n,
        iterations: cfg.max_iter,
        residual: gx,
    })
}

/// Solves the collocation equation at node n given U(t_0..t_{n−1}).
///
/// Returns U(t_n) and the Newton iteration count.
pub fn solve_node(
    problem: &Problem,
    weights: &WeightTable,
    values: &[f64],
    n: usize,
    cfg: &NewtonConfig,
) -> Result<(f64, usize)> {
    if n == 0 || n > weights.cells() || values.len() < n {
        return Err(Error::Index(format!(
            "node {n} needs U(t_0..t_{}) and 1 <= n <= {}",
            n.saturating_sub(1),
            weights.cells()
        )));
    }
    let mesh = weights.mesh();
    let fvals: Vec<f64> = (0..n).map(|i| problem.rhs.f(values[i], mesh.node(i))).collect();
    let mut padded = fvals;
    padded.push(0.0);
    let row = row_known_moments(problem, weights, &values[..n], &padded, n);
    node_newton(problem, mesh.node(n), &row, values[n - 1], n, cfg)
}

fn node_newton(problem: &Problem, tn: f64, row: &RowKnown, guess: f64, n: usize, cfg: &NewtonConfig) -> Result<(f64, usize)> {
    let rhs = &problem.rhs;
    let g = |x: f64| {
        (
            x - row.h_nn * x - row.w_nn * rhs.f(x, tn) - row.known,
            1.0 - row.h_nn - row.w_nn * rhs.df_du(x, tn),
        )
    };
    newton(g, guess, n, cfg)
}

/// Marches n = 1..=N on a prebuilt weight table.
pub fn solve_on(
    problem: &Problem,
    weights: &WeightTable,
    rule: &QuadratureRule,
    f_term: FTerm,
    cfg: &NewtonConfig,
) -> Result<Solution> {
    cfg.validate()?;
    let mesh = weights.mesh().clone();
    if (mesh.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon {
        return Err(Error::Domain(format!(
            "mesh horizon {} differs from the problem's T = {}",
            mesh.horizon(),
            problem.horizon
        )));
    }
    let cells = mesh.cells();
    let mut values = Vec::with_capacity(cells + 1);
    let mut fvals = Vec::with_capacity(cells + 1);
    let mut iterations = Vec::with_capacity(cells + 1);
    values.push(problem.u0);
    fvals.push(problem.rhs.f(problem.u0, 0.0));
    iterations.push(0);
    for n in 1..=cells {
        let tn = mesh.node(n);
        let (x, its) = match f_term {
            FTerm::Moments => {
                fvals.push(0.0);
                let row = row_known_moments(problem, weights, &values, &fvals, n);
                fvals.pop();
                node_newton(problem, tn, &row, values[n - 1], n, cfg)?
            }
            FTerm::Quadrature => {
                let prev = values[n - 1];
                let known = weights.history_known(n, &values)
                    + quadrature_f_known(problem, weights, rule, &values, n)
                    + initial_coefficient(&problem.order, tn, problem.u0);
                let h_nn = weights.h(n, n);
                let g = |x: f64| {
                    let (fv, fd) = quadrature_f_diag(problem, weights, rule, prev, x, n);
                    (x - h_nn * x - fv - known, 1.0 - h_nn - fd)
                };
                newton(g, prev, n, cfg)?
            }
        };
        values.push(x);
        fvals.push(problem.rhs.f(x, tn));
        iterations.push(its);
    }
    Ok(Solution {
        mesh,
        values,
        newton_iterations: iterations,
    })
}

/// Assembles the weights and marches with default options.
pub fn solve(problem: &Problem, mesh: &Mesh, rule: &QuadratureRule, cfg: &NewtonConfig) -> Result<Solution> {
    solve_with(
        problem,
        mesh,
        rule,
        &SolveOptions {
            newton: *cfg,
            ..Default::default()
        },
    )
}

pub fn solve_with(problem: &Problem, mesh: &Mesh, rule: &QuadratureRule, opts: &SolveOptions) -> Result<Solution> {
    opts.newton.validate()?;
    let weights = assemble(&problem.order, mesh, rule, opts.assembly)?;
    solve_on(problem, &weights, rule, opts.f_term, &opts.newton)
}

/// Splits [a, b] (b < t) into pieces no longer than their distance to t.
fn refine_toward(a: f64, b: f64, t: f64, out: &mut Vec<(f64, f64)>) {
    let mut hi = b;
    while hi > a {
        let lo = (hi - (t - hi)).max(a);
        out.push((lo, hi));
        hi = lo;
    }
}

/// Geometric pieces [b 2^{−k−1}, b 2^{−k}] toward 0.
fn refine_from_zero(b: f64, out: &mut Vec<(f64, f64)>) {
    const LEVELS: i32 = 48;
    out.push((0.0, b * 0.5f64.powi(LEVELS)));
    for k in (0..LEVELS).rev() {
        out.push((b * 0.5f64.powi(k + 1), b * 0.5f64.powi(k)));
    }
}

/// VIE residual of an arbitrary function u at t ∈ (0, T]:
///
/// u(t) − ∫₀ᵗ K_s(t, s) u(s) ds − u0 t^{α(t)−α(0)}/Γ(1 + α(t) − α(0))
///      − (1/Γ(α(t))) ∫₀ᵗ f(u(s), s)(t − s)^{α(t)−1} ds.
///
/// `breaks` are points where u may have kinks (mesh nodes); pieces are
/// refined geometrically toward both 0 and t.
pub fn vie_residual_with(
    problem: &Problem,
    u: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    t: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !(t > 0.0) || t > problem.horizon * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("residual needs t in (0, T], got {t}")));
    }
    let order = &problem.order;
    let alpha_t = order.eval(t);
    let constant = order.is_constant();

    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < t).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.insert(0, 0.0);
    cuts.push(t);

    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == t {
            continue;
        }
        if a == 0.0 {
            let mut zero = Vec::new();
            refine_from_zero(b, &mut zero);
            for (lo, hi) in zero {
                refine_toward(lo, hi, t, &mut pieces);
            }
        } else {
            refine_toward(a, b, t, &mut pieces);
        }
    }
    let last_a = cuts[cuts.len() - 2];

    let mut ks_int = 0.0;
    let mut f_int = 0.0;
    let mut add_regular = |a: f64, b: f64| {
        let len = b - a;
        if len <= 0.0 {
            return;
        }
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let s = a + len * x;
            let us = u(s);
            let dist = t - s;
            if !constant {
                ks_int += w * len * ks_from_parts(alpha_t, order.eval(s), order.deriv(s), dist) * us;
            }
            f_int += w * len * problem.rhs.f(us, s) * dist.powf(alpha_t - 1.0);
        }
    };
    for &(a, b) in &pieces {
        add_regular(a, b);
    }

    // Piece ending at t: refine toward 0 first when it starts there.
    let mut tail = Vec::new();
    if last_a == 0.0 {
        refine_from_zero(t, &mut tail);
        let (a, b) = tail.pop().unwrap();
        let mut inner = Vec::new();
        for (lo, hi) in tail.drain(..) {
            refine_toward(lo, hi, t, &mut inner);
        }
        for (lo, hi) in inner {
            add_regular(lo, hi);
        }
        tail.push((a, b));
    } else {
        tail.push((last_a, t));
    }
    let (a, _) = tail[0];
    let len = t - a;
    if !constant {
        for (&y, &w) in rule.nodes().iter().zip(rule.weights()) {
            let y3 = y * y * y;
            let s = t - len * y3;
            let jac = 3.0 * y * y * len;
            ks_int += w * jac * ks_from_parts(alpha_t, order.eval(s), order.deriv(s), len * y3) * u(s);
        }
    }
    f_int += rule.integrate_power_weight(len, alpha_t, |v| problem.rhs.f(u(t - v), t - v));

    Ok(u(t) - ks_int - initial_coefficient(order, t, problem.u0) - f_int / gamma_pos(alpha_t))
}

/// VIE residual of the piecewise-linear solution at t.
pub fn vie_residual(problem: &Problem, solution: &Solution, t: f64, rule: &QuadratureRule) -> Result<f64> {
    let u = |s: f64| solution.eval(s);
    vie_residual_with(problem, &u, solution.mesh().nodes(), t, rule)
}
