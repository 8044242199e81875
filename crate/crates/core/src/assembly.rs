//! Collocation coefficients.
//!
//! For a piecewise-linear trial function U with nodal values U_i, the
//! collocation equation at t_n reads
//!
//! ```text
//! U_n = Σ_{i=1}^{n} h[n][i] U_i + h0[n] u0
//!     + Σ_{i=1}^{n} (wL[n][i] f_{i−1} + wR[n][i] f_i)
//!     + u0 t_n^{α(t_n)−α(0)} / Γ(1 + α(t_n) − α(0))
//! ```
//!
//! where `h` are the history weights ∫ K_s(t_n, s) φ_i(s) ds against the hat
//! functions φ_i, and `wL`/`wR` are the exact moments of the two hat halves on
//! cell i against the weak singularity (t_n − s)^{α(t_n)−1} / Γ(α(t_n)).
//!
//! Hat supports split into per-cell pieces: on cell j the right half-hat
//! (peaking at t_j) and left half-hat (peaking at t_{j−1}) contribute
//! `A_j` and `B_j`, giving h[n][i] = A_i + B_{i+1}, h[n][n] = A_n, h0[n] = B_1.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::ks_from_parts;
use crate::mesh::Mesh;
use crate::order::VariableOrder;
use crate::quadrature::QuadratureRule;
use crate::specialfns::gamma_pos;

pub use crate::quadrature::{gauss_nodes, DEFAULT_NODE_COUNT};

/// How the log-singular diagonal cell of the K_s integrals is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagonalRule {
    /// The open rule applied directly on the cell.
    Plain,
    /// The open rule in y with s = t_n − τ_n y^p, which flattens the
    /// logarithm into y^{p−1} ln y.
    Graded(u32),
}

impl Default for DiagonalRule {
    fn default() -> Self {
        DiagonalRule::Graded(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AssemblyOptions {
    /// Store history weights as one generating sequence (linear α, uniform mesh only).
    pub fast_path: bool,
    pub diagonal: DiagonalRule,
}

/// Packed lower-triangular storage for rows n = 1..=N, columns i = 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularTable {
    rows: usize,
    data: Vec<f64>,
}

impl TriangularTable {
    pub fn zeros(rows: usize) -> Self {
        Self {
            rows,
            data: vec![0.0; rows * (rows + 1) / 2],
        }
    }

    #[inline]
    fn offset(n: usize) -> usize {
        n * (n - 1) / 2
    }

    #[inline]
    pub fn get(&self, n: usize, i: usize) -> f64 {
        debug_assert!(1 <= i && i <= n && n <= self.rows);
        self.data[Self::offset(n) + i - 1]
    }

    /// Row n as a slice indexed by i − 1.
    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[Self::offset(n)..Self::offset(n) + n]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for r in rows {
            data.extend(r);
        }
        Self { rows: n, data }
    }
}

/// History weights h[n][i] and the u0 coefficients h0[n].
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryWeights {
    Dense {
        h: TriangularTable,
        /// h0[n − 1]
        h0: Vec<f64>,
    },
    /// h[n][i] = diag[n − i] and h0[n] = tail[n − 1].
    TranslationInvariant { diag: Vec<f64>, tail: Vec<f64> },
}

/// Singular moments wL[n][i], wR[n][i].
#[derive(Debug, Clone, PartialEq)]
pub enum Moments {
    Dense {
        left: TriangularTable,
        right: TriangularTable,
    },
    /// Evaluated from the closed form on request; keeps storage O(N).
    OnDemand,
}

/// All coefficients of the collocation system. Write-once, then read-only.
#[derive(Debug, Clone)]
pub struct WeightTable {
    mesh: Mesh,
    /// α(t_n) for n = 0..=N.
    row_alpha: Vec<f64>,
    /// 1/Γ(α(t_n)) for n = 0..=N (index 0 unused).
    row_rgamma: Vec<f64>,
    history: HistoryWeights,
    moments: Moments,
}

/// Closed-form moments of the two half-hats on a cell against v^{α−1}/Γ(α),
/// where v = t_n − s runs over [a, a + τ].
///
/// Returns `(wL, wR)`: wL multiplies the value at the cell's left node,
/// wR the value at its right node. Differences b^p − a^p are evaluated as
/// a^p · expm1(p · ln1p(τ/a)) to stay accurate on short cells far from t_n.
pub fn hat_moments(alpha: f64, a: f64, tau: f64) -> (f64, f64) {
    let b = a + tau;
    let diff = |p: f64| -> f64 {
        if a == 0.0 {
            b.powf(p)
        } else {
            a.powf(p) * (p * (tau / a).ln_1p()).exp_m1()
        }
    };
    let d0 = diff(alpha) / alpha;
    let d1 = diff(alpha + 1.0) / (alpha + 1.0);
    let rg = 1.0 / gamma_pos(alpha);
    let right = (b * d0 - d1) / tau * rg;
    let left = (d1 - a * d0) / tau * rg;
    (left, right)
}

/// Moments of the half-hats on cell i for collocation row n (1 ≤ i ≤ n ≤ N).
pub fn singular_moments(order: &VariableOrder, mesh: &Mesh, n: usize, i: usize) -> Result<(f64, f64)> {
    if !(1 <= i && i <= n && n <= mesh.cells()) {
        return Err(Error::Index(format!(
            "moments need 1 <= i <= n <= N, got n = {n}, i = {i}, N = {}",
            mesh.cells()
        )));
    }
    let tn = mesh.node(n);
    Ok(hat_moments(order.eval(tn), tn - mesh.node(i), mesh.step(i)))
}

/// α and α′ sampled at every quadrature point of every cell.
struct CellSamples {
    count: usize,
    alpha: Vec<f64>,
    dalpha: Vec<f64>,
}

impl CellSamples {
    fn new(order: &VariableOrder, mesh: &Mesh, rule: &QuadratureRule, cells: usize) -> Self {
        let count = rule.count();
        let mut alpha = Vec::with_capacity(cells * count);
        let mut dalpha = Vec::with_capacity(cells * count);
        for j in 1..=cells {
            let left = mesh.node(j - 1);
            let tau = mesh.step(j);
            for &x in rule.nodes() {
                let s = left + tau * x;
                alpha.push(order.eval(s));
                dalpha.push(order.deriv(s));
            }
        }
        Self { count, alpha, dalpha }
    }
}

/// Per-cell hat integrals (A_j, B_j), j = 1..=n, for collocation row n.
fn cell_integrals(
    order: &VariableOrder,
    mesh: &Mesh,
    rule: &QuadratureRule,
    samples: &CellSamples,
    diagonal: DiagonalRule,
    n: usize,
) -> Vec<(f64, f64)> {
    let tn = mesh.node(n);
    let alpha_n = order.eval(tn);
    let nodes = rule.nodes();
    let weights = rule.weights();
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let tau = mesh.step(j);
        let gap = tn - mesh.node(j);
        let diag = j == n;
        let (mut a, mut b) = (0.0, 0.0);
        match (diag, diagonal) {
            (true, DiagonalRule::Graded(p)) => {
                let p = p.max(1) as i32;
                let left = mesh.node(j - 1);
                for (&y, &w) in nodes.iter().zip(weights) {
                    // x = 1 − y^p, dx = p y^{p−1} dy
                    let yp = y.powi(p);
                    let x = 1.0 - yp;
                    let s = left + tau * x;
                    let jac = p as f64 * y.powi(p - 1);
                    let ks = ks_from_parts(alpha_n, order.eval(s), order.deriv(s), tau * yp);
                    let wk = w * jac * ks;
                    a += wk * x;
                    b += wk * yp;
                }
            }
            _ => {
                let base = (j - 1) * samples.count;
                for (q, (&x, &w)) in nodes.iter().zip(weights).enumerate() {
                    let dist = gap + tau * (1.0 - x);
                    let ks = ks_from_parts(
                        alpha_n,
                        samples.alpha[base + q],
                        samples.dalpha[base + q],
                        dist,
                    );
                    a += w * ks * x;
                    b += w * ks * (1.0 - x);
                }
            }
        }
        out.push((a * tau, b * tau));
    }
    out
}

fn row_from_cells(cells: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let n = cells.len();
    let mut row = vec![0.0; n];
    for i in 1..=n {
        let mut v = cells[i - 1].0;
        if i < n {
            v += cells[i].1;
        }
        row[i - 1] = v;
    }
    (row, cells[0].1)
}

/// History weights of row n: returns (h[n][1..=n], h0[n]).
pub fn history_weights(
    order: &VariableOrder,
    mesh: &Mesh,
    rule: &QuadratureRule,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    history_weights_with(order, mesh, rule, n, DiagonalRule::default())
}

pub fn history_weights_with(
    order: &VariableOrder,
    mesh: &Mesh,
    rule: &QuadratureRule,
    n: usize,
    diagonal: DiagonalRule,
) -> Result<(Vec<f64>, f64)> {
    if !(1 <= n && n <= mesh.cells()) {
        return Err(Error::Index(format!("row {n} outside 1..={}", mesh.cells())));
    }
    if order.is_constant() {
        return Ok((vec![0.0; n], 0.0));
    }
    let samples = CellSamples::new(order, mesh, rule, n);
    let cells = cell_integrals(order, mesh, rule, &samples, diagonal, n);
    Ok(row_from_cells(&cells))
}

fn check_compatible(order: &VariableOrder, mesh: &Mesh) -> Result<()> {
    if mesh.horizon() > order.horizon() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "mesh horizon {} exceeds the order's horizon {}",
            mesh.horizon(),
            order.horizon()
        )));
    }
    Ok(())
}

/// Assembles the full weight table.
///
/// Dense mode fills every row (O(N²) entries). With `fast_path` the history
/// weights of a linear order on a uniform mesh are stored as a single
/// generating sequence taken from the last row, and the moments are
/// evaluated on demand.
pub fn assemble(
    order: &VariableOrder,
    mesh: &Mesh,
    rule: &QuadratureRule,
    options: AssemblyOptions,
) -> Result<WeightTable> {
    check_compatible(order, mesh)?;
    let cells = mesh.cells();
    let row_alpha: Vec<f64> = mesh.nodes().iter().map(|&t| order.eval(t)).collect();
    let row_rgamma: Vec<f64> = row_alpha.iter().map(|&a| 1.0 / gamma_pos(a)).collect();

    if options.fast_path {
        if !mesh.is_uniform() {
            return Err(Error::FastPathRejected(format!(
                "translation invariance needs a uniform mesh, got r = {}",
                mesh.grading()
            )));
        }
        if order.linear_coefficients().is_none() {
            return Err(Error::FastPathRejected(
                "translation invariance needs a declared-linear order".into(),
            ));
        }
        let (diag, tail) = if order.is_constant() {
            (vec![0.0; cells], vec![0.0; cells])
        } else {
            let samples = CellSamples::new(order, mesh, rule, cells);
            let last = cell_integrals(order, mesh, rule, &samples, options.diagonal, cells);
            // Offset k = N − j from the collocation point.
            let a_off = |k: usize| last[cells - 1 - k].0;
            let b_off = |k: usize| last[cells - 1 - k].1;
            let diag = (0..cells)
                .map(|k| if k == 0 { a_off(0) } else { a_off(k) + b_off(k - 1) })
                .collect();
            let tail = (0..cells).map(b_off).collect();
            (diag, tail)
        };
        return Ok(WeightTable {
            mesh: mesh.clone(),
            row_alpha,
            row_rgamma,
            history: HistoryWeights::TranslationInvariant { diag, tail },
            moments: Moments::OnDemand,
        });
    }

    let history = if order.is_constant() {
        HistoryWeights::Dense {
            h: TriangularTable::zeros(cells),
            h0: vec![0.0; cells],
        }
    } else {
        let samples = CellSamples::new(order, mesh, rule, cells);
        let rows: Vec<(Vec<f64>, f64)> = (1..=cells)
            .into_par_iter()
            .map(|n| {
                let c = cell_integrals(order, mesh, rule, &samples, options.diagonal, n);
                row_from_cells(&c)
            })
            .collect();
        let (h_rows, h0): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        HistoryWeights::Dense {
            h: TriangularTable::from_rows(h_rows),
            h0,
        }
    };

    let moment_rows: Vec<(Vec<f64>, Vec<f64>)> = (1..=cells)
        .into_par_iter()
        .map(|n| {
            let tn = mesh.node(n);
            let alpha = row_alpha[n];
            (1..=n)
                .map(|i| hat_moments(alpha, tn - mesh.node(i), mesh.step(i)))
                .unzip()
        })
        .collect();
    let (left, right): (Vec<_>, Vec<_>) = moment_rows.into_iter().unzip();

    Ok(WeightTable {
        mesh: mesh.clone(),
        row_alpha,
        row_rgamma,
        history,
        moments: Moments::Dense {
            left: TriangularTable::from_rows(left),
            right: TriangularTable::from_rows(right),
        },
    })
}

impl WeightTable {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    /// α(t_n).
    pub fn row_alpha(&self, n: usize) -> f64 {
        self.row_alpha[n]
    }

    /// 1/Γ(α(t_n)).
    pub fn row_rgamma(&self, n: usize) -> f64 {
        self.row_rgamma[n]
    }

    pub fn history(&self) -> &HistoryWeights {
        &self.history
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.history, HistoryWeights::TranslationInvariant { .. })
    }

    /// Number of reals held for the history weights (including h0).
    pub fn history_storage(&self) -> usize {
        match &self.history {
            HistoryWeights::Dense { h, h0 } => h.len() + h0.len(),
            HistoryWeights::TranslationInvariant { diag, tail } => diag.len() + tail.len(),
        }
    }

    /// Number of reals held for the singular moments.
    pub fn moment_storage(&self) -> usize {
        match &self.moments {
            Moments::Dense { left, right } => left.len() + right.len(),
            Moments::OnDemand => 0,
        }
    }

    /// h[n][i], 1 ≤ i ≤ n.
    #[inline]
    pub fn h(&self, n: usize, i: usize) -> f64 {
        match &self.history {
            HistoryWeights::Dense { h, .. } => h.get(n, i),
            HistoryWeights::TranslationInvariant { diag, .. } => diag[n - i],
        }
    }

    /// Coefficient of u0 from the hat on [t_0, t_1].
    #[inline]
    pub fn h0(&self, n: usize) -> f64 {
        match &self.history {
            HistoryWeights::Dense { h0, .. } => h0[n - 1],
            HistoryWeights::TranslationInvariant { tail, .. } => tail[n - 1],
        }
    }

    /// (wL[n][i], wR[n][i]).
    #[inline]
    pub fn moments(&self, n: usize, i: usize) -> (f64, f64) {
        match &self.moments {
            Moments::Dense { left, right } => (left.get(n, i), right.get(n, i)),
            Moments::OnDemand => {
                let tn = self.mesh.node(n);
                hat_moments(self.row_alpha[n], tn - self.mesh.node(i), self.mesh.step(i))
            }
        }
    }

    /// Σ_{i<n} h[n][i] u[i] + h0[n] u[0].
    pub fn history_known(&self, n: usize, u: &[f64]) -> f64 {
        let mut acc = self.h0(n) * u[0];
        match &self.history {
            HistoryWeights::Dense { h, .. } => {
                let row = h.row(n);
                for i in 1..n {
                    acc += row[i - 1] * u[i];
                }
            }
            HistoryWeights::TranslationInvariant { diag, .. } => {
                for i in 1..n {
                    acc += diag[n - i] * u[i];
                }
            }
        }
        acc
    }

    /// Σ_{i=1}^{n} wL[n][i] f[i−1] + Σ_{i=1}^{n−1} wR[n][i] f[i]; the implicit
    /// wR[n][n] f[n] term is excluded.
    pub fn moments_known(&self, n: usize, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        match &self.moments {
            Moments::Dense { left, right } => {
                let l = left.row(n);
                let r = right.row(n);
                for i in 1..=n {
                    acc += l[i - 1] * f[i - 1];
                    if i < n {
                        acc += r[i - 1] * f[i];
                    }
                }
            }
            Moments::OnDemand => {
                for i in 1..=n {
                    let (wl, wr) = self.moments(n, i);
                    acc += wl * f[i - 1];
                    if i < n {
                        acc += wr * f[i];
                    }
                }
            }
        }
        acc
    }

    /// Dense copy of row n of the history weights.
    pub fn history_row(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.h(n, i)).collect()
    }

    /// max |h[n][i] − other.h[n][i]| and |h0 − other.h0| over all entries.
    pub fn max_history_discrepancy(&self, other: &WeightTable) -> f64 {
        let cells = self.cells().min(other.cells());
        let mut worst: f64 = 0.0;
        for n in 1..=cells {
            worst = worst.max((self.h0(n) - other.h0(n)).abs());
            for i in 1..=n {
                worst = worst.max((self.h(n, i) - other.h(n, i)).abs());
            }
        }
        worst
    }

    /// The generating sequence when stored translation-invariantly.
    pub fn generating_sequence(&self) -> Option<(&[f64], &[f64])> {
        match &self.history {
            HistoryWeights::TranslationInvariant { diag, tail } => Some((diag, tail)),
            HistoryWeights::Dense { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_mesh;
    use crate::order::{make_sine_order, VariableOrder};

    #[test]
    fn classical_moments_are_trapezoid_weights() {
        for (a, tau) in [(0.0, 0.25), (0.5, 0.25), (3.0, 1e-3)] {
            let (l, r) = hat_moments(1.0, a, tau);
            assert!((l - tau / 2.0).abs() < 1e-15 * (1.0 + a));
            assert!((r - tau / 2.0).abs() < 1e-15 * (1.0 + a));
        }
    }

    #[test]
    fn half_order_unit_cell_moments() {
        let (l, r) = hat_moments(0.5, 0.0, 1.0);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((l + r - 2.0 / sqrt_pi).abs() < 1e-14);
        assert!((r - 4.0 / (3.0 * sqrt_pi)).abs() < 1e-14);
    }

    #[test]
    fn moments_partition_unity() {
        let o = make_sine_order(0.6, 0.1).unwrap();
        let m = make_mesh(1.0, 64, 1.0 / 0.6).unwrap();
        for n in [1usize, 5, 64] {
            let tn = m.node(n);
            let alpha = o.eval(tn);
            for i in 1..=n {
                let (l, r) = singular_moments(&o, &m, n, i).unwrap();
                assert!(l > 0.0 && r > 0.0);
                let a = tn - m.node(i);
                let b = tn - m.node(i - 1);
                let direct = (b.powf(alpha) - a.powf(alpha)) / (alpha * gamma_pos(alpha));
                assert!((l + r - direct).abs() <= 1e-13, "n {n} i {i}");
            }
        }
        assert!(singular_moments(&o, &m, 3, 4).is_err());
        assert!(singular_moments(&o, &m, 65, 1).is_err());
    }

    #[test]
    fn constant_order_history_is_zero() {
        let o = VariableOrder::constant(0.3, 1.0).unwrap();
        let m = make_mesh(1.0, 12, 1.0).unwrap();
        let rule = gauss_nodes(20).unwrap();
        for fast in [false, true] {
            let w = assemble(&o, &m, &rule, AssemblyOptions { fast_path: fast, ..Default::default() }).unwrap();
            for n in 1..=12 {
                assert_eq!(w.h0(n), 0.0);
                assert!(w.history_row(n).iter().all(|&h| h == 0.0));
            }
        }
    }

    #[test]
    fn fast_path_preconditions() {
        let rule = gauss_nodes(8).unwrap();
        let sine = make_sine_order(0.6, 0.1).unwrap();
        let graded = make_mesh(1.0, 8, 2.0).unwrap();
        let uniform = make_mesh(1.0, 8, 1.0).unwrap();
        let opts = AssemblyOptions { fast_path: true, ..Default::default() };
        assert!(matches!(assemble(&sine, &graded, &rule, opts), Err(Error::FastPathRejected(_))));
        assert!(matches!(assemble(&sine, &uniform, &rule, opts), Err(Error::FastPathRejected(_))));
        let lin = VariableOrder::linear(0.9, -0.5, 1.0).unwrap();
        assert!(matches!(assemble(&lin, &graded, &rule, opts), Err(Error::FastPathRejected(_))));
        assert!(assemble(&lin, &uniform, &rule, opts).is_ok());
    }

    #[test]
    fn packed_rows_line_up() {
        let t = TriangularTable::from_rows(vec![vec![1.0], vec![2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(t.get(3, 2), 5.0);
        assert_eq!(t.row(2), &[2.0, 3.0]);
        assert_eq!(t.len(), 6);
    }
}
