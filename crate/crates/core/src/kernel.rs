//! The Volterra kernel K(t, s) = (t − s)^{α(t) − α(s)} / Γ(1 + α(t) − α(s)),
//! its s-derivative, and the initial-data coefficient.

use crate::error::{Error, Result};
use crate::order::VariableOrder;
use crate::quadrature::{gauss_nodes, QuadratureRule};
use crate::specialfns::{digamma_pos, gamma_pos};

/// A pair 0 ≤ s < t with the order difference and log distance cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub t: f64,
    pub s: f64,
    /// α(t) − α(s)
    pub dalpha: f64,
    /// ln(t − s)
    pub logterm: f64,
}

impl KernelPoint {
    pub fn new(order: &VariableOrder, t: f64, s: f64) -> Result<Self> {
        if !(s < t) || s < 0.0 {
            return Err(Error::Domain(format!(
                "kernel requires 0 <= s < t, got t = {t}, s = {s}"
            )));
        }
        Ok(Self {
            t,
            s,
            dalpha: order.eval(t) - order.eval(s),
            logterm: (t - s).ln(),
        })
    }

    /// (t − s)^{dα}, written as exp(dα · ln(t − s)) so the s → t limit is 1.
    #[inline]
    pub fn power(&self) -> f64 {
        (self.dalpha * self.logterm).exp()
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.power() / gamma_pos(1.0 + self.dalpha)
    }
}

/// K_s from already evaluated pieces: α(t), α(s), α′(s) and t − s.
#[inline]
pub(crate) fn ks_from_parts(alpha_t: f64, alpha_s: f64, dalpha_s: f64, dist: f64) -> f64 {
    let da = alpha_t - alpha_s;
    let ln = dist.ln();
    let arg = 1.0 + da;
    let k = (da * ln).exp() / gamma_pos(arg);
    k * (dalpha_s * (digamma_pos(arg) - ln) - da / dist)
}

/// K(t, s) for 0 ≤ s < t.
pub fn kernel_k(order: &VariableOrder, t: f64, s: f64) -> Result<f64> {
    Ok(KernelPoint::new(order, t, s)?.k())
}

/// ∂K/∂s (t, s) = K · [α′(s) ψ(1 + dα) − α′(s) ln(t − s) − dα/(t − s)].
///
/// Identically zero for constant orders. Near the diagonal the log term
/// diverges, which is integrable.
pub fn kernel_ks(order: &VariableOrder, t: f64, s: f64) -> Result<f64> {
    if !(s < t) || s < 0.0 {
        return Err(Error::Domain(format!(
            "kernel requires 0 <= s < t, got t = {t}, s = {s}"
        )));
    }
    Ok(ks_from_parts(order.eval(t), order.eval(s), order.deriv(s), t - s))
}

/// u0 t^{α(t) − α(0)} / Γ(1 + α(t) − α(0)), defined as u0 at t = 0.
pub fn initial_coefficient(order: &VariableOrder, t: f64, u0: f64) -> f64 {
    if t <= 0.0 {
        return u0;
    }
    let da = order.eval(t) - order.alpha0();
    u0 * (da * t.ln()).exp() / gamma_pos(1.0 + da)
}

/// |∫_s^t (t − y)^{α(t)−1} (y − s)^{−α(s)} dy − Γ(α(t))Γ(1 − α(s))/Γ(1 + α(t) − α(s)) · (t − s)^{α(t)−α(s)}|.
///
/// The integral is split at the midpoint and each half handled with a
/// substitution that removes its endpoint singularity. Diagnostic only.
pub fn inversion_identity_check(order: &VariableOrder, t: f64, s: f64) -> Result<f64> {
    let rule = gauss_nodes(80)?;
    inversion_identity_check_with(order, t, s, &rule)
}

pub fn inversion_identity_check_with(
    order: &VariableOrder,
    t: f64,
    s: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let p = KernelPoint::new(order, t, s)?;
    let at = order.eval(t);
    let as_ = order.eval(s);
    if !(as_ < 1.0) {
        return Err(Error::Domain(format!("inversion identity needs alpha(s) < 1, got {as_}")));
    }
    let len = t - s;
    let half = 0.5 * len;
    // [s, m]: v = y − s carries v^{−α(s)}.
    let left = rule.integrate_power_weight(half, 1.0 - as_, |v| (len - v).powf(at - 1.0));
    // [m, t]: v = t − y carries v^{α(t) − 1}.
    let right = rule.integrate_power_weight(half, at, |v| (len - v).powf(-as_));
    let closed = gamma_pos(at) * gamma_pos(1.0 - as_) / gamma_pos(1.0 + p.dalpha) * p.power();
    Ok((left + right - closed).abs())
}
