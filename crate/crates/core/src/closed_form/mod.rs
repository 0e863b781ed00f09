//! Closed-form moments of the random divergence between a Dirichlet process
//! P (lengths iid Be(1, θ)) and a geometric process P' (length v ~ Be(a, b)),
//! the reversed-divergence series, the rising-factorial series identities and
//! the upper bound on the exchangeable-model expectation.

mod series;
mod variance;

pub use series::{
    inverse_rising_closed_form, levin_u, quotient_rising_closed_form, series_inverse_rising, series_quotient_rising,
    SeriesSum,
};
pub use variance::{variance_kl_coupled, variance_kl_uncoupled};

use crate::error::{require_positive, Error, Result};
use crate::special::{digamma_unchecked, EULER_GAMMA};

/// E[d(v₁ ‖ v)] with v₁ ~ Be(1, θ) and v ~ Be(a, b) independent.
pub fn expected_binary_divergence(theta: f64, a: f64, b: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    require_positive("a", a)?;
    require_positive("b", b)?;
    let rho = 1.0 / (theta + 1.0);
    let psi_ab = digamma_unchecked(a + b);
    let first = digamma_unchecked(2.0) - digamma_unchecked(theta + 2.0) - digamma_unchecked(a) + psi_ab;
    let second = -rho - digamma_unchecked(b) + psi_ab;
    Ok(rho * first + (1.0 - rho) * second)
}

/// E[KL(P ‖ P')] in the uncoupled case: (θ + 1) E[d(v₁ ‖ v)].
pub fn expected_kl_uncoupled(theta: f64, a: f64, b: f64) -> Result<f64> {
    Ok((theta + 1.0) * expected_binary_divergence(theta, a, b)?)
}

/// E[KL(P ‖ P')] when the geometric length is v = v₁: θ / (θ + 1).
pub fn expected_kl_coupled(theta: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    Ok(theta / (theta + 1.0))
}

/// Upper bound on D_θ(β) valid for β > θ + 1:
/// θ/(θ+1) · β² / ((β − 1)(β − θ − 1)).
pub fn dtheta_upper_bound(theta: f64, beta: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    if beta.is_nan() || beta <= theta + 1.0 || !beta.is_finite() {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            requirement: "bound requires beta > theta + 1",
        });
    }
    Ok(theta / (theta + 1.0) * beta * beta / ((beta - 1.0) * (beta - (theta + 1.0))))
}

/// Terms are summed until the extrapolated tail drops below the tolerance or
/// this many terms have been used.
pub const REVERSED_MAX_TERMS: u64 = 20_000_000;

/// Convergence of the reversed series is flagged as slow below this `a`.
pub const SLOW_CONVERGENCE_A: f64 = 1.2;

/// Partial sum of the series for E[KL(P' ‖ P)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversedExpectation {
    pub value: f64,
    pub terms: u64,
    /// Power-law estimate of the omitted tail.
    pub tail_estimate: f64,
    /// Whether the tail estimate fell below the tolerance.
    pub converged: bool,
    /// Set when a < 1.2: the terms decay like n^{−a}.
    pub slow: bool,
}

/// E[KL(P' ‖ P)], summed until the extrapolated tail is below `tol`.
///
/// Finite only for a > 1. The n-th term is
/// c₁ₙ [ψ(a+1) − ψ(a+b+n) + γ + ψ(θ+1)] + c₂ₙ [ψ(b+n) − ψ(a+b+n) + 1/θ]
/// with c₁ₙ = B(a+1, b+n−1)/B(a, b) and c₂ₙ = B(a, b+n)/B(a, b), which
/// decays like n^{−a}; the tail after n terms is estimated as
/// termₙ · n / (a − 1).
pub fn expected_kl_reversed(a: f64, b: f64, theta: f64, tol: f64) -> Result<ReversedExpectation> {
    expected_kl_reversed_with_limit(a, b, theta, tol, REVERSED_MAX_TERMS)
}

pub fn expected_kl_reversed_with_limit(
    a: f64,
    b: f64,
    theta: f64,
    tol: f64,
    max_terms: u64,
) -> Result<ReversedExpectation> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    require_positive("theta", theta)?;
    require_positive("tol", tol)?;
    if a <= 1.0 {
        return Err(Error::Infinite(format!(
            "E[KL(P'||P)] is finite only for a > 1 (got a = {a})"
        )));
    }
    let constant = digamma_unchecked(a + 1.0) + EULER_GAMMA + digamma_unchecked(theta + 1.0);
    let inv_theta = 1.0 / theta;
    // Gamma-function ratios folded one factor at a time.
    let mut c1 = a / (a + b);
    let mut c2 = b / (a + b);
    let mut sum = crate::sum::CompensatedSum::new();
    let mut n: u64 = 1;
    let mut tail = f64::INFINITY;
    loop {
        let nf = n as f64;
        let psi_abn = digamma_unchecked(a + b + nf);
        let term = c1 * (constant - psi_abn) + c2 * (digamma_unchecked(b + nf) - psi_abn + inv_theta);
        sum.add(term);
        if n >= 16 {
            tail = term.abs() * nf / (a - 1.0);
            if tail < tol {
                break;
            }
        }
        if n >= max_terms {
            break;
        }
        c1 *= (b + nf - 1.0) / (a + b + nf);
        c2 *= (b + nf) / (a + b + nf);
        n += 1;
    }
    Ok(ReversedExpectation {
        value: sum.value(),
        terms: n,
        tail_estimate: tail,
        converged: tail < tol,
        slow: a < SLOW_CONVERGENCE_A,
    })
}
