//! Variances of KL(P ‖ P') for the uncoupled and coupled scenarios.
//!
//! Both variances reduce to second moments of the form
//! (θ+2)/2 · E[S²] + (θ+1)(θ+2) · E[C] − mean², where S is a single
//! weighted binary divergence and C the product of two consecutive ones.
//! Each expectation is expanded into products of independent weighted
//! log-moments of beta variables; the weights X^c (1−X)^d turn into the
//! beta-function ratio coefficients below.

use crate::error::{require_positive, Result};
use crate::special::{beta_log_moments_unchecked, log_beta_ratio, BetaLogMoments};

use super::expected_kl_uncoupled;

/// B(1+c, θ+d) / B(1, θ): the E[X^c (1−X)^d] prefactor under Be(1, θ).
fn stick_ratio(theta: f64, c: f64, d: f64) -> f64 {
    log_beta_ratio(1.0, theta, c, d).exp()
}

fn moments(a: f64, b: f64) -> BetaLogMoments {
    beta_log_moments_unchecked(a, b)
}

/// Coefficients of the uncoupled expansions:
/// `square` = (a₁, a₂, a₃) for E[d²(v₁‖v)] and
/// `cross` = (a₁, a₂, a₃, a₄) for E[(1−v₁) d(v₁‖v) d(v₂‖v)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct UncoupledCoefficients {
    pub square: [f64; 3],
    pub cross: [f64; 4],
}

pub(crate) fn uncoupled_coefficients(theta: f64) -> UncoupledCoefficients {
    let r30 = stick_ratio(theta, 2.0, 0.0); // B(3,θ)/B(1,θ)
    let r12 = stick_ratio(theta, 0.0, 2.0); // B(1,θ+2)/B(1,θ)
    let r21 = stick_ratio(theta, 1.0, 1.0); // B(2,θ+1)/B(1,θ)
    let r20 = stick_ratio(theta, 1.0, 0.0); // B(2,θ)/B(1,θ)
    let r11 = stick_ratio(theta, 0.0, 1.0); // B(1,θ+1)/B(1,θ)
    UncoupledCoefficients {
        square: [r30, r12, 2.0 * r21],
        cross: [r21 * r20, r21 * r11, r12 * r20, r12 * r11],
    }
}

/// E[d²(v₁ ‖ v)], v₁ ~ Be(1, θ), v ~ Be(a, b).
fn uncoupled_square(theta: f64, v: &BetaLogMoments) -> f64 {
    let [a1, a2, a3] = uncoupled_coefficients(theta).square;
    let x1 = moments(3.0, theta);
    let x2 = moments(1.0, theta + 2.0);
    let x3 = moments(2.0, theta + 1.0);
    a1 * (x1.e_log2_x - 2.0 * x1.e_log_x * v.e_log_x + v.e_log2_x)
        + a2 * (x2.e_log2_1mx - 2.0 * x2.e_log_1mx * v.e_log_1mx + v.e_log2_1mx)
        + a3 * (x3.e_logx_log1mx - x3.e_log_x * v.e_log_1mx)
        + a3 * (v.e_logx_log1mx - v.e_log_x * x3.e_log_1mx)
}

/// E[(1 − v₁) d(v₁ ‖ v) d(v₂ ‖ v)], v₁, v₂ ~ Be(1, θ), v ~ Be(a, b).
fn uncoupled_cross(theta: f64, v: &BetaLogMoments) -> f64 {
    let [a1, a2, a3, a4] = uncoupled_coefficients(theta).cross;
    let x1 = moments(2.0, theta + 1.0);
    let x2 = moments(2.0, theta);
    let x3 = moments(1.0, theta + 1.0);
    let x4 = moments(1.0, theta + 2.0);
    a1 * (x1.e_log_x * x2.e_log_x - x1.e_log_x * v.e_log_x - x2.e_log_x * v.e_log_x + v.e_log2_x)
        + a2 * (x1.e_log_x * x3.e_log_1mx - x3.e_log_1mx * v.e_log_x - x1.e_log_x * v.e_log_1mx)
        + (a2 + a3) * v.e_logx_log1mx
        + a3 * (x4.e_log_1mx * x2.e_log_x - x4.e_log_1mx * v.e_log_x - v.e_log_1mx * x2.e_log_x)
        + a4 * (x4.e_log_1mx * x3.e_log_1mx - x4.e_log_1mx * v.e_log_1mx - v.e_log_1mx * x3.e_log_1mx
            + v.e_log2_1mx)
}

/// Var[KL(P ‖ P')] with v ~ Be(a, b) independent of the Dirichlet lengths.
pub fn variance_kl_uncoupled(theta: f64, a: f64, b: f64) -> Result<f64> {
    let mean = expected_kl_uncoupled(theta, a, b)?;
    let v = moments(a, b);
    let second = 0.5 * (theta + 2.0) * uncoupled_square(theta, &v)
        + (theta + 1.0) * (theta + 2.0) * uncoupled_cross(theta, &v);
    Ok((second - mean * mean).max(0.0))
}

/// Coefficients of the coupled expansions:
/// `square` = (a₁, a₂, a₃) for E[((1−v₁) d(v₂‖v₁))²] and
/// `cross` = (a₁, a₂, a₃, a₄) for E[(1−v₁)²(1−v₂) d(v₂‖v₁) d(v₃‖v₁)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CoupledCoefficients {
    pub square: [f64; 3],
    pub cross: [f64; 4],
}

pub(crate) fn coupled_coefficients(theta: f64) -> CoupledCoefficients {
    let r30 = stick_ratio(theta, 2.0, 0.0);
    let r12 = stick_ratio(theta, 0.0, 2.0);
    let r21 = stick_ratio(theta, 1.0, 1.0);
    let r20 = stick_ratio(theta, 1.0, 0.0);
    let r11 = stick_ratio(theta, 0.0, 1.0);
    CoupledCoefficients {
        square: [r30 * r12, r12 * r12, 2.0 * r21 * r12],
        cross: [r12 * r21 * r20, r12 * r21 * r11, r12 * r12 * r20, r12 * r12 * r11],
    }
}

/// E[((1 − v₁) d(v₂ ‖ v₁))²].
fn coupled_square(theta: f64) -> f64 {
    let [a1, a2, a3] = coupled_coefficients(theta).square;
    let x1 = moments(3.0, theta);
    let x2 = moments(1.0, theta + 2.0);
    let x3 = moments(2.0, theta + 1.0);
    a1 * (x1.e_log2_x - 2.0 * x1.e_log_x * x2.e_log_x + x2.e_log2_x)
        + 2.0 * a2 * x2.var_log_1mx()
        + a3 * (x3.e_logx_log1mx - x3.e_log_x * x2.e_log_1mx)
        + a3 * (x2.e_logx_log1mx - x2.e_log_x * x3.e_log_1mx)
}

/// E[(1 − v₁)² (1 − v₂) d(v₂ ‖ v₁) d(v₃ ‖ v₁)].
fn coupled_cross(theta: f64) -> f64 {
    let [a1, a2, a3, a4] = coupled_coefficients(theta).cross;
    let x1 = moments(2.0, theta + 1.0);
    let x2 = moments(2.0, theta);
    let x3 = moments(1.0, theta + 2.0);
    let x4 = moments(1.0, theta + 1.0);
    a1 * (x1.e_log_x * x2.e_log_x - x3.e_log_x * x1.e_log_x - x3.e_log_x * x2.e_log_x + x3.e_log2_x)
        + a2 * (x1.e_log_x * x4.e_log_1mx - x4.e_log_1mx * x3.e_log_x - x1.e_log_x * x3.e_log_1mx)
        + (a2 + a3) * x3.e_logx_log1mx
        - a3 * x3.e_log_x * x3.e_log_1mx
        + a4 * x3.var_log_1mx()
}

/// Var[KL(P ‖ P')] when the geometric length is v = v₁.
pub fn variance_kl_coupled(theta: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    let mean = theta / (theta + 1.0);
    let second =
        0.5 * (theta + 2.0) * coupled_square(theta) + (theta + 1.0) * (theta + 2.0) * coupled_cross(theta);
    Ok((second - mean * mean).max(0.0))
}
