//! Real-argument special functions on the positive half line.
//!
//! Log-gamma, digamma and trigamma are evaluated by shifting the argument
//! upward with the usual recurrences and then applying the asymptotic
//! (Stirling / Bernoulli) expansions. The moments of logarithmically
//! transformed beta variables are composed from these.

use crate::error::{require_positive, Error, Result};

/// Euler–Mascheroni constant, γ = −ψ(1).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// Arguments are shifted to at least this value before the asymptotic series.
const LGAMMA_SHIFT: f64 = 10.0;
const PSI_SHIFT: f64 = 10.0;

/// Natural log of Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    require_positive("x", x)?;
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 1.0;
    while x < LGAMMA_SHIFT {
        shift *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/(12x) - 1/(360x^3) + 1/(1260x^5) - 1/(1680x^7) + 1/(1188x^9)
    //   - 691/(360360x^11) + 1/(156x^13)
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series - shift.ln()
}

/// Digamma ψ(x) = d/dx log Γ(x), for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    require_positive("x", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < PSI_SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_2k / (2k x^2k)
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// Trigamma ψ₁(x), the derivative of digamma, for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    require_positive("x", x)?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < PSI_SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
    let series = inv
        * inv2
        * (1.0 / 6.0
            - inv2
                * (1.0 / 30.0
                    - inv2
                        * (1.0 / 42.0
                            - inv2
                                * (1.0 / 30.0
                                    - inv2
                                        * (5.0 / 66.0
                                            - inv2
                                                * (691.0 / 2730.0
                                                    - inv2 * (7.0 / 6.0 - inv2 * 3617.0 / 510.0)))))));
    acc + inv + 0.5 * inv2 + series
}

/// Natural log of the beta function B(a, b).
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    Ok(log_beta_unchecked(a, b))
}

pub(crate) fn log_beta_unchecked(a: f64, b: f64) -> f64 {
    if a == 1.0 {
        return -b.ln();
    }
    if b == 1.0 {
        return -a.ln();
    }
    log_gamma_unchecked(a) + log_gamma_unchecked(b) - log_gamma_unchecked(a + b)
}

/// log of the rising factorial β(β+1)···(β+n−1); zero for n = 0.
pub fn log_rising_factorial(beta: f64, n: u64) -> Result<f64> {
    require_positive("beta", beta)?;
    Ok(log_rising_unchecked(beta, n))
}

pub(crate) fn log_rising_unchecked(beta: f64, n: u64) -> f64 {
    if n > 10_000 {
        return log_gamma_unchecked(beta + n as f64) - log_gamma_unchecked(beta);
    }
    // Multiply in blocks and take one log per block.
    let mut total = 0.0;
    let mut block = 1.0;
    for i in 0..n {
        block *= beta + i as f64;
        if !(1e-250..=1e250).contains(&block) {
            total += block.ln();
            block = 1.0;
        }
    }
    total + block.ln()
}

/// log [ B(a+c, b+d) / B(a, b) ].
///
/// Small nonnegative integer shifts go through rising factorials, which keeps
/// the ratio exact-to-rounding for the shifts that appear in the moment
/// expansions. Anything else falls back to log-gamma differences.
pub(crate) fn log_beta_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let small_int = |x: f64| (0.0..=64.0).contains(&x) && x.fract() == 0.0;
    if small_int(c) && small_int(d) {
        log_rising_unchecked(a, c as u64) + log_rising_unchecked(b, d as u64)
            - log_rising_unchecked(a + b, (c + d) as u64)
    } else {
        log_beta_unchecked(a + c, b + d) - log_beta_unchecked(a, b)
    }
}

/// Log-moments of X ~ Be(a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaLogMoments {
    /// E[log X]
    pub e_log_x: f64,
    /// E[log(1−X)]
    pub e_log_1mx: f64,
    /// E[log² X]
    pub e_log2_x: f64,
    /// E[log²(1−X)]
    pub e_log2_1mx: f64,
    /// E[log X · log(1−X)]
    pub e_logx_log1mx: f64,
}

impl BetaLogMoments {
    pub fn get(&self, kind: LogMomentKind) -> f64 {
        match kind {
            LogMomentKind::LogX => self.e_log_x,
            LogMomentKind::Log1mX => self.e_log_1mx,
            LogMomentKind::Log2X => self.e_log2_x,
            LogMomentKind::Log21mX => self.e_log2_1mx,
            LogMomentKind::Cross => self.e_logx_log1mx,
        }
    }

    /// Var[log X].
    pub fn var_log_x(&self) -> f64 {
        self.e_log2_x - self.e_log_x * self.e_log_x
    }

    /// Var[log(1−X)].
    pub fn var_log_1mx(&self) -> f64 {
        self.e_log2_1mx - self.e_log_1mx * self.e_log_1mx
    }
}

/// Which logarithmic functional of X is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogMomentKind {
    LogX,
    Log1mX,
    Log2X,
    Log21mX,
    Cross,
}

pub fn beta_log_moments(a: f64, b: f64) -> Result<BetaLogMoments> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    Ok(beta_log_moments_unchecked(a, b))
}

pub(crate) fn beta_log_moments_unchecked(a: f64, b: f64) -> BetaLogMoments {
    let psi_ab = digamma_unchecked(a + b);
    let tri_ab = trigamma_unchecked(a + b);
    let lx = digamma_unchecked(a) - psi_ab;
    let l1mx = digamma_unchecked(b) - psi_ab;
    BetaLogMoments {
        e_log_x: lx,
        e_log_1mx: l1mx,
        e_log2_x: lx * lx + (trigamma_unchecked(a) - tri_ab),
        e_log2_1mx: l1mx * l1mx + (trigamma_unchecked(b) - tri_ab),
        e_logx_log1mx: lx * l1mx - tri_ab,
    }
}

/// E[X^c (1−X)^d · g(X)] for X ~ Be(a, b), where g is selected by `kind`.
///
/// Equals B(a+c, b+d)/B(a, b) times the same log-moment of Be(a+c, b+d).
pub fn beta_weighted_log_moment(a: f64, b: f64, c: f64, d: f64, kind: LogMomentKind) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    if (a + c).is_nan() || a + c <= 0.0 {
        return Err(Error::Domain {
            name: "a + c",
            value: a + c,
            requirement: "shifted parameter must be positive",
        });
    }
    if (b + d).is_nan() || b + d <= 0.0 {
        return Err(Error::Domain {
            name: "b + d",
            value: b + d,
            requirement: "shifted parameter must be positive",
        });
    }
    Ok(weighted_unchecked(a, b, c, d, kind))
}

pub(crate) fn weighted_unchecked(a: f64, b: f64, c: f64, d: f64, kind: LogMomentKind) -> f64 {
    let prefactor = log_beta_ratio(a, b, c, d).exp();
    prefactor * beta_log_moments_unchecked(a + c, b + d).get(kind)
}
