//! Series of ratios of rising factorials.
//!
//! Σ_{n≥1} (n−1)!/β⁽ⁿ⁾ = 1/(β−1) for β > 1, and
//! Σ_{n≥1} (λβ)⁽ⁿ⁾/β⁽ⁿ⁾ = λβ/((1−λ)β − 1) for (1−λ)β > 1.
//!
//! Both series have terms decaying only algebraically, so partial sums
//! converge slowly. Alongside the raw partial sum we report a Levin
//! u-transform of the last few partial sums, which removes the algebraic
//! tail without using the closed forms.

use crate::error::{require_open_unit, require_positive, Error, Result};
use crate::sum::CompensatedSum;

/// Levin order used on the trailing partial sums. Higher orders lose
/// everything to cancellation this deep into the sequence.
const LEVIN_ORDER: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSum {
    /// s_m for m = 1..=n_max.
    pub partial_sums: Vec<f64>,
    /// a_m for m = 1..=n_max.
    pub terms: Vec<f64>,
    /// Levin u-transform of the trailing partial sums.
    pub accelerated: f64,
}

impl SeriesSum {
    fn from_terms(terms: Vec<f64>) -> Self {
        let mut acc = CompensatedSum::new();
        let partial_sums: Vec<f64> = terms
            .iter()
            .map(|&t| {
                acc.add(t);
                acc.value()
            })
            .collect();
        let accelerated = levin_u(&partial_sums, &terms, LEVIN_ORDER);
        SeriesSum {
            partial_sums,
            terms,
            accelerated,
        }
    }

    /// Partial sum through n_max.
    pub fn partial_sum(&self) -> f64 {
        *self.partial_sums.last().expect("n_max >= 1")
    }

    pub fn n_max(&self) -> usize {
        self.terms.len()
    }
}

/// Levin u-transform of order ≤ `order` built from the last partial sums.
///
/// `partial_sums[i]` and `terms[i]` belong to index m = i + 1; the remainder
/// estimate is ωₘ = m·aₘ. Exact for sequences sₘ = s + ωₘ·P(1/m) with P a
/// polynomial of degree < order.
pub fn levin_u(partial_sums: &[f64], terms: &[f64], order: usize) -> f64 {
    let len = partial_sums.len().min(terms.len());
    if len == 0 {
        return f64::NAN;
    }
    let k = order.min(len - 1);
    if k == 0 {
        return partial_sums[len - 1];
    }
    let m0 = len - k; // 1-based index of the first sum used
    let mk = (m0 + k) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let m = m0 + j;
        let omega = m as f64 * terms[m - 1];
        if omega == 0.0 {
            return partial_sums[len - 1];
        }
        let scale = (m as f64 / mk).powi(k as i32 - 1);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * binom * scale / omega;
        num += c * partial_sums[m - 1];
        den += c;
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    num / den
}

/// Partial sums of Σ (n−1)!/β⁽ⁿ⁾, n = 1..=n_max.
pub fn series_inverse_rising(beta: f64, n_max: usize) -> Result<SeriesSum> {
    require_positive("beta", beta)?;
    if beta <= 1.0 {
        return Err(Error::Divergent(format!(
            "sum of (n-1)!/beta^(n) needs beta > 1 (got {beta})"
        )));
    }
    require_terms(n_max)?;
    let mut terms = Vec::with_capacity(n_max);
    let mut t = 1.0 / beta;
    for n in 1..=n_max {
        terms.push(t);
        let nf = n as f64;
        t *= nf / (beta + nf);
    }
    Ok(SeriesSum::from_terms(terms))
}

/// 1/(β − 1).
pub fn inverse_rising_closed_form(beta: f64) -> Result<f64> {
    if beta.is_nan() || beta <= 1.0 {
        return Err(Error::Divergent(format!("closed form needs beta > 1 (got {beta})")));
    }
    Ok(1.0 / (beta - 1.0))
}

/// Partial sums of Σ (λβ)⁽ⁿ⁾/β⁽ⁿ⁾, n = 1..=n_max.
pub fn series_quotient_rising(lambda: f64, beta: f64, n_max: usize) -> Result<SeriesSum> {
    require_open_unit("lambda", lambda)?;
    require_positive("beta", beta)?;
    if (1.0 - lambda) * beta <= 1.0 {
        return Err(Error::Divergent(format!(
            "sum of (lambda*beta)^(n)/beta^(n) needs (1-lambda)*beta > 1 (got {})",
            (1.0 - lambda) * beta
        )));
    }
    require_terms(n_max)?;
    let lb = lambda * beta;
    let mut terms = Vec::with_capacity(n_max);
    let mut t = lambda;
    for n in 1..=n_max {
        terms.push(t);
        let nf = n as f64;
        t *= (lb + nf) / (beta + nf);
    }
    Ok(SeriesSum::from_terms(terms))
}

/// λβ / ((1 − λ)β − 1).
pub fn quotient_rising_closed_form(lambda: f64, beta: f64) -> Result<f64> {
    require_open_unit("lambda", lambda)?;
    let denom = (1.0 - lambda) * beta - 1.0;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::Divergent(format!(
            "closed form needs (1-lambda)*beta > 1 (got {})",
            (1.0 - lambda) * beta
        )));
    }
    Ok(lambda * beta / denom)
}

fn require_terms(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(Error::Config("n_max must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_rising_values() {
        let s = series_inverse_rising(2.0, 200).unwrap();
        // Terms are 1/(n(n+1)), so the raw partial sum is 1 − 1/201.
        assert!((s.partial_sum() - (1.0 - 1.0 / 201.0)).abs() < 1e-14);
        assert!((s.accelerated - 1.0).abs() < 1e-8);
        let s = series_inverse_rising(3.0, 200).unwrap();
        assert!((s.accelerated - 0.5).abs() < 1e-8);
    }

    #[test]
    fn inverse_rising_near_one_extrapolates() {
        let s = series_inverse_rising(1.01, 20_000).unwrap();
        // Raw partial sums are far from 100 here; the tail is ~ n^{-0.01}.
        assert!(s.partial_sum() < 50.0);
        assert!((s.accelerated - 100.0).abs() < 1e-2, "{}", s.accelerated);
    }

    #[test]
    fn quotient_rising_values() {
        let s = series_quotient_rising(0.5, 4.0, 400).unwrap();
        assert!((s.accelerated - 2.0).abs() < 1e-8);
        let s = series_quotient_rising(0.5, 6.0, 400).unwrap();
        assert!((s.accelerated - 1.5).abs() < 1e-8);
    }

    #[test]
    fn divergent_parameters_rejected() {
        assert!(matches!(series_inverse_rising(1.0, 10), Err(Error::Divergent(_))));
        assert!(matches!(series_quotient_rising(0.5, 2.0, 10), Err(Error::Divergent(_))));
        assert!(series_quotient_rising(1.0, 20.0, 10).is_err());
        assert!(series_inverse_rising(2.0, 0).is_err());
    }

    #[test]
    fn partial_sums_increase_toward_closed_form() {
        for &(lambda, beta) in &[(0.5, 4.0), (0.2, 3.0), (0.7, 10.0)] {
            let limit = quotient_rising_closed_form(lambda, beta).unwrap();
            let s = series_quotient_rising(lambda, beta, 500).unwrap();
            let mut prev = 0.0;
            for &p in &s.partial_sums {
                assert!(p > prev && p <= limit + 1e-12);
                prev = p;
            }
        }
    }

    #[test]
    fn levin_handles_tiny_inputs() {
        assert_eq!(levin_u(&[1.0], &[1.0], 8), 1.0);
        assert!(levin_u(&[], &[], 8).is_nan());
    }
}
