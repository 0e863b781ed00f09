//! Pathwise divergences between stick-breaking measures sharing their atoms.
//!
//! Because both measures put mass on the same atoms, every divergence is a
//! computation on the two weight sequences. Besides the direct sums, the
//! rearranged forms in terms of the length variables are provided:
//!
//! ```text
//! KL(P ‖ P') = Σ_n [∏_{j<n} (1 − v_j)] d(v_n ‖ v)
//! KL(P' ‖ P) = Σ_n (1 − v)^{n−1} d(v ‖ v_n)
//! ```
//!
//! where P' is geometric with length v and d is the Bernoulli divergence.

use crate::error::{require_open_unit, Error, Result};
use crate::stick::{LengthSequence, WeightSequence};
use crate::sum::CompensatedSum;

/// KL divergence between Bernoulli(p) and Bernoulli(q).
pub fn binary_divergence(p: f64, q: f64) -> Result<f64> {
    require_open_unit("p", p)?;
    require_open_unit("q", q)?;
    Ok(binary_divergence_unchecked(p, q))
}

#[inline]
pub(crate) fn binary_divergence_unchecked(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    let delta = p - q;
    let d = p * (delta / q).ln_1p() + (1.0 - p) * (-delta / (1.0 - q)).ln_1p();
    d.max(0.0)
}

/// Truncated direct KL divergence, with the residual masses kept apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedKl {
    /// Σ_{n≤N} w_n log(w_n / w'_n).
    pub divergence: f64,
    /// Residual mass of the first measure.
    pub residual: f64,
    /// Residual mass of the reference measure.
    pub residual_ref: f64,
    /// r log(r / r'): the contribution of the residuals when each is
    /// treated as one extra atom.
    pub residual_term: f64,
}

impl TruncatedKl {
    /// KL divergence between the (N+1)-atom coarsenings of both measures.
    pub fn coarse(&self) -> f64 {
        self.divergence + self.residual_term
    }
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Config(format!("truncation lengths differ: {a} vs {b}")))
    }
}

/// Σ_{n≤N} w_n log(w_n / w'_n) with 0 · log 0 = 0.
///
/// Infinite when some w'_n = 0 while w_n > 0. Computed from the stored log
/// weights so deep sticks that underflow in linear space still compare.
pub fn kl_direct(w: &WeightSequence, w_ref: &WeightSequence) -> Result<TruncatedKl> {
    check_same_len(w.len(), w_ref.len())?;
    let mut sum = CompensatedSum::new();
    let mut infinite = false;
    for n in 0..w.len() {
        let (wn, lw) = (w.weights[n], w.log_weights[n]);
        if lw == f64::NEG_INFINITY || wn == 0.0 {
            continue;
        }
        let lr = w_ref.log_weights[n];
        if lr == f64::NEG_INFINITY {
            infinite = true;
            continue;
        }
        sum.add(wn * (lw - lr));
    }
    let residual_term = if w.residual == 0.0 || w.log_residual == f64::NEG_INFINITY {
        0.0
    } else if w_ref.log_residual == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        w.residual * (w.log_residual - w_ref.log_residual)
    };
    Ok(TruncatedKl {
        divergence: if infinite { f64::INFINITY } else { sum.value() },
        residual: w.residual,
        residual_ref: w_ref.residual,
        residual_term,
    })
}

/// Σ_{n≤N} [∏_{j<n} (1 − v_j)] d(v_n ‖ v): KL of the stick-breaking measure
/// with lengths `lengths` from the geometric measure with length `v`.
pub fn kl_forward_pathwise(lengths: &LengthSequence, v: f64) -> Result<f64> {
    require_open_unit("v", v)?;
    Ok(kl_forward_unchecked(lengths.values(), v))
}

pub(crate) fn kl_forward_unchecked(lengths: &[f64], v: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut survival = 1.0;
    for &vn in lengths {
        if survival == 0.0 {
            break;
        }
        sum.add(survival * binary_divergence_unchecked(vn, v));
        survival *= 1.0 - vn;
    }
    sum.value()
}

/// Σ_{n≤N} (1 − v)^{n−1} d(v ‖ v_n): KL of the geometric measure with length
/// `v` from the stick-breaking measure with lengths `lengths`.
pub fn kl_reverse_pathwise(v: f64, lengths: &LengthSequence) -> Result<f64> {
    require_open_unit("v", v)?;
    Ok(kl_reverse_unchecked(v, lengths.values()))
}

pub(crate) fn kl_reverse_unchecked(v: f64, lengths: &[f64]) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut survival = 1.0;
    let shrink = 1.0 - v;
    for &vn in lengths {
        if survival == 0.0 {
            break;
        }
        sum.add(survival * binary_divergence_unchecked(v, vn));
        survival *= shrink;
    }
    sum.value()
}

/// ½ Σ |w_n − w'_n| + ½ |r − r'|.
pub fn total_variation(w: &WeightSequence, w_ref: &WeightSequence) -> Result<f64> {
    check_same_len(w.len(), w_ref.len())?;
    let mut sum: CompensatedSum = w
        .weights
        .iter()
        .zip(&w_ref.weights)
        .map(|(a, b)| (a - b).abs())
        .collect();
    sum.add((w.residual - w_ref.residual).abs());
    Ok((0.5 * sum.value()).min(1.0))
}

/// Outcome of a Pinsker check on one pair of measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerCheck {
    pub total_variation: f64,
    pub kl: f64,
    pub holds: bool,
}

/// TV ≤ sqrt(KL / 2), evaluated on the (N+1)-atom coarsenings of both
/// measures (tail atoms merged into the residual). Coarsening cannot raise
/// the divergence, so a violation here is a genuine one.
pub fn pinsker_check(w: &WeightSequence, w_ref: &WeightSequence) -> Result<PinskerCheck> {
    let tv = total_variation(w, w_ref)?;
    let kl = kl_direct(w, w_ref)?.coarse().max(0.0);
    let holds = tv <= (kl / 2.0).sqrt() + 1e-12;
    Ok(PinskerCheck {
        total_variation: tv,
        kl,
        holds,
    })
}
