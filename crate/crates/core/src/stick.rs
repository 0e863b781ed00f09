//! Length variables and stick-breaking weights.
//!
//! Three length models are supported: the Dirichlet process (iid Be(1, θ)
//! lengths), the geometric process (one Be(a, b) length repeated), and
//! exchangeable lengths driven by a Dirichlet process with concentration β
//! and base measure Be(1, θ), sampled through its Pólya urn.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{require_positive, Error, Result};

/// Default truncation level for sampled sequences.
pub const DEFAULT_TRUNCATION: usize = 300;

/// Sampled lengths are clamped to `[LENGTH_EPS, 1 - LENGTH_EPS]`.
pub const LENGTH_EPS: f64 = 1e-15;

/// Prefix products below this switch to log-space accumulation.
const LOG_SPACE_THRESHOLD: f64 = 1e-300;

/// Which stick-breaking prior generated a length sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// Dirichlet process with mass parameter θ.
    Dp { theta: f64 },
    /// Geometric process with shared length v ~ Be(a, b).
    Geometric { a: f64, b: f64 },
    /// Exchangeable lengths driven by DP(β, Be(1, θ)).
    ExchangeableDp { beta: f64, theta: f64 },
}

impl ModelSpec {
    pub fn dp(theta: f64) -> Result<Self> {
        require_positive("theta", theta)?;
        Ok(ModelSpec::Dp { theta })
    }

    pub fn geometric(a: f64, b: f64) -> Result<Self> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        Ok(ModelSpec::Geometric { a, b })
    }

    pub fn exchangeable_dp(beta: f64, theta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                requirement: "must be nonnegative and finite",
            });
        }
        require_positive("theta", theta)?;
        Ok(ModelSpec::ExchangeableDp { beta, theta })
    }

    /// Re-checks the parameter invariants; used for values built by hand.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Dp { theta } => ModelSpec::dp(theta).map(|_| ()),
            ModelSpec::Geometric { a, b } => ModelSpec::geometric(a, b).map(|_| ()),
            ModelSpec::ExchangeableDp { beta, theta } => ModelSpec::exchangeable_dp(beta, theta).map(|_| ()),
        }
    }

    /// Probability that two length variables coincide.
    pub fn tie_probability(&self) -> f64 {
        match *self {
            ModelSpec::Dp { .. } => 0.0,
            ModelSpec::Geometric { .. } => 1.0,
            ModelSpec::ExchangeableDp { beta, .. } => 1.0 / (1.0 + beta),
        }
    }

    /// Draws a length sequence of size `n` from this model.
    pub fn sample_lengths<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<LengthSequence> {
        match *self {
            ModelSpec::Dp { theta } => sample_dp_lengths(theta, n, rng),
            ModelSpec::Geometric { a, b } => sample_geometric_lengths(a, b, n, rng),
            ModelSpec::ExchangeableDp { beta, theta } => sample_exchangeable_dp_lengths(beta, theta, n, rng),
        }
    }
}

/// Whether a geometric comparator reuses v₁ of the other process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// The comparator's v is set to v₁ of the other process.
    Coupled,
    /// The comparator's v is drawn independently from Be(a, b).
    #[default]
    Uncoupled,
}

/// Truncated sequence of length variables v₁..v_N, each inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSequence {
    values: Vec<f64>,
    model: ModelSpec,
}

impl LengthSequence {
    /// Wraps explicit values. Every value must lie strictly inside (0, 1).
    pub fn new(values: Vec<f64>, model: ModelSpec) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("length sequence must be nonempty".into()));
        }
        for &v in &values {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain {
                    name: "length",
                    value: v,
                    requirement: "must lie strictly inside (0, 1)",
                });
            }
        }
        if let ModelSpec::Geometric { .. } = model {
            if values.iter().any(|&v| v != values[0]) {
                return Err(Error::Config("geometric lengths must all be equal".into()));
            }
        }
        Ok(LengthSequence { values, model })
    }

    /// N copies of `v`, tagged as a geometric process with parameters (a, b).
    pub fn constant(v: f64, n: usize, a: f64, b: f64) -> Result<Self> {
        LengthSequence::new(vec![v; n], ModelSpec::geometric(a, b)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> ModelSpec {
        self.model
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }
}

/// Stick-breaking weights w₁..w_N together with the unassigned mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    pub weights: Vec<f64>,
    /// log w_n; stays finite where `weights` underflows to zero.
    pub log_weights: Vec<f64>,
    /// 1 − Σ w_n = ∏ (1 − v_j).
    pub residual: f64,
    pub log_residual: f64,
}

impl WeightSequence {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Builds the weights of a probability vector with explicitly given
    /// residual; used for hand-made measures.
    pub fn from_weights(weights: Vec<f64>, residual: f64) -> Self {
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        WeightSequence {
            weights,
            log_weights,
            residual,
            log_residual: residual.ln(),
        }
    }
}

/// w₁ = v₁, w_n = v_n ∏_{j<n} (1 − v_j).
pub fn weights_from_lengths(lengths: &LengthSequence) -> WeightSequence {
    let n = lengths.len();
    let mut weights = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    let mut prefix = 1.0;
    let mut log_prefix = 0.0;
    let mut in_log_space = false;
    for &v in lengths.values() {
        let log_v = v.ln();
        if in_log_space {
            let lw = log_v + log_prefix;
            log_weights.push(lw);
            weights.push(lw.exp());
        } else {
            let w = v * prefix;
            weights.push(w);
            log_weights.push(log_v + log_prefix);
        }
        log_prefix += (-v).ln_1p();
        if !in_log_space {
            prefix *= 1.0 - v;
            if prefix < LOG_SPACE_THRESHOLD {
                in_log_space = true;
            }
        }
    }
    let residual = if in_log_space { log_prefix.exp() } else { prefix };
    WeightSequence {
        weights,
        log_weights,
        residual,
        log_residual: log_prefix,
    }
}

/// ∏_{j≤k} (1 − v_j), the mass left after the first k sticks.
pub fn tail_mass(lengths: &LengthSequence, k: usize) -> Result<f64> {
    if k > lengths.len() {
        return Err(Error::Index {
            index: k,
            len: lengths.len(),
        });
    }
    Ok(lengths.values()[..k].iter().map(|v| 1.0 - v).product())
}

fn clamp_length(v: f64) -> f64 {
    v.clamp(LENGTH_EPS, 1.0 - LENGTH_EPS)
}

/// One draw from Be(a, b), clamped into the open unit interval.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    Ok(sample_beta_unchecked(a, b, rng))
}

pub(crate) fn sample_beta_unchecked<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let v = if a == 1.0 {
        // Inverse CDF of Be(1, b): v = 1 − U^{1/b}, with U in (0, 1].
        let u: f64 = 1.0 - rng.random::<f64>();
        -(u.ln() / b).exp_m1()
    } else {
        let x = Gamma::new(a, 1.0).expect("validated shape").sample(rng);
        let y = Gamma::new(b, 1.0).expect("validated shape").sample(rng);
        if x + y > 0.0 {
            x / (x + y)
        } else {
            0.5
        }
    };
    clamp_length(v)
}

/// N iid Be(1, θ) lengths.
pub fn sample_dp_lengths<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Result<LengthSequence> {
    let model = ModelSpec::dp(theta)?;
    require_len(n)?;
    let values = (0..n).map(|_| sample_beta_unchecked(1.0, theta, rng)).collect();
    Ok(LengthSequence { values, model })
}

/// One v ~ Be(a, b) repeated N times.
pub fn sample_geometric_lengths<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<LengthSequence> {
    let model = ModelSpec::geometric(a, b)?;
    require_len(n)?;
    let v = sample_beta_unchecked(a, b, rng);
    Ok(LengthSequence {
        values: vec![v; n],
        model,
    })
}

/// Exchangeable lengths from the Pólya urn of DP(β, Be(1, θ)).
pub fn sample_exchangeable_dp_lengths<R: Rng + ?Sized>(
    beta: f64,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<LengthSequence> {
    let model = ModelSpec::exchangeable_dp(beta, theta)?;
    require_len(n)?;
    let mut urn = PolyaUrn::new(beta);
    let values = (0..n)
        .map(|_| urn.draw(rng, |r| sample_beta_unchecked(1.0, theta, r)))
        .collect();
    Ok(LengthSequence { values, model })
}

fn require_len(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Config("truncation level must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Blackwell–MacQueen urn over distinct values and their multiplicities.
#[derive(Debug, Clone)]
pub struct PolyaUrn {
    beta: f64,
    distinct: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl PolyaUrn {
    pub fn new(beta: f64) -> Self {
        PolyaUrn {
            beta,
            distinct: Vec::new(),
            counts: Vec::new(),
            total: 0,
        }
    }

    /// After i draws, repeats an old value with probability i/(β+i),
    /// otherwise takes a fresh value from `base`.
    pub fn draw<R, F>(&mut self, rng: &mut R, base: F) -> f64
    where
        R: Rng + ?Sized,
        F: FnOnce(&mut R) -> f64,
    {
        let i = self.total as f64;
        let fresh = self.total == 0 || rng.random::<f64>() * (self.beta + i) < self.beta;
        let value = if fresh {
            let v = base(rng);
            self.distinct.push(v);
            self.counts.push(1);
            v
        } else {
            let mut pick = rng.random_range(0..self.total);
            let mut slot = 0;
            while pick >= self.counts[slot] {
                pick -= self.counts[slot];
                slot += 1;
            }
            self.counts[slot] += 1;
            self.distinct[slot]
        };
        self.total += 1;
        value
    }

    /// Number of distinct values seen so far.
    pub fn clusters(&self) -> usize {
        self.distinct.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn dp_tag() -> ModelSpec {
        ModelSpec::Dp { theta: 1.0 }
    }

    #[test]
    fn halving_sticks() {
        let l = LengthSequence::new(vec![0.5; 3], dp_tag()).unwrap();
        let w = weights_from_lengths(&l);
        assert_eq!(w.weights, vec![0.5, 0.25, 0.125]);
        assert_eq!(w.residual, 0.125);
    }

    #[test]
    fn hand_computed_weights() {
        let l = LengthSequence::new(vec![0.2, 0.5, 0.25], dp_tag()).unwrap();
        let w = weights_from_lengths(&l);
        let want = [0.2, 0.4, 0.1];
        for (got, want) in w.weights.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((w.residual - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_first_stick() {
        let l = LengthSequence::new(vec![1.0 - LENGTH_EPS, 0.3, 0.3], dp_tag()).unwrap();
        let w = weights_from_lengths(&l);
        assert!((w.weights[0] - 1.0).abs() < 1e-14);
        assert!(w.residual < 1e-14);
    }

    #[test]
    fn log_space_prefix_keeps_log_weights_finite() {
        let l = LengthSequence::new(vec![0.999_999; 200], dp_tag()).unwrap();
        let w = weights_from_lengths(&l);
        assert!(w.log_weights.iter().all(|x| x.is_finite()));
        assert!(w.log_residual.is_finite());
        let expected = 199.0 * (1e-6f64).ln() + 0.999_999f64.ln();
        assert!((w.log_weights[199] - expected).abs() < 1e-8);
    }

    #[test]
    fn invalid_lengths_rejected() {
        assert!(LengthSequence::new(vec![0.0], dp_tag()).is_err());
        assert!(LengthSequence::new(vec![1.0], dp_tag()).is_err());
        assert!(LengthSequence::new(vec![], dp_tag()).is_err());
        assert!(LengthSequence::new(vec![0.2, 0.3], ModelSpec::Geometric { a: 1.0, b: 1.0 }).is_err());
        assert!(ModelSpec::dp(0.0).is_err());
        assert!(ModelSpec::geometric(1.0, -1.0).is_err());
        assert!(ModelSpec::exchangeable_dp(-0.1, 1.0).is_err());
        assert!(ModelSpec::exchangeable_dp(0.0, 1.0).is_ok());
    }

    #[test]
    fn tail_mass_cases() {
        let l = LengthSequence::new(vec![0.5; 3], dp_tag()).unwrap();
        assert_eq!(tail_mass(&l, 0).unwrap(), 1.0);
        assert_eq!(tail_mass(&l, 3).unwrap(), 0.125);
        assert!(matches!(tail_mass(&l, 4), Err(Error::Index { index: 4, len: 3 })));
    }

    #[test]
    fn geometric_lengths_are_constant() {
        let mut r = rng(3);
        let l = sample_geometric_lengths(2.0, 3.0, 50, &mut r).unwrap();
        let v = l.first();
        assert!(l.values().iter().all(|&x| x == v));
        let w = weights_from_lengths(&l);
        for (n, &wn) in w.weights.iter().enumerate() {
            let want = v * (1.0 - v).powi(n as i32);
            assert!((wn - want).abs() <= 1e-13 * want);
        }
    }

    #[test]
    fn beta_zero_gives_constant_sequence() {
        let mut r = rng(9);
        let l = sample_exchangeable_dp_lengths(0.0, 2.0, 100, &mut r).unwrap();
        assert!(l.values().iter().all(|&x| x == l.first()));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_exchangeable_dp_lengths(1.5, 3.0, 300, &mut rng(77)).unwrap();
        let b = sample_exchangeable_dp_lengths(1.5, 3.0, 300, &mut rng(77)).unwrap();
        assert_eq!(a, b);
        let a = sample_dp_lengths(3.0, 300, &mut rng(78)).unwrap();
        let b = sample_dp_lengths(3.0, 300, &mut rng(78)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_truncation_rejected() {
        assert!(sample_dp_lengths(1.0, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn urn_cluster_count_grows_slowly() {
        let mut r = rng(1);
        let mut urn = PolyaUrn::new(2.0);
        for _ in 0..1000 {
            urn.draw(&mut r, |r| r.random::<f64>());
        }
        // E[K_n] = Σ β/(β+i) ≈ 2 log(500) ≈ 12.4
        assert!(urn.clusters() > 3 && urn.clusters() < 40);
    }
}
