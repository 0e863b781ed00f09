//! Seeded, parallel replication of random divergences.
//!
//! Replicate r draws from the ChaCha stream r of the generator seeded with
//! the experiment seed, so its value depends only on (seed, r). Replicates
//! are grouped in fixed-size chunks and the chunk accumulators are merged in
//! index order, which makes every result independent of the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::{dtheta_upper_bound, variance_kl_coupled, variance_kl_uncoupled};
use crate::divergence::{kl_direct, kl_forward_unchecked, kl_reverse_unchecked, pinsker_check};
use crate::error::{require_positive, Error, Result};
use crate::stick::{weights_from_lengths, Coupling, LengthSequence, ModelSpec, DEFAULT_TRUNCATION};

pub const DEFAULT_REPS: usize = 100_000;
pub const DEFAULT_TRACE_STRIDE: usize = 100;

const CHUNK: usize = 1024;

/// Count, mean and sum of squared deviations of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Sample variance m2 / (count − 1); NaN below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// sqrt(variance / count).
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Chan et al. pairwise combination of two accumulators.
pub fn merge_stats(s1: RunningStats, s2: RunningStats) -> RunningStats {
    if s1.count == 0 {
        return s2;
    }
    if s2.count == 0 {
        return s1;
    }
    let count = s1.count + s2.count;
    let (n1, n2, n) = (s1.count as f64, s2.count as f64, count as f64);
    let delta = s2.mean - s1.mean;
    RunningStats {
        count,
        mean: s1.mean + delta * (n2 / n),
        m2: s1.m2 + s2.m2 + delta * delta * (n1 * n2 / n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// KL(P ‖ Q) for config models P = model_p, Q = model_q.
    #[default]
    Forward,
    /// KL(Q ‖ P).
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model_p: ModelSpec,
    pub model_q: ModelSpec,
    pub direction: Direction,
    pub coupling: Coupling,
    pub reps: usize,
    pub trunc: usize,
    pub seed: u64,
    pub trace_stride: usize,
    /// Thread count; `None` uses rayon's global pool.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(model_p: ModelSpec, model_q: ModelSpec) -> Self {
        ExperimentConfig {
            model_p,
            model_q,
            direction: Direction::Forward,
            coupling: Coupling::Uncoupled,
            reps: DEFAULT_REPS,
            trunc: DEFAULT_TRUNCATION,
            seed: 0,
            trace_stride: DEFAULT_TRACE_STRIDE,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_p.validate()?;
        self.model_q.validate()?;
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.trunc == 0 {
            return Err(Error::Config("trunc must be at least 1".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::Config("trace_stride must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.coupling == Coupling::Coupled && is_geometric(&self.model_p) == is_geometric(&self.model_q) {
            return Err(Error::Config(
                "coupling needs exactly one geometric model to receive v1 of the other".into(),
            ));
        }
        Ok(())
    }
}

fn is_geometric(m: &ModelSpec) -> bool {
    matches!(m, ModelSpec::Geometric { .. })
}

/// Generator for replicate `rep` of an experiment seeded with `seed`.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// 1-based replicate index.
    pub rep: usize,
    pub kl: f64,
    pub cum_mean: f64,
}

/// Pinsker inequality checks over all sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PinskerSummary {
    pub checked: u64,
    pub violations: u64,
    /// Largest TV − sqrt(KL/2) seen.
    pub max_excess: f64,
}

impl PinskerSummary {
    fn merge(self, other: PinskerSummary) -> PinskerSummary {
        if self.checked == 0 {
            return other;
        }
        if other.checked == 0 {
            return self;
        }
        PinskerSummary {
            checked: self.checked + other.checked,
            violations: self.violations + other.violations,
            max_excess: self.max_excess.max(other.max_excess),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlExperiment {
    pub stats: RunningStats,
    /// Cumulative mean every `trace_stride` replicates, plus the last one.
    pub trace: Vec<TracePoint>,
    /// Divergence of every replicate, by index.
    pub values: Vec<f64>,
    pub pinsker: PinskerSummary,
}

impl KlExperiment {
    /// Standard error of the sample variance, from the fourth central moment.
    pub fn variance_std_error(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.stats.mean;
        let (m2, m4) = self.values.iter().fold((0.0, 0.0), |(a, b), &x| {
            let d = (x - mean) * (x - mean);
            (a + d, b + d * d)
        });
        let (m2, m4) = (m2 / n, m4 / n);
        ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }
}

struct Replicate {
    kl: f64,
    tv: f64,
    pinsker_kl: f64,
}

fn sample_pair(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<(LengthSequence, LengthSequence)> {
    let n = cfg.trunc;
    match cfg.coupling {
        Coupling::Uncoupled => {
            let p = cfg.model_p.sample_lengths(n, rng)?;
            let q = cfg.model_q.sample_lengths(n, rng)?;
            Ok((p, q))
        }
        Coupling::Coupled => {
            let coupled = |free: &ModelSpec, geo: &ModelSpec, rng: &mut ChaCha8Rng| -> Result<_> {
                let l = free.sample_lengths(n, rng)?;
                let ModelSpec::Geometric { a, b } = *geo else {
                    unreachable!("validated")
                };
                let g = LengthSequence::constant(l.first(), n, a, b)?;
                Ok((l, g))
            };
            if is_geometric(&cfg.model_q) {
                coupled(&cfg.model_p, &cfg.model_q, rng)
            } else {
                let (l, g) = coupled(&cfg.model_q, &cfg.model_p, rng)?;
                Ok((g, l))
            }
        }
    }
}

fn run_replicate(cfg: &ExperimentConfig, rep: usize) -> Result<Replicate> {
    let mut rng = replicate_rng(cfg.seed, rep as u64);
    let (p, q) = sample_pair(cfg, &mut rng)?;
    let (from, to) = match cfg.direction {
        Direction::Forward => (&p, &q),
        Direction::Reverse => (&q, &p),
    };
    let wf = weights_from_lengths(from);
    let wt = weights_from_lengths(to);
    let kl = if is_geometric(&to.model()) {
        kl_forward_unchecked(from.values(), to.first())
    } else if is_geometric(&from.model()) {
        kl_reverse_unchecked(from.first(), to.values())
    } else {
        kl_direct(&wf, &wt)?.divergence
    };
    let check = pinsker_check(&wf, &wt)?;
    Ok(Replicate {
        kl,
        tv: check.total_variation,
        pinsker_kl: check.kl,
    })
}

struct ChunkResult {
    stats: RunningStats,
    pinsker: PinskerSummary,
    values: Vec<f64>,
}

fn run_chunk(cfg: &ExperimentConfig, start: usize, end: usize) -> Result<ChunkResult> {
    let mut stats = RunningStats::new();
    let mut pinsker = PinskerSummary::default();
    let mut values = Vec::with_capacity(end - start);
    for rep in start..end {
        let r = run_replicate(cfg, rep)?;
        stats.push(r.kl);
        values.push(r.kl);
        let excess = r.tv - (r.pinsker_kl / 2.0).sqrt();
        let one = PinskerSummary {
            checked: 1,
            violations: u64::from(excess > 1e-12),
            max_excess: excess,
        };
        pinsker = pinsker.merge(one);
    }
    Ok(ChunkResult { stats, pinsker, values })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `config.reps` replicates of the configured pathwise divergence.
///
/// When `to` (the second argument of KL) is geometric the forward pathwise
/// sum is used; when `from` is geometric, the reverse one; otherwise the
/// truncated direct sum over weights.
pub fn run_kl_experiment(config: &ExperimentConfig) -> Result<KlExperiment> {
    config.validate()?;
    let chunks: Vec<(usize, usize)> = (0..config.reps)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(config.reps)))
        .collect();
    let results: Vec<Result<ChunkResult>> = with_workers(config.workers, || {
        chunks.par_iter().map(|&(s, e)| run_chunk(config, s, e)).collect()
    })?;
    let mut stats = RunningStats::new();
    let mut pinsker = PinskerSummary::default();
    let mut values = Vec::with_capacity(config.reps);
    for r in results {
        let r = r?;
        stats = merge_stats(stats, r.stats);
        pinsker = pinsker.merge(r.pinsker);
        values.extend(r.values);
    }
    let trace = cumulative_trace(&values, config.trace_stride);
    Ok(KlExperiment {
        stats,
        trace,
        values,
        pinsker,
    })
}

/// Cumulative means at replicates stride, 2·stride, … and at the last one.
pub fn cumulative_trace(values: &[f64], stride: usize) -> Vec<TracePoint> {
    let mut running = RunningStats::new();
    let mut out = Vec::with_capacity(values.len() / stride.max(1) + 1);
    for (i, &x) in values.iter().enumerate() {
        running.push(x);
        let rep = i + 1;
        if rep % stride.max(1) == 0 || rep == values.len() {
            out.push(TracePoint {
                rep,
                kl: x,
                cum_mean: running.mean,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePoint {
    pub theta: f64,
    pub mc_variance: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub pinsker: PinskerSummary,
}

/// Options shared by the curve runners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub reps: usize,
    pub trunc: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            reps: DEFAULT_REPS,
            trunc: DEFAULT_TRUNCATION,
            seed: 0,
            workers: None,
        }
    }
}

impl CurveOptions {
    fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        cfg.reps = self.reps;
        cfg.trunc = self.trunc;
        cfg.seed = self.seed;
        cfg.workers = self.workers;
        cfg.trace_stride = self.reps.max(1);
        cfg
    }
}

/// Sample variance of KL(DP(θ) ‖ geometric(1, θ)) over a grid of θ, next to
/// the closed form. Every grid point reuses the same seed.
pub fn run_variance_curve(theta_grid: &[f64], coupling: Coupling, opts: CurveOptions) -> Result<Vec<VariancePoint>> {
    theta_grid
        .iter()
        .map(|&theta| {
            require_positive("theta", theta)?;
            let mut cfg = opts.apply(ExperimentConfig::new(ModelSpec::dp(theta)?, ModelSpec::geometric(1.0, theta)?));
            cfg.coupling = coupling;
            let run = run_kl_experiment(&cfg)?;
            let closed_form = match coupling {
                Coupling::Coupled => variance_kl_coupled(theta)?,
                Coupling::Uncoupled => variance_kl_uncoupled(theta, 1.0, theta)?,
            };
            Ok(VariancePoint {
                theta,
                mc_variance: run.stats.variance(),
                std_error: run.variance_std_error(),
                closed_form,
                pinsker: run.pinsker,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DthetaPoint {
    pub beta: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Present only for β > θ + 1.
    pub upper_bound: Option<f64>,
    pub pinsker: PinskerSummary,
}

/// Monte Carlo D_θ(β) = E[KL(P_β ‖ P')] with exchangeable lengths from
/// DP(β, Be(1, θ)) and the geometric comparator coupled to v₁.
pub fn run_dtheta_curve(theta: f64, beta_grid: &[f64], opts: CurveOptions) -> Result<Vec<DthetaPoint>> {
    require_positive("theta", theta)?;
    beta_grid
        .iter()
        .map(|&beta| {
            let mut cfg = opts.apply(ExperimentConfig::new(
                ModelSpec::exchangeable_dp(beta, theta)?,
                ModelSpec::geometric(1.0, theta)?,
            ));
            cfg.coupling = Coupling::Coupled;
            let run = run_kl_experiment(&cfg)?;
            let stderr = if run.stats.count < 2 { 0.0 } else { run.stats.std_error() };
            Ok(DthetaPoint {
                beta,
                estimate: run.stats.mean,
                stderr,
                upper_bound: dtheta_upper_bound(theta, beta).ok(),
                pinsker: run.pinsker,
            })
        })
        .collect()
}
