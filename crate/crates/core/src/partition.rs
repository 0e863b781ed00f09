//! Set partitions, the Dirichlet-process EPPF, and the partition-sum
//! expression for D_θ(β) = E[KL(P_β ‖ P')], where P_β has exchangeable
//! lengths driven by DP(β, Be(1, θ)) and P' is geometric with v = v₁.
//!
//! For a partition π of {1..n} into tie blocks, the n-th summand of the
//! pathwise divergence has expectation F_θ(π). Writing A₁ for the block of
//! 1 and A_k for the block of n, F_θ(π) vanishes when they coincide and
//! otherwise factorizes as
//!
//! ```text
//! F_θ(π) = ∏_{other blocks A} θ/(θ+|A|) · E[(1−V)^{|A₁|} (1−V')^{|A_k|−1} d(V' ‖ V)]
//! ```
//!
//! with V, V' iid Be(1, θ).

use crate::error::{require_positive, Error, Result};
use crate::special::{log_beta_ratio, log_rising_unchecked, weighted_unchecked, LogMomentKind};

/// Largest n accepted by the enumeration and the partition sum.
pub const MAX_PARTITION_N: usize = 13;

/// Partition of {1..n} into nonempty blocks, ordered by least element, with
/// the elements of each block sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl SetPartition {
    /// Canonicalizes and validates blocks of 1-based elements.
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::Config("partition blocks must be nonempty".into()));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let n: usize = blocks.iter().map(Vec::len).sum();
        if n == 0 {
            return Err(Error::Config("partition must cover at least one element".into()));
        }
        let mut seen = vec![false; n + 1];
        for &x in blocks.iter().flatten() {
            if x == 0 || x > n || seen[x] {
                return Err(Error::Config(format!("blocks do not partition {{1..{n}}}")));
            }
            seen[x] = true;
        }
        Ok(SetPartition { blocks, n })
    }

    /// Builds the partition encoded by a restricted-growth string, where
    /// `rgs[i]` is the block of element i + 1.
    pub fn from_rgs(rgs: &[usize]) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &b) in rgs.iter().enumerate() {
            if b == blocks.len() {
                blocks.push(Vec::new());
            } else if b > blocks.len() {
                return Err(Error::Config("not a restricted-growth string".into()));
            }
            blocks[b].push(i + 1);
        }
        if blocks.is_empty() {
            return Err(Error::Config("empty restricted-growth string".into()));
        }
        Ok(SetPartition { n: rgs.len(), blocks })
    }

    /// The one-block partition 1_n.
    pub fn one_block(n: usize) -> Self {
        SetPartition {
            blocks: vec![(1..=n).collect()],
            n,
        }
    }

    /// The all-singletons partition 0_n.
    pub fn singletons(n: usize) -> Self {
        SetPartition {
            blocks: (1..=n).map(|i| vec![i]).collect(),
            n,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Index of the block containing element `x` (1-based element).
    pub fn block_of(&self, x: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&x).is_ok())
    }
}

/// Iterator over all partitions of {1..n} via restricted-growth strings.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    rgs: Vec<usize>,
    /// prefix_max[i] = max(rgs[0..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl Iterator for PartitionIter {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let out = SetPartition::from_rgs(&self.rgs).expect("valid restricted-growth string");
        // Advance: rightmost position that can still grow.
        let n = self.rgs.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every partition of {1..n} exactly once, in canonical form.
pub fn enumerate_partitions(n: usize) -> Result<PartitionIter> {
    check_n(n)?;
    Ok(PartitionIter {
        rgs: vec![0; n],
        prefix_max: vec![0; n],
        done: false,
    })
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    if n > MAX_PARTITION_N {
        return Err(Error::Size {
            requested: n,
            max: MAX_PARTITION_N,
        });
    }
    Ok(())
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Probability of the tie pattern `partition` under DP(β):
/// β^k / β⁽ⁿ⁾ · ∏ (|A_j| − 1)!.
pub fn eppf_dp(partition: &SetPartition, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    let log_p = partition.k() as f64 * beta.ln() - log_rising_unchecked(beta, partition.n() as u64)
        + partition.blocks().iter().map(|b| ln_factorial(b.len() - 1)).sum::<f64>();
    Ok(log_p.exp())
}

/// E[(1−V)^p (1−V')^q d(V' ‖ V)] for V, V' iid Be(1, θ).
pub(crate) fn coupled_block_expectation(theta: f64, p: usize, q: usize) -> f64 {
    let (pf, qf) = (p as f64, q as f64);
    let w = |c: f64, d: f64, kind| weighted_unchecked(1.0, theta, c, d, kind);
    // E[(1−V')^q (V' log V' + (1−V') log(1−V'))]
    let self_entropy = w(1.0, qf, LogMomentKind::LogX) + w(0.0, qf + 1.0, LogMomentKind::Log1mX);
    let surv_p = theta / (theta + pf);
    let v_weight = log_beta_ratio(1.0, theta, 1.0, qf).exp();
    let surv_q1 = theta / (theta + qf + 1.0);
    surv_p * self_entropy
        - v_weight * w(0.0, pf, LogMomentKind::LogX)
        - surv_q1 * w(0.0, pf, LogMomentKind::Log1mX)
}

/// F_θ(π): expected n-th summand of the pathwise divergence given the tie
/// pattern π, with the geometric comparator coupled to v₁.
pub fn f_theta(partition: &SetPartition, theta: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    let n = partition.n();
    let first = 0; // canonical order puts element 1 in the first block
    let last = partition.block_of(n).expect("n belongs to some block");
    if last == first {
        return Ok(0.0);
    }
    let middle: f64 = partition
        .blocks()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != first && i != last)
        .map(|(_, b)| theta / (theta + b.len() as f64))
        .product();
    let p = partition.blocks()[first].len();
    let q = partition.blocks()[last].len() - 1;
    Ok(middle * coupled_block_expectation(theta, p, q))
}

/// Truncated partition sum for D_θ(β).
#[derive(Debug, Clone, PartialEq)]
pub struct DthetaPartitionSum {
    /// Σ_{n ≤ n_max} level n.
    pub value: f64,
    /// Level n_max, as a truncation diagnostic.
    pub last_level: f64,
    /// levels[i] = Σ_{π ∈ P([i+1])} F_θ(π) p_β(π).
    pub levels: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(m: usize) -> f64 {
    (2..=m).map(|i| i as f64).product()
}

/// Σ_{π ∈ P([n])} F_θ(π) p_β(π) for each n = 1..=n_max.
///
/// F_θ p_β depends only on |A₁|, on the size of n's block, and on the
/// multiset of the remaining block sizes. Partitions are therefore counted by
/// (|A₁|, |A_k|) with binomial multiplicities, and the remaining blocks are
/// summed with the exponential-formula recurrence
/// g(m) = Σ_s C(m−1, s−1) h(s) g(m−s), h(s) = β (s−1)! θ/(θ+s).
pub fn dtheta_levels(theta: f64, beta: f64, n_max: usize) -> Result<Vec<f64>> {
    require_positive("theta", theta)?;
    require_positive("beta", beta)?;
    check_n(n_max)?;
    let h = |s: usize| beta * factorial(s - 1) * theta / (theta + s as f64);
    let mut g = vec![0.0; n_max + 1];
    g[0] = 1.0;
    for m in 1..=n_max {
        g[m] = (1..=m).map(|s| binomial(m - 1, s - 1) * h(s) * g[m - s]).sum();
    }
    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let log_rising = log_rising_unchecked(beta, n as u64);
        let mut level = 0.0;
        for s1 in 1..n {
            for sk in 1..=(n - s1) {
                let count = binomial(n - 2, s1 - 1) * binomial(n - 1 - s1, sk - 1);
                let ends = beta * beta * factorial(s1 - 1) * factorial(sk - 1);
                let inner = coupled_block_expectation(theta, s1, sk - 1);
                level += count * ends * inner * g[n - s1 - sk];
            }
        }
        levels.push(level * (-log_rising).exp());
    }
    Ok(levels)
}

/// D_θ(β) truncated after the n_max level.
pub fn dtheta_partition_sum(theta: f64, beta: f64, n_max: usize) -> Result<DthetaPartitionSum> {
    let levels = dtheta_levels(theta, beta, n_max)?;
    Ok(DthetaPartitionSum {
        value: levels.iter().sum(),
        last_level: *levels.last().expect("n_max >= 1"),
        levels,
    })
}
