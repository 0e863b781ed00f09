//! Random Kullback-Leibler divergences between stick-breaking priors.
//!
//! Samplers for Dirichlet, geometric and exchangeable Dirichlet-driven
//! length sequences, pathwise divergences, closed-form moments, a partition
//! engine for the exchangeable model, and a seeded parallel Monte Carlo
//! harness.

pub mod cli;
pub mod closed_form;
pub mod divergence;
pub mod error;
pub mod monte_carlo;
pub mod partition;
pub mod special;
pub mod stick;
pub mod sum;

pub use closed_form::{
    dtheta_upper_bound, expected_binary_divergence, expected_kl_coupled, expected_kl_reversed,
    expected_kl_uncoupled, series_inverse_rising, series_quotient_rising, variance_kl_coupled,
    variance_kl_uncoupled, ReversedExpectation, SeriesSum,
};
pub use divergence::{
    binary_divergence, kl_direct, kl_forward_pathwise, kl_reverse_pathwise, pinsker_check, total_variation,
    PinskerCheck, TruncatedKl,
};
pub use error::{Error, Result};
pub use monte_carlo::{
    merge_stats, run_dtheta_curve, run_kl_experiment, run_variance_curve, CurveOptions, Direction,
    ExperimentConfig, KlExperiment, RunningStats,
};
pub use partition::{dtheta_partition_sum, enumerate_partitions, eppf_dp, f_theta, SetPartition};
pub use stick::{tail_mass, weights_from_lengths, Coupling, LengthSequence, ModelSpec, WeightSequence};
