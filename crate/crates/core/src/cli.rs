//! Command-line front end. Every subcommand writes CSV with a header row.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::closed_form::{
    dtheta_upper_bound, expected_binary_divergence, expected_kl_coupled, expected_kl_reversed, expected_kl_uncoupled,
    inverse_rising_closed_form, quotient_rising_closed_form, series_inverse_rising, series_quotient_rising,
    variance_kl_coupled, variance_kl_uncoupled,
};
use crate::divergence::binary_divergence_unchecked;
use crate::error::{Error, Result};
use crate::monte_carlo::{
    run_dtheta_curve, run_kl_experiment, run_variance_curve, CurveOptions, Direction, ExperimentConfig,
    DEFAULT_TRACE_STRIDE,
};
use crate::partition::dtheta_partition_sum;
use crate::stick::{weights_from_lengths, Coupling, LengthSequence, ModelSpec};

#[derive(Debug, Parser)]
#[command(name = "stickbreak", version, about = "Random KL divergences between stick-breaking priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lengths and weights of one sampled sequence.
    SampleWeights(SampleWeightsArgs),
    /// Summands of one pathwise divergence.
    KlPath(KlPathArgs),
    /// Monte Carlo cumulative-mean trace of the divergence.
    McKl(McKlArgs),
    /// Sample variance against the closed form over a grid of theta.
    VarianceCurve(VarianceCurveArgs),
    /// Monte Carlo D_theta(beta) over a grid of beta.
    DthetaCurve(DthetaCurveArgs),
    /// Level sums of the partition expansion of D_theta(beta).
    DthetaPartition(DthetaPartitionArgs),
    /// One closed-form quantity.
    ClosedForm(ClosedFormArgs),
    /// Partial sums of a rising-factorial series.
    Series(SeriesArgs),
    /// Monte Carlo D_theta(beta) against its upper bound, with Pinsker checks.
    BoundCheck(DthetaCurveArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Sampling {
    #[arg(long, default_value_t = 300)]
    trunc: usize,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Reverse,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Reverse => Direction::Reverse,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Dp,
    Geometric,
    Exchangeable,
}

#[derive(Debug, Args)]
struct SampleWeightsArgs {
    #[arg(long, value_enum, default_value = "dp")]
    model: ModelArg,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Add a geometric(a, b) sequence in extra columns.
    #[arg(long)]
    compare: bool,
    #[arg(long, default_value_t = 300)]
    trunc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

/// The divergence is between a DP(theta) sequence, or exchangeable
/// DP(beta, Be(1, theta)) lengths when --beta is given, and geometric(a, b).
#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    beta: Option<f64>,
    /// Set the geometric length to v1 of the other sequence.
    #[arg(long)]
    coupled: bool,
    /// forward: KL(P || geometric); reverse: KL(geometric || P).
    #[arg(long, value_enum, default_value = "forward")]
    direction: DirectionArg,
}

impl PairArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let p = match self.beta {
            Some(beta) => ModelSpec::exchangeable_dp(beta, self.theta)?,
            None => ModelSpec::dp(self.theta)?,
        };
        let mut cfg = ExperimentConfig::new(p, ModelSpec::geometric(self.a, self.b)?);
        cfg.direction = self.direction.into();
        cfg.coupling = if self.coupled {
            Coupling::Coupled
        } else {
            Coupling::Uncoupled
        };
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct KlPathArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 300)]
    trunc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct McKlArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[command(flatten)]
    sampling: Sampling,
    /// Trace row every this many replicates.
    #[arg(long, default_value_t = DEFAULT_TRACE_STRIDE)]
    stride: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VarianceCurveArgs {
    /// Comma-separated theta grid.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
    thetas: Vec<f64>,
    #[arg(long)]
    coupled: bool,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DthetaCurveArgs {
    #[arg(long)]
    theta: f64,
    /// Comma-separated beta grid.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,5,10,20,50,100")]
    betas: Vec<f64>,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DthetaPartitionArgs {
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 12)]
    nmax: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    ExpectedD,
    MeanUncoupled,
    MeanCoupled,
    VarUncoupled,
    VarCoupled,
    MeanReversed,
    Bound,
}

#[derive(Debug, Args)]
struct ClosedFormArgs {
    #[arg(long, value_enum)]
    quantity: Quantity,
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    InverseRising,
    QuotientRising,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    nmax: usize,
    #[command(flatten)]
    output: Output,
}

/// Formats with 9 significant digits, like C's `%.9g`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn nums(xs: &[f64]) -> String {
    row(&xs.iter().map(|&x| format_number(x)).collect::<Vec<_>>())
}

fn open_output<'a>(output: &Output, stdout: &'a mut dyn Write) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(stdout)),
    })
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("output: {e}"))
}

fn emit(output: &Output, stdout: &mut dyn Write, header: &str, body: &[String]) -> Result<()> {
    let mut w = open_output(output, stdout).map_err(io_err)?;
    w.write_all(header.as_bytes()).and_then(|_| w.write_all(b"\n")).map_err(io_err)?;
    for line in body {
        w.write_all(line.as_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn sample_weights(args: &SampleWeightsArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = match args.model {
        ModelArg::Dp => ModelSpec::dp(args.theta)?,
        ModelArg::Geometric => ModelSpec::geometric(args.a, args.b)?,
        ModelArg::Exchangeable => ModelSpec::exchangeable_dp(args.beta, args.theta)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let lengths = model.sample_lengths(args.trunc, &mut rng)?;
    let weights = weights_from_lengths(&lengths);
    let geo = if args.compare {
        let g = ModelSpec::geometric(args.a, args.b)?.sample_lengths(args.trunc, &mut rng)?;
        let w = weights_from_lengths(&g);
        Some((g, w))
    } else {
        None
    };
    let body: Vec<String> = (0..args.trunc)
        .map(|i| {
            let mut fields = vec![(i + 1).to_string(), format_number(lengths.values()[i]), format_number(weights.weights[i])];
            if let Some((g, w)) = &geo {
                fields.push(format_number(g.values()[i]));
                fields.push(format_number(w.weights[i]));
            }
            row(&fields)
        })
        .collect();
    let header = if args.compare { "n,v,w,v_geometric,w_geometric" } else { "n,v,w" };
    emit(&args.output, stdout, header, &body)
}

fn kl_path(args: &KlPathArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = args.pair.config()?;
    cfg.trunc = args.trunc;
    cfg.seed = args.seed;
    cfg.reps = 1;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let p = cfg.model_p.sample_lengths(args.trunc, &mut rng)?;
    let v = match cfg.coupling {
        Coupling::Coupled => p.first(),
        Coupling::Uncoupled => ModelSpec::geometric(args.pair.a, args.pair.b)?.sample_lengths(1, &mut rng)?.first(),
    };
    let g = LengthSequence::constant(v, args.trunc, args.pair.a, args.pair.b)?;
    let mut survival = 1.0;
    let mut cumulative = 0.0;
    let body: Vec<String> = p
        .values()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(i, (&vn, &vg))| {
            let (term, shrink) = match cfg.direction {
                Direction::Forward => (survival * binary_divergence_unchecked(vn, vg), 1.0 - vn),
                Direction::Reverse => (survival * binary_divergence_unchecked(vg, vn), 1.0 - vg),
            };
            survival *= shrink;
            cumulative += term;
            row(&[
                (i + 1).to_string(),
                format_number(vn),
                format_number(vg),
                format_number(term),
                format_number(cumulative),
            ])
        })
        .collect();
    emit(&args.output, stdout, "n,v,v_geometric,term,cumulative", &body)
}

fn mc_kl(args: &McKlArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = args.pair.config()?;
    cfg.reps = args.sampling.reps;
    cfg.trunc = args.sampling.trunc;
    cfg.seed = args.sampling.seed;
    cfg.workers = args.sampling.workers;
    cfg.trace_stride = args.stride;
    let run = run_kl_experiment(&cfg)?;
    let body: Vec<String> = run
        .trace
        .iter()
        .map(|t| row(&[t.rep.to_string(), format_number(t.kl), format_number(t.cum_mean)]))
        .collect();
    emit(&args.output, stdout, "rep,kl,cum_mean", &body)?;
    let _ = writeln!(
        stderr,
        "mean={} stderr={} reps={} pinsker_violations={}",
        format_number(run.stats.mean),
        format_number(run.stats.std_error()),
        run.stats.count,
        run.pinsker.violations
    );
    Ok(())
}

fn curve_options(s: &Sampling) -> CurveOptions {
    CurveOptions {
        reps: s.reps,
        trunc: s.trunc,
        seed: s.seed,
        workers: s.workers,
    }
}

fn variance_curve(args: &VarianceCurveArgs, stdout: &mut dyn Write) -> Result<()> {
    let coupling = if args.coupled {
        Coupling::Coupled
    } else {
        Coupling::Uncoupled
    };
    let pts = run_variance_curve(&args.thetas, coupling, curve_options(&args.sampling))?;
    let body: Vec<String> = pts.iter().map(|p| nums(&[p.theta, p.mc_variance, p.closed_form])).collect();
    emit(&args.output, stdout, "theta,mc_variance,closed_form_variance", &body)
}

fn dtheta_curve(args: &DthetaCurveArgs, stdout: &mut dyn Write, with_checks: bool) -> Result<()> {
    let pts = run_dtheta_curve(args.theta, &args.betas, curve_options(&args.sampling))?;
    let body: Vec<String> = pts
        .iter()
        .map(|p| {
            let mut fields = vec![
                format_number(p.beta),
                format_number(p.estimate),
                format_number(p.stderr),
                p.upper_bound.map(format_number).unwrap_or_default(),
            ];
            if with_checks {
                let within = p.upper_bound.map(|u| p.estimate <= u + 3.0 * p.stderr);
                fields.push(within.map(|w| w.to_string()).unwrap_or_default());
                fields.push(p.pinsker.violations.to_string());
            }
            row(&fields)
        })
        .collect();
    let header = if with_checks {
        "beta,estimate,stderr,upper_bound,within_bound,pinsker_violations"
    } else {
        "beta,estimate,stderr,upper_bound"
    };
    emit(&args.output, stdout, header, &body)
}

fn dtheta_partition(args: &DthetaPartitionArgs, stdout: &mut dyn Write) -> Result<()> {
    let sum = dtheta_partition_sum(args.theta, args.beta, args.nmax)?;
    let mut cumulative = 0.0;
    let body: Vec<String> = sum
        .levels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            cumulative += l;
            row(&[(i + 1).to_string(), format_number(l), format_number(cumulative)])
        })
        .collect();
    emit(&args.output, stdout, "n_level,level_sum,cumulative", &body)
}

fn closed_form(args: &ClosedFormArgs, stdout: &mut dyn Write) -> Result<()> {
    let (theta, a, b) = (args.theta, args.a, args.b);
    let (name, value) = match args.quantity {
        Quantity::ExpectedD => ("expected-d", expected_binary_divergence(theta, a, b)?),
        Quantity::MeanUncoupled => ("mean-uncoupled", expected_kl_uncoupled(theta, a, b)?),
        Quantity::MeanCoupled => ("mean-coupled", expected_kl_coupled(theta)?),
        Quantity::VarUncoupled => ("var-uncoupled", variance_kl_uncoupled(theta, a, b)?),
        Quantity::VarCoupled => ("var-coupled", variance_kl_coupled(theta)?),
        Quantity::MeanReversed => ("mean-reversed", expected_kl_reversed(a, b, theta, args.tol)?.value),
        Quantity::Bound => {
            let beta = args.beta.ok_or_else(|| Error::Config("--beta is required for the bound".into()))?;
            ("bound", dtheta_upper_bound(theta, beta)?)
        }
    };
    emit(&args.output, stdout, "quantity,value", &[row(&[name.to_string(), format_number(value)])])
}

fn series(args: &SeriesArgs, stdout: &mut dyn Write) -> Result<()> {
    let (s, limit) = match args.which {
        Which::InverseRising => (
            series_inverse_rising(args.beta, args.nmax)?,
            inverse_rising_closed_form(args.beta)?,
        ),
        Which::QuotientRising => (
            series_quotient_rising(args.lambda, args.beta, args.nmax)?,
            quotient_rising_closed_form(args.lambda, args.beta)?,
        ),
    };
    let mut body: Vec<String> = s
        .partial_sums
        .iter()
        .enumerate()
        .map(|(i, &p)| row(&[(i + 1).to_string(), format_number(p), format_number(limit)]))
        .collect();
    body.push(row(&["levin".to_string(), format_number(s.accelerated), format_number(limit)]));
    emit(&args.output, stdout, "n,partial_sum,closed_form", &body)
}

/// Parses `args` (program name first) and runs the subcommand, writing CSV
/// to `stdout` unless `--out` is given. Returns the process exit code:
/// 0 on success, 2 for argument errors, 1 for numeric or domain errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 2;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let result = match &cli.command {
        Command::SampleWeights(a) => sample_weights(a, stdout),
        Command::KlPath(a) => kl_path(a, stdout),
        Command::McKl(a) => mc_kl(a, stdout, stderr),
        Command::VarianceCurve(a) => variance_curve(a, stdout),
        Command::DthetaCurve(a) => dtheta_curve(a, stdout, false),
        Command::DthetaPartition(a) => dtheta_partition(a, stdout),
        Command::ClosedForm(a) => closed_form(a, stdout),
        Command::Series(a) => series(a, stdout),
        Command::BoundCheck(a) => dtheta_curve(a, stdout, true),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}
