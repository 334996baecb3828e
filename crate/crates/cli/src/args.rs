use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use cvqkd::protocol::{Protocol, ReconciliationDirection};

#[derive(Debug, Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "Key rates and tolerable excess noise of Gaussian-modulated CV-QKD protocols",
    long_about = "Key rates and tolerable excess noise of the four Gaussian CV-QKD protocols \
                  under Gaussian collective attacks.\n\n\
                  Excess noise is referred to the channel input, in shot-noise units. Rates are \
                  in bits per retained symbol: the sifting loss is not included."
)]
pub struct Cli {
    /// File of `key = value` lines supplying default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate for one parameter set.
    Eval(EvalArgs),
    /// Tolerable excess noise at one transmittance.
    Threshold(ThresholdArgs),
    /// Tolerable excess noise over a transmittance grid.
    Sweep(SweepArgs),
    /// Simulate a protocol run, estimate the covariance matrix and the key rate.
    Simulate(SimulateArgs),
    /// Run the randomised verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Convergence tolerance of the infinite-modulation ladder, bits.
    #[arg(long, default_value_t = 1e-6, value_name = "BITS")]
    pub rate_tol: f64,

    /// Bisection tolerance on the excess noise, shot-noise units.
    #[arg(long, default_value_t = 1e-5, value_name = "SNU")]
    pub noise_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (standard output if omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
#[command(group(ArgGroup::new("modulation").required(true).args(["variance", "asymptotic"])))]
pub struct EvalArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,

    #[arg(long, value_parser = parse_direction)]
    pub direction: ReconciliationDirection,

    /// Channel transmittance in (0, 1].
    #[arg(long = "T")]
    pub transmittance: f64,

    /// Excess noise, shot-noise units at the channel input.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,

    /// Modulation variance V ≥ 1.
    #[arg(long = "V")]
    pub variance: Option<f64>,

    /// Evaluate in the limit of infinite modulation.
    #[arg(long)]
    pub asymptotic: bool,

    /// Reconciliation efficiency in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Report χ_aB − χ_aE (a Bob with quantum memory) instead.
    #[arg(long)]
    pub quantum_bob: bool,

    #[command(flatten)]
    pub tol: ToleranceArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectionArgs {
    /// Comma-separated protocols, or `all`.
    #[arg(long = "protocol", default_value = "all", value_parser = parse_protocols)]
    pub protocols: ProtocolList,

    /// Comma-separated reconciliation directions.
    #[arg(long = "direction", default_value = "dr,rr", value_parser = parse_directions)]
    pub directions: DirectionList,

    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// One row per cell instead of one row per transmittance.
    #[arg(long)]
    pub long: bool,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ThresholdArgs {
    #[arg(long = "T")]
    pub transmittance: f64,

    #[command(flatten)]
    pub select: SelectionArgs,

    #[command(flatten)]
    pub tol: ToleranceArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Transmittance grid `start:stop:step` (stop included).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,

    #[command(flatten)]
    pub select: SelectionArgs,

    #[command(flatten)]
    pub tol: ToleranceArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,

    #[arg(long = "direction", default_value = "dr,rr", value_parser = parse_directions)]
    pub directions: DirectionList,

    #[arg(long = "T")]
    pub transmittance: f64,

    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,

    #[arg(long = "V")]
    pub variance: f64,

    /// Number of rounds.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Fraction of sifted rounds used for estimation.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,

    /// Write the raw batch as CSV to this file.
    #[arg(long, value_name = "PATH")]
    pub batch_out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Trials per check (default: 500 / 200 / 50 / 100).
    #[arg(long)]
    pub trials: Option<usize>,

    /// Upper bound of the random symplectic spectra.
    #[arg(long, default_value_t = 5.0)]
    pub nu_max: f64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolList(pub Vec<Protocol>);

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionList(pub Vec<ReconciliationDirection>);

/// Grid as written on the command line plus its expanded points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: String,
    pub points: Vec<f64>,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.trim().parse()
}

fn parse_direction(s: &str) -> Result<ReconciliationDirection, String> {
    s.trim().parse()
}

fn parse_list<T>(s: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = s.split(',').map(item).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_protocols(s: &str) -> Result<ProtocolList, String> {
    if s.trim() == "all" {
        return Ok(ProtocolList(Protocol::ALL.to_vec()));
    }
    parse_list(s, parse_protocol).map(ProtocolList)
}

fn parse_directions(s: &str) -> Result<DirectionList, String> {
    parse_list(s, parse_direction).map(DirectionList)
}

/// Expands `start:stop:step`. Points are `start + k·step` rounded to 12
/// decimals so that e.g. `0.05:0.95:0.05` hits 0.5 exactly.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(format!("grid '{s}' is not of the form start:stop:step"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{x}' in grid '{s}' is not a number"))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(format!("grid '{s}' needs start ≤ stop and a positive step"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(format!("grid '{s}' has too many points"));
    }
    let points = (0..count)
        .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    Ok(Grid {
        spec: s.to_string(),
        points,
    })
}
