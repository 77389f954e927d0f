//! Command-line arguments.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "pmap", version, about = "Perturb-and-MAP partition function estimation and sampling")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a spin-glass grid and write it in UAI format.
    Gen(GenArgs),
    /// Exact ln Z and MAP by enumeration.
    Exact(ExactArgs),
    /// Full-rank trick estimate of f(Z), Z or ln Z.
    Estimate(EstimateArgs),
    /// Low-rank upper and lower bounds over an alpha grid.
    Bounds(BoundsArgs),
    /// MSE of the upper bound as an ln Z estimator, per alpha.
    SweepAlpha(SweepArgs),
    /// Sequential sampler runs.
    Sample(SampleArgs),
    /// Empirical bias, variance and MSE of full-rank tricks.
    MseStudy(MseArgs),
    /// Entropy and KL error identities against the exact model.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Grid shape as RxC.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long, value_enum, default_value_t = Mode::Mixed)]
    pub mode: Mode,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// UAI model file.
    #[arg(value_name = "MODEL")]
    pub path: Option<PathBuf>,
    /// UAI model file (alternative to the positional argument).
    #[arg(long = "model", conflicts_with = "path")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Seed for an inline --grid (defaults to --seed).
    #[arg(long)]
    pub grid_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverName::Exhaustive)]
    pub solver: SolverName,
    /// ICM restarts.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long, value_enum, default_value_t = Mode::Mixed)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = TrickName::Gumbel)]
    pub trick: TrickName,
    /// α for the Weibull and Fréchet tricks.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Threshold of the Tail trick.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum, default_value_t = TargetName::Lnz)]
    pub target: TargetName,
    #[arg(long = "M", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub m: u64,
    /// Apply closed-form bias corrections where available.
    #[arg(long)]
    pub debias: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// α grid: start:step:stop (inclusive) or a comma list.
    #[arg(long, default_value = "0", value_parser = parse_alphas, allow_hyphen_values = true)]
    pub alphas: AlphaGrid,
    #[arg(long = "M", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub m: u64,
    /// Comma list of 0-based variables for an extra subset lower bound.
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "-0.04:0.02:0.04", value_parser = parse_alphas, allow_hyphen_values = true)]
    pub alphas: AlphaGrid,
    #[arg(long = "M", default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub m: u64,
    #[arg(long = "K", default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long = "M-inner", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub m_inner: u64,
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_restarts: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// α grid of the Weibull/Fréchet family (0 is Gumbel, 1 is Exponential).
    #[arg(long, default_value = "0,1", value_parser = parse_alphas, allow_hyphen_values = true)]
    pub alphas: AlphaGrid,
    /// Comma list of sample sizes.
    #[arg(long = "M", default_value = "10", value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long = "K", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    #[arg(long, value_enum, default_value_t = TargetName::Z)]
    pub target: TargetName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "M", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub m: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Mode {
    Attractive,
    Mixed,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SolverName {
    Exhaustive,
    Icm,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TrickName {
    Gumbel,
    Exponential,
    Weibull,
    Frechet,
    Pareto,
    Tail,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TargetName {
    Fz,
    Z,
    Lnz,
}

/// A parsed α grid together with its original spelling.
#[derive(Debug, Clone)]
pub struct AlphaGrid {
    pub raw: String,
    pub values: Vec<f64>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got '{s}'"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in '{s}'"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in '{s}'"))?;
    if r == 0 || c == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((r, c))
}

/// `start:step:stop` inclusive of `stop` when it lies on the grid, or a
/// comma list. Grid points are rounded to 12 decimals.
pub fn parse_alphas(s: &str) -> Result<AlphaGrid, String> {
    let num = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("bad number '{t}'"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite alpha '{t}'"))
        }
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:step:stop, got '{s}'"));
        }
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(format!("empty or reversed alpha grid '{s}'"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err("alpha grid too large".into());
        }
        (0..count)
            .map(|i| {
                let v = start + i as f64 * step;
                let r = (v * 1e12).round() / 1e12;
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty alpha grid".into());
    }
    if let Some(bad) = values.iter().find(|&&a| a <= -1.0) {
        return Err(format!("alpha must exceed -1, got {bad}"));
    }
    Ok(AlphaGrid {
        raw: s.to_string(),
        values,
    })
}
