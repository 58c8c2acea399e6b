use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Log,
    Linear,
}

/// Flags shared by every subcommand. Unset grid and size flags fall back to
/// per-command defaults.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of features.
    #[arg(long)]
    pub p: Option<usize>,
    /// Aspect ratio p/n; sets p = round(gamma * n).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r2: f64,
    /// Momentum offset: mu_i = 2 sqrt(s_i) + delta.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_count: Option<usize>,
    #[arg(long, value_enum)]
    pub t_scale: Option<Scale>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Gauss-Legendre nodes for Marchenko-Pastur integrals.
    #[arg(long, default_value_t = mgf_core::asymptotics::DEFAULT_NODES)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize, scale: Scale) -> Result<Self, CliError> {
        if count < 2 {
            return Err(CliError::Config(format!("grid needs at least 2 points, got {count}")));
        }
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(CliError::Config(format!("grid needs min < max, got [{min}, {max}]")));
        }
        if min < 0.0 || (scale == Scale::Log && min == 0.0) {
            return Err(CliError::Config(format!("grid minimum {min} out of range for {scale:?} scale")));
        }
        Ok(Self { min, max, count, scale })
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        Ok(match self.scale {
            Scale::Log => mgf_core::grid::log_grid(self.min, self.max, self.count)?,
            Scale::Linear => mgf_core::grid::linear_grid(self.min, self.max, self.count)?,
        })
    }
}

/// Per-command fallbacks for the optional flags.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub n: usize,
    pub p: usize,
    pub t: GridSpec,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub sigma2: f64,
    pub r2: f64,
    pub delta: f64,
    pub seed: u64,
    pub t_grid: GridSpec,
    pub out: PathBuf,
    pub svg: bool,
    pub nodes: usize,
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs, defaults: Defaults) -> Result<Self, CliError> {
        let n = args.n.unwrap_or(defaults.n);
        let p = match (args.gamma, args.p) {
            (Some(_), Some(_)) => return Err(CliError::Config("give --gamma or --p, not both".into())),
            (Some(gamma), None) => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(CliError::Config(format!("--gamma must be positive, got {gamma}")));
                }
                (gamma * n as f64).round() as usize
            }
            (None, Some(p)) => p,
            (None, None) if args.n.is_some() => {
                // keep the default aspect ratio when only n is given
                (n as f64 * defaults.p as f64 / defaults.n as f64).round() as usize
            }
            (None, None) => defaults.p,
        };
        if n == 0 || p == 0 {
            return Err(CliError::Config(format!("need positive n and p, got n = {n}, p = {p}")));
        }
        if p > n {
            return Err(CliError::Config(format!("need p <= n for a full-rank design, got n = {n}, p = {p}")));
        }
        for (name, v) in [("--sigma2", args.sigma2), ("--r2", args.r2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(args.delta >= 0.0 && args.delta.is_finite()) {
            return Err(CliError::Config(format!("--delta must be nonnegative, got {}", args.delta)));
        }
        if args.nodes == 0 {
            return Err(CliError::Config("--nodes must be positive".into()));
        }
        let d = defaults.t;
        let t_grid = GridSpec::new(
            args.t_min.unwrap_or(d.min),
            args.t_max.unwrap_or(d.max),
            args.t_count.unwrap_or(d.count),
            args.t_scale.unwrap_or(d.scale),
        )?;
        Ok(Self {
            n,
            p,
            sigma2: args.sigma2,
            r2: args.r2,
            delta: args.delta,
            seed: args.seed,
            t_grid,
            out: args.out.clone(),
            svg: args.svg,
            nodes: args.nodes,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn mu_rule(&self) -> mgf_core::MuRule {
        mgf_core::MuRule::Offset(self.delta)
    }

    /// Bayes risks see the design only through the spectrum.
    pub fn spectrum(&self) -> Result<Vec<f64>, CliError> {
        let x = mgf_core::spectral::generate_gaussian_data(
            self.n,
            self.p,
            &mgf_core::CovarianceSpec::Identity,
            self.seed,
        )?;
        Ok(mgf_core::spectral::sample_spectrum(&x)?)
    }

    pub fn prior(&self) -> Result<mgf_core::PriorSpec, CliError> {
        Ok(mgf_core::PriorSpec::new(self.r2, self.sigma2, self.n, self.p)?)
    }

    /// Times must be positive wherever they are mapped to `lambda = c / t^k`.
    pub fn require_positive_times(&self) -> Result<(), CliError> {
        if self.t_grid.min <= 0.0 {
            return Err(CliError::Config("t grid must be positive for calibrated penalties".into()));
        }
        Ok(())
    }
}
