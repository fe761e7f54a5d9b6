//! The `trustdyn` command line.
//!
//! Parsing happens in two stages: clap turns arguments into [`Cli`], then
//! [`Cli::resolve`] checks ranges and produces a [`CliConfig`] holding fully
//! validated parameters. Both stages report usage errors (exit status 2).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine;
use crate::error::{Error, Result};
use crate::experiments;
use crate::model::{Dynamics, InitialTrust, SimParams, StayRule, TrustCap};
use crate::output::{self, Format, Metadata};
use crate::stats::{self, FitKind};

#[derive(Debug, Parser)]
#[command(name = "trustdyn", version, about = "Trust dynamics between users and a capacity-constrained recommender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run a single simulation and write its trajectory.
    Simulate {
        #[command(flatten)]
        population: PopulationArgs,
        #[command(flatten)]
        feedback: FeedbackArgs,
        /// Iteration cap.
        #[arg(long = "max-iters", default_value_t = 250)]
        max_iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Repeat a simulation with derived seeds and write per-repetition outcomes.
    Batch {
        #[command(flatten)]
        population: PopulationArgs,
        #[command(flatten)]
        feedback: FeedbackArgs,
        #[arg(long = "max-iters", default_value_t = 250)]
        max_iters: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Master seed; repetition i uses derive_seed(seed, i).
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep the population size with L = round(0.6 N).
    Exp1 {
        /// Comma-separated population sizes.
        #[arg(long = "n-values", value_delimiter = ',', default_values_t = experiments::TABLE_ONE_USERS)]
        n_values: Vec<usize>,
        #[command(flatten)]
        feedback: FeedbackArgs,
        #[arg(long = "max-iters", default_value_t = experiments::N_SWEEP_MAX_ITERATIONS)]
        max_iters: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep the attitude phi = gamma / beta.
    Exp2 {
        /// Use the fine grid 1.40, 1.41, ..., 1.60 instead of 0.5, 0.6, ..., 2.0.
        #[arg(long, conflicts_with = "phis")]
        fine: bool,
        /// Explicit comma-separated phi grid.
        #[arg(long, value_delimiter = ',')]
        phis: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        users: usize,
        #[arg(long, default_value_t = 60)]
        comfort: usize,
        #[arg(long, default_value_t = experiments::DEFAULT_BETA)]
        beta: f64,
        #[arg(long = "max-iters", default_value_t = experiments::PHI_SWEEP_MAX_ITERATIONS)]
        max_iters: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit a power law or a quadratic to two columns of a CSV file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: FitKindArg,
        /// Column holding x (default: first column).
        #[arg(long)]
        x: Option<String>,
        /// Column holding y (default: second column).
        #[arg(long)]
        y: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct PopulationArgs {
    #[arg(long, default_value_t = 100)]
    pub users: usize,
    /// Comfort level L.
    #[arg(long, default_value_t = 60)]
    pub comfort: usize,
    /// Capacity C (recorded only).
    #[arg(long)]
    pub capacity: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeedbackArgs {
    /// Trust gained after a good recommendation.
    #[arg(long, default_value_t = experiments::DEFAULT_BETA)]
    pub beta: f64,
    /// Trust lost after a bad recommendation (default: equal to beta).
    #[arg(long, conflicts_with = "phi")]
    pub gamma: Option<f64>,
    /// Sets gamma = phi * beta.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// uniform | constant:<v>
    #[arg(long = "init-trust", default_value = "uniform", value_parser = parse_init_trust)]
    pub init_trust: InitialTrust,
    #[arg(long = "stay-rule", value_enum, default_value_t = StayRuleArg::WouldOverfill)]
    pub stay_rule: StayRuleArg,
    #[arg(long = "trust-cap", value_enum, default_value_t = TrustCapArg::Accumulate)]
    pub trust_cap: TrustCapArg,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKindArg {
    PowerLaw,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StayRuleArg {
    Overcrowded,
    WouldOverfill,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrustCapArg {
    Clamp,
    Accumulate,
}

fn parse_init_trust(s: &str) -> std::result::Result<InitialTrust, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A validated request.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Simulate {
        params: SimParams,
    },
    Batch {
        params: SimParams,
        reps: usize,
        master_seed: u64,
    },
    NSweep {
        template: SimParams,
        n_values: Vec<usize>,
        reps: usize,
        master_seed: u64,
    },
    PhiSweep {
        template: SimParams,
        phi_values: Vec<f64>,
        reps: usize,
        master_seed: u64,
    },
    Fit {
        input: PathBuf,
        kind: FitKind,
        x: Option<String>,
        y: Option<String>,
    },
}

/// Failure of [`parse_cli`].
#[derive(Debug)]
pub enum CliError {
    /// From clap, including `--help` and `--version` requests.
    Clap(clap::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "error: {m}"),
        }
    }
}

/// Parses and validates a full argument vector (including the program name).
pub fn parse_cli<I, T>(args: I) -> std::result::Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args)
        .map_err(CliError::Clap)?
        .resolve()
        .map_err(|e| CliError::Usage(e.to_string()))
}

impl FeedbackArgs {
    fn gamma(&self) -> Result<f64> {
        match (self.gamma, self.phi) {
            (Some(g), None) => Ok(g),
            (None, Some(phi)) if phi > 0.0 => Ok(phi * self.beta),
            (None, Some(phi)) => Err(Error::config(format!("phi = {phi} must be positive"))),
            (None, None) => Ok(self.beta),
            (Some(_), Some(_)) => Err(Error::config("--gamma and --phi are mutually exclusive")),
        }
    }
}

impl RuleArgs {
    fn dynamics(&self) -> Dynamics {
        Dynamics {
            stay_rule: match self.stay_rule {
                StayRuleArg::Overcrowded => StayRule::Overcrowded,
                StayRuleArg::WouldOverfill => StayRule::WouldOverfill,
            },
            trust_cap: match self.trust_cap {
                TrustCapArg::Clamp => TrustCap::Clamp,
                TrustCapArg::Accumulate => TrustCap::Accumulate,
            },
        }
    }
}

fn target(out: OutArgs) -> (Option<PathBuf>, Format) {
    let format = match out.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    (out.out, format)
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::config("--reps must be at least 1"));
    }
    Ok(())
}

fn model_params(
    pop: &PopulationArgs,
    feedback: &FeedbackArgs,
    max_iters: usize,
    seed: u64,
    rules: &RuleArgs,
) -> Result<SimParams> {
    let mut p = SimParams::new(pop.users, pop.comfort, feedback.beta, feedback.gamma()?)
        .with_max_iterations(max_iters)
        .with_initial_trust(rules.init_trust)
        .with_seed(seed)
        .with_dynamics(rules.dynamics());
    p.capacity = pop.capacity;
    p.validate()?;
    Ok(p)
}

impl Cli {
    pub fn resolve(self) -> Result<CliConfig> {
        let (command, out) = match self.command {
            CliCommand::Simulate {
                population,
                feedback,
                max_iters,
                seed,
                rules,
                out,
            } => {
                let params = model_params(&population, &feedback, max_iters, seed, &rules)?;
                (Command::Simulate { params }, out)
            }
            CliCommand::Batch {
                population,
                feedback,
                max_iters,
                reps,
                seed,
                rules,
                out,
            } => {
                check_reps(reps)?;
                let params = model_params(&population, &feedback, max_iters, seed, &rules)?;
                (
                    Command::Batch {
                        params,
                        reps,
                        master_seed: seed,
                    },
                    out,
                )
            }
            CliCommand::Exp1 {
                n_values,
                feedback,
                max_iters,
                reps,
                seed,
                rules,
                out,
            } => {
                check_reps(reps)?;
                if n_values.is_empty() {
                    return Err(Error::config("--n-values is empty"));
                }
                if let Some(n) = n_values.iter().find(|&&n| n <= 1) {
                    return Err(Error::config(format!("population size {n} must exceed 1")));
                }
                let template = SimParams::new(20, 12, feedback.beta, feedback.gamma()?)
                    .with_max_iterations(max_iters)
                    .with_initial_trust(rules.init_trust)
                    .with_seed(seed)
                    .with_dynamics(rules.dynamics());
                for &n in &n_values {
                    SimParams {
                        n_users: n,
                        comfort_level: experiments::comfort_for(n),
                        ..template.clone()
                    }
                    .validate()?;
                }
                (
                    Command::NSweep {
                        template,
                        n_values,
                        reps,
                        master_seed: seed,
                    },
                    out,
                )
            }
            CliCommand::Exp2 {
                fine,
                phis,
                users,
                comfort,
                beta,
                max_iters,
                reps,
                seed,
                rules,
                out,
            } => {
                check_reps(reps)?;
                let phi_values = match phis {
                    Some(v) => v,
                    None if fine => experiments::fine_phi_grid(),
                    None => experiments::coarse_phi_grid(),
                };
                if phi_values.is_empty() {
                    return Err(Error::config("--phis is empty"));
                }
                if let Some(phi) = phi_values.iter().find(|&&p| p.is_nan() || p <= 0.0) {
                    return Err(Error::config(format!("phi = {phi} must be positive")));
                }
                let template = SimParams::new(users, comfort, beta, beta)
                    .with_max_iterations(max_iters)
                    .with_initial_trust(rules.init_trust)
                    .with_seed(seed)
                    .with_dynamics(rules.dynamics());
                for &phi in &phi_values {
                    template.clone().with_phi(phi).validate()?;
                }
                (
                    Command::PhiSweep {
                        template,
                        phi_values,
                        reps,
                        master_seed: seed,
                    },
                    out,
                )
            }
            CliCommand::Fit { input, kind, x, y, out } => (
                Command::Fit {
                    input,
                    kind: match kind {
                        FitKindArg::PowerLaw => FitKind::PowerLaw,
                        FitKindArg::Quadratic => FitKind::Quadratic,
                    },
                    x,
                    y,
                },
                out,
            ),
        };
        let (out, format) = target(out);
        Ok(CliConfig { command, out, format })
    }
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// Runs a validated request and writes its outputs.
pub fn execute(config: &CliConfig) -> Result<()> {
    let rendered = match &config.command {
        Command::Simulate { params } => {
            let mut meta = Metadata::new("simulate");
            meta.params(params);
            meta.push("seed", params.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let result = engine::run(params, &mut rng)?;
            meta.push("converged", result.converged);
            meta.push("t_star", result.t_star.map(|t| t.to_string()).unwrap_or_default());
            output::render_trajectory(&meta, &result, config.format)?
        }
        Command::Batch {
            params,
            reps,
            master_seed,
        } => {
            let mut meta = Metadata::new("batch");
            meta.params(params);
            meta.push("master_seed", master_seed);
            meta.push("reps", reps);
            let batch = experiments::run_batch(params, *reps, *master_seed)?;
            output::render_batch(&meta, &batch, config.format)?
        }
        Command::NSweep {
            template,
            n_values,
            reps,
            master_seed,
        } => {
            let mut meta = Metadata::new("exp1");
            meta.push("n_values", list(n_values));
            meta.push("comfort_rule", "round_half_up(0.6*n)");
            meta.push("beta", template.beta);
            meta.push("gamma", template.gamma);
            sweep_meta(&mut meta, template, *reps, *master_seed);
            let rows = experiments::experiment_n_sweep(template, n_values, *reps, *master_seed)?;
            output::render_n_sweep(&meta, &rows, config.format)?
        }
        Command::PhiSweep {
            template,
            phi_values,
            reps,
            master_seed,
        } => {
            let mut meta = Metadata::new("exp2");
            meta.push("phi_values", list(phi_values));
            meta.push("n_users", template.n_users);
            meta.push("comfort_level", template.comfort_level);
            meta.push("beta", template.beta);
            sweep_meta(&mut meta, template, *reps, *master_seed);
            let rows = experiments::experiment_phi_sweep(template, phi_values, *reps, *master_seed)?;
            output::render_phi_sweep(&meta, &rows, config.format)?
        }
        Command::Fit { input, kind, x, y } => {
            let points = output::read_points_file(input, x.as_deref(), y.as_deref())?;
            let fit = match kind {
                FitKind::PowerLaw => stats::power_law_fit(&points)?,
                FitKind::Quadratic => stats::quadratic_fit(&points)?,
            };
            let mut meta = Metadata::new("fit");
            meta.push("input", input.display());
            meta.push("x", x.as_deref().unwrap_or("<first column>"));
            meta.push("y", y.as_deref().unwrap_or("<second column>"));
            meta.push("points", points.len());
            output::render_fit(&meta, &fit, config.format)?
        }
    };
    output::emit(&rendered, config.out.as_deref().map(Path::new))
}

fn sweep_meta(meta: &mut Metadata, template: &SimParams, reps: usize, master_seed: u64) {
    meta.push("max_iterations", template.max_iterations);
    meta.push("initial_trust", template.initial_trust);
    meta.push("stay_rule", template.dynamics.stay_rule);
    meta.push("trust_cap", template.dynamics.trust_cap);
    meta.push("reps", reps);
    meta.push("master_seed", master_seed);
}
