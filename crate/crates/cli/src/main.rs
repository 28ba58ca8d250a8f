//! `bsmix`: fit, compare and simulate Birnbaum–Saunders mixtures from the
//! command line.

mod commands;
mod error;
mod input;
mod output;

use bsmix::{EmConfig, InitStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "bsmix",
    version,
    about = "Finite mixtures of Birnbaum-Saunders distributions"
)]
struct Cli {
    /// Worker threads for bootstrap and simulation work.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Master seed; falls back to BSMIX_SEED, then 0.
    #[arg(long, env = "BSMIX_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write to this file instead of stdout.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Relative tolerance of the Aitken stopping rule.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    #[arg(long = "max-iter", default_value_t = 2000)]
    pub max_iter: usize,

    /// Initialization strategy: kbumps, kmeans or kmedoids.
    #[arg(long, default_value = "kbumps")]
    pub init: InitStrategy,

    /// Start k-bumps fits with α derived from the bump maxima.
    #[arg(long = "bump-mode-alpha")]
    pub bump_mode_alpha: bool,

    /// Initial multiplicative half-width of the β search bracket.
    #[arg(long = "bracket-factor", default_value_t = 4.0)]
    pub bracket_factor: f64,
}

impl FitArgs {
    pub fn config(&self, seed: u64) -> EmConfig {
        EmConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            init: self.init,
            seed,
            beta_bracket_factor: self.bracket_factor,
            bump_mode_alpha: self.bump_mode_alpha,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a G-component mixture to one column of positive data.
    Fit {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long, short = 'g', default_value_t = 2)]
        components: usize,
        /// Parametric bootstrap replicates for SEs and percentile intervals.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fit G = g-min..=g-max and compare log-likelihood, AIC and BIC.
    Select {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long = "g-min", default_value_t = 1)]
        g_min: usize,
        #[arg(long = "g-max", default_value_t = 4)]
        g_max: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Parametric bootstrap likelihood-ratio test of g-null against g-alt components.
    Lrt {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long = "g-null", default_value_t = 1)]
        g_null: usize,
        #[arg(long = "g-alt", default_value_t = 2)]
        g_alt: usize,
        #[arg(long, default_value_t = 99)]
        bootstrap: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate pdf, cdf, survival and hazard on a grid.
    Curves {
        /// Mixture as 'p1,...;alpha1,...;beta1,...'.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        params: Option<String>,
        /// Fit the data first and tabulate the fitted mixture.
        #[arg(long, short = 'i')]
        input: Option<PathBuf>,
        #[arg(long, short = 'g', default_value_t = 2)]
        components: usize,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Space grid points evenly on the log scale.
        #[arg(long)]
        log: bool,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw a sample from a mixture.
    Simulate {
        #[arg(
            long,
            conflicts_with = "scenario",
            required_unless_present = "scenario"
        )]
        params: Option<String>,
        /// Built-in scenario: scenario1 (PS) or scenario2 (WS).
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, short = 'n')]
        n: usize,
        /// Add the generating component of each draw.
        #[arg(long)]
        labels: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo study over scenarios, sample sizes and initialization strategies.
    Study {
        #[arg(long, value_delimiter = ',', default_value = "scenario1,scenario2")]
        scenarios: Vec<String>,
        #[arg(
            long = "sizes",
            short = 'n',
            value_delimiter = ',',
            default_value = "75,100,500,1000"
        )]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "kmeans,kmedoids,kbumps")]
        strategies: Vec<InitStrategy>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 2000)]
        max_iter: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stress-strength reliability R = P(Y < X).
    Reliability {
        /// Strength X as 'p1,...;alpha1,...;beta1,...'.
        #[arg(long)]
        strength: String,
        /// Stress Y in the same format.
        #[arg(long)]
        stress: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| error::CliError::input(e.to_string()))?;
    }
    match cli.command {
        Command::Fit {
            input,
            components,
            bootstrap,
            fit,
            out,
        } => commands::fit(&input, components, bootstrap, &fit, &out),
        Command::Select {
            input,
            g_min,
            g_max,
            fit,
            out,
        } => commands::select(&input, g_min, g_max, &fit, &out),
        Command::Lrt {
            input,
            g_null,
            g_alt,
            bootstrap,
            fit,
            out,
        } => commands::lrt(&input, g_null, g_alt, bootstrap, &fit, &out),
        Command::Curves {
            params,
            input,
            components,
            from,
            to,
            points,
            log,
            fit,
            out,
        } => {
            let grid = commands::GridSpec {
                from,
                to,
                points,
                log,
            };
            commands::curves(
                params.as_deref(),
                input.as_deref(),
                components,
                &grid,
                &fit,
                &out,
            )
        }
        Command::Simulate {
            params,
            scenario,
            n,
            labels,
            out,
        } => commands::simulate(params.as_deref(), scenario.as_deref(), n, labels, &out),
        Command::Study {
            scenarios,
            sizes,
            strategies,
            replicates,
            tol,
            max_iter,
            out,
        } => {
            let config = EmConfig {
                tol,
                max_iter,
                ..EmConfig::default()
            };
            commands::study(&scenarios, &sizes, &strategies, replicates, config, &out)
        }
        Command::Reliability {
            strength,
            stress,
            out,
        } => commands::reliability(&strength, &stress, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bsmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
