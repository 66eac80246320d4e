//! Command-line front end: instance files, subcommands and the scenario
//! registry.

pub mod commands;
pub mod io;
pub mod report;
pub mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pacing_core::fppe::{SolvePath, TieBreak};
use pacing_core::metagame::MessageSpace;

pub use report::Format;

#[derive(Debug, Parser)]
#[command(name = "pacing", version, about = "Pacing equilibria, reporting games and liquid welfare")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Seed for random sweeps; overrides the seed stored in an instance file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and grid searches (0 uses all cores).
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the pacing equilibrium for a reported profile.
    Fppe {
        instance: PathBuf,
        /// Message profile; defaults to truthful reports of linear agents.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PathArg::Auto)]
        path: PathArg,
        #[arg(long, value_enum, default_value_t = TieArg::Lowest)]
        tie_break: TieArg,
    },
    /// Best deviation of one agent against a profile.
    BestResponse {
        instance: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        agent: usize,
        #[arg(long, value_enum, default_value_t = SpaceArg::Full)]
        space: SpaceArg,
    },
    /// Check that no agent gains more than eps by deviating.
    VerifyNash {
        instance: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-7)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = SpaceArg::Full)]
        space: SpaceArg,
    },
    /// Construct pure equilibria (single item) or search a strategy grid.
    SolveNash {
        instance: PathBuf,
        /// `default` for the built-in grid or a path to a grid file; forces a grid search.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Liquid welfare of an allocation, or the optimum when none is given.
    Welfare {
        instance: PathBuf,
        #[arg(long)]
        allocation: Option<PathBuf>,
    },
    /// Ratio of optimal welfare to the welfare at a profile's equilibrium.
    Poa {
        instance: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Run a named scenario with optional key=value parameters.
    Scenario {
        name: String,
        params: Vec<String>,
    },
    /// List registered scenarios.
    Scenarios,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PathArg {
    Auto,
    Exact,
    Iterative,
}

impl From<PathArg> for SolvePath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Auto => SolvePath::Auto,
            PathArg::Exact => SolvePath::Exact,
            PathArg::Iterative => SolvePath::Iterative,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    Lowest,
    Highest,
}

impl From<TieArg> for TieBreak {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Lowest => TieBreak::LowestIndexFirst,
            TieArg::Highest => TieBreak::HighestIndexFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Full,
    BudgetOnly,
    BudgetOnlyKnownValue,
    ValueOnly,
}

impl From<SpaceArg> for MessageSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Full => MessageSpace::Full,
            SpaceArg::BudgetOnly => MessageSpace::BudgetOnly,
            SpaceArg::BudgetOnlyKnownValue => MessageSpace::BudgetOnlyKnownValue,
            SpaceArg::ValueOnly => MessageSpace::ValueOnly,
        }
    }
}

/// Execute a parsed command line and return its report.
pub fn run(cli: Cli) -> Result<report::Report, commands::CliError> {
    let seed = cli.global.seed;
    match cli.command {
        Command::Fppe { instance, profile, path, tie_break } => {
            commands::fppe(&instance, profile.as_deref(), path.into(), tie_break.into(), seed)
        }
        Command::BestResponse { instance, profile, agent, space } => {
            commands::best_response_cmd(&instance, profile.as_deref(), agent, space.into(), seed)
        }
        Command::VerifyNash { instance, profile, eps, space } => {
            commands::verify_nash(&instance, profile.as_deref(), eps, space.into(), seed)
        }
        Command::SolveNash { instance, grid, eps } => commands::solve_nash(&instance, grid.as_deref(), eps, seed),
        Command::Welfare { instance, allocation } => commands::welfare(&instance, allocation.as_deref(), seed),
        Command::Poa { instance, profile } => commands::poa(&instance, profile.as_deref(), seed),
        Command::Scenario { name, params } => scenarios::run(&name, &params, seed),
        Command::Scenarios => Ok(scenarios::list()),
    }
}

