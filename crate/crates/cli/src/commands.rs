//! Subcommands that operate on an instance file.

use std::fmt;
use std::path::Path;

use pacing_core::fppe::{solve_market, verify_fppe, FppeOptions, SolvePath, TieBreak};
use pacing_core::metagame::{
    best_response, grid_epsilon_pne_search, solve_pure_nash_single_item, utility_of_profile, verify_pure_nash, MessageSpace,
    StrategyGrid,
};
use pacing_core::welfare::{liquid_welfare, optimal_liquid_welfare, poa_ratio};
use pacing_core::{Error, Instance, Message};
use serde_json::json;

use crate::io::{self, InputError};
use crate::report::{num, to_value, Report};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                Error::Input(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Size(_) | Error::Range { .. } => 2,
                Error::Convergence { .. } | Error::Certification { .. } => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) => f.write_str(s),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

const RECOMPUTED: &str = "equilibrium conditions recomputed from the outcome";

fn load(path: &Path, seed: Option<u64>) -> CliResult<(Instance, Report)> {
    let (instance, file_seed) = io::load_instance(path)?;
    let mut report = Report::new("file", "");
    report.param("instance", path.display().to_string());
    report.param("agents", instance.n_agents());
    report.param("items", instance.n_items());
    report.seed = seed.or(file_seed);
    Ok((instance, report))
}

fn profile_for(instance: &Instance, path: Option<&Path>, report: &mut Report) -> CliResult<Vec<Message>> {
    let profile = match path {
        Some(p) => {
            report.param("profile", p.display().to_string());
            io::load_profile(p)?
        }
        None => {
            report.param("profile", "truthful");
            io::truthful_profile(instance).map_err(CliError::Input)?
        }
    };
    if profile.len() != instance.n_agents() {
        return Err(CliError::Input(format!(
            "profile has {} messages for {} agents",
            profile.len(),
            instance.n_agents()
        )));
    }
    Ok(profile)
}

pub fn fppe(path: &Path, profile: Option<&Path>, solve: SolvePath, tie: TieBreak, seed: Option<u64>) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "fppe".into();
    let profile = profile_for(&instance, profile, &mut report)?;
    report.param("path", solve).param("tie_break", tie);
    let opts = FppeOptions::default().with_path(solve).with_tie_break(tie);
    report.tolerances = opts.tolerances;
    let out = solve_market(&instance.ctr, &profile, &opts)?;
    let verdict = verify_fppe(&instance, &profile, &out.prices, &out.allocation, &out.payments, opts.tolerances.eps_fppe)?;
    report.check_close(
        "worst normalized residual",
        verdict.residuals.normalized_worst(),
        0.0,
        opts.tolerances.eps_fppe,
        RECOMPUTED,
    );
    report.result = json!({ "outcome": to_value(&out), "revenue": num(out.revenue()) });
    Ok(report)
}

pub fn best_response_cmd(
    path: &Path,
    profile: Option<&Path>,
    agent: usize,
    space: MessageSpace,
    seed: Option<u64>,
) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "best-response".into();
    let profile = profile_for(&instance, profile, &mut report)?;
    if agent >= instance.n_agents() {
        return Err(CliError::Input(format!("agent {agent} out of range for {} agents", instance.n_agents())));
    }
    report.param("agent", agent).param("space", space);
    let current = utility_of_profile(&instance, &profile, agent)?;
    let best = best_response(&instance, &profile, agent, space)?;
    let eps = report.tolerances.eps_nash_single;
    report.check(
        "best response is no worse than the current report",
        num(best.utility),
        num(current),
        "the current report lies in every message space containing it",
        best.utility >= current - eps || !profile_in_space(&profile[agent], &instance, agent, space),
    );
    report.result = json!({ "current_utility": num(current), "gain": num(best.utility - current), "best": to_value(&best) });
    Ok(report)
}

fn profile_in_space(msg: &Message, instance: &Instance, agent: usize, space: MessageSpace) -> bool {
    match space {
        MessageSpace::Full => true,
        MessageSpace::BudgetOnly => msg.value.is_infinite(),
        MessageSpace::BudgetOnlyKnownValue => msg.value.finite() == instance.agents[agent].linear_value(),
        MessageSpace::ValueOnly => msg.budget.is_infinite(),
    }
}

pub fn verify_nash(path: &Path, profile: Option<&Path>, eps: f64, space: MessageSpace, seed: Option<u64>) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "verify-nash".into();
    let profile = profile_for(&instance, profile, &mut report)?;
    report.param("eps", eps).param("space", space);
    let rep = verify_pure_nash(&instance, &profile, eps, space)?;
    report.check_close("largest deviation gain", rep.max_gain.max(0.0), 0.0, eps, "no profitable deviation");
    report.result = to_value(&rep);
    Ok(report)
}

pub fn solve_nash(path: &Path, grid: Option<&str>, eps: f64, seed: Option<u64>) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "solve-nash".into();
    match grid {
        None if instance.n_items() == 1 => {
            report.param("method", "single-item construction");
            let sol = solve_pure_nash_single_item(&instance)?;
            report.check(
                "constructed profiles rejected by verification",
                sol.rejected,
                0,
                "every constructed profile is an equilibrium",
                sol.rejected == 0,
            );
            report.result = to_value(&sol);
        }
        _ => {
            let g = match grid {
                None | Some("default") => StrategyGrid::default_for(instance.n_agents()),
                Some(file) => io::load_grid(Path::new(file))?,
            };
            if g.messages.len() != instance.n_agents() {
                return Err(CliError::Input(format!(
                    "grid has {} agent rows for {} agents",
                    g.messages.len(),
                    instance.n_agents()
                )));
            }
            report.param("method", "grid search").param("grid", grid.unwrap_or("default")).param("eps", eps);
            let res = grid_epsilon_pne_search(&instance, &g, eps)?;
            report.result = to_value(&res);
        }
    }
    Ok(report)
}

pub fn welfare(path: &Path, allocation: Option<&Path>, seed: Option<u64>) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "welfare".into();
    match allocation {
        Some(a) => {
            report.param("allocation", a.display().to_string());
            let x = io::load_allocation(a)?;
            let value = liquid_welfare(&instance, &x)?;
            report.result = json!({ "liquid_welfare": num(value), "allocation": x });
        }
        None => {
            report.param("allocation", "optimal");
            let opt = optimal_liquid_welfare(&instance)?;
            report.result = to_value(&opt);
        }
    }
    Ok(report)
}

pub fn poa(path: &Path, profile: Option<&Path>, seed: Option<u64>) -> CliResult<Report> {
    let (instance, mut report) = load(path, seed)?;
    report.name = "poa".into();
    let profile = profile_for(&instance, profile, &mut report)?;
    let out = solve_market(&instance.ctr, &profile, &FppeOptions::default())?;
    let rep = poa_ratio(&instance, &out.allocation)?;
    report.result = json!({ "poa": to_value(&rep), "prices": out.prices, "allocation": out.allocation });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(Error::Size("big".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Range { value: 2.0, sup: 1.0 }).exit_code(), 2);
        assert_eq!(CliError::from(Error::Certification { best: 1.0, gap: 0.1 }).exit_code(), 3);
        let residuals = Box::default();
        assert_eq!(CliError::from(Error::Convergence { iterations: 5, worst: 1.0, residuals }).exit_code(), 3);
    }
}
