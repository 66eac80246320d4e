//! The reporting game: each advertiser picks the (value, budget) message
//! that maximizes its true utility given the pacing equilibrium the
//! platform computes.

mod best_response;
mod equilibria;
mod grid;
mod mixed;
mod restricted;

use serde::{Deserialize, Serialize};

use crate::agents::Instance;
use crate::error::{Error, Result};
use crate::fppe::{solve_fppe, Message};

pub use best_response::{best_response, best_response_single_item};
pub use equilibria::{
    agent_alloc_bounds, alloc_bounds, construct_high_price_eq, construct_low_price_eq, price_intervals, solve_pure_nash_single_item,
    AllocBounds, EquilibriumKind, PriceInterval, PriceIntervals, SingleItemEquilibrium, SingleItemNashSolution,
};
pub use grid::{grid_epsilon_pne_search, GridProfile, GridSearchResult, StrategyGrid, MAX_PROFILES};
pub use mixed::{mixed_deviation_bound_check, AgentBound, DeviationBoundReport, MixedProfile, SupportPoint, MAX_SUPPORT};
pub use restricted::{value_only_instance, value_only_lower_bound, value_only_profile, Realization, ValueOnlyLowerBound};

/// Which messages an agent may deviate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageSpace {
    /// Any (value, budget) pair.
    #[default]
    Full,
    /// Infinite value, any budget.
    BudgetOnly,
    /// The agent's true per-click value, any budget.
    BudgetOnlyKnownValue,
    /// Any value, infinite budget.
    ValueOnly,
}

/// How a best response was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SearchMethod {
    /// Exact: breakpoints of the price path plus golden-section search on
    /// each concave piece.
    Piecewise { pieces: usize },
    /// Dense one-dimensional grid with local refinement.
    Grid { points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub agent: usize,
    pub message: Message,
    /// Supremum of the deviation utility.
    #[serde(with = "crate::ext::extended_f64")]
    pub utility: f64,
    /// False when the supremum is only approached (as the budget or value
    /// tends to zero); `message` is then the limit point.
    pub attained: bool,
    pub method: SearchMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheck {
    pub agent: usize,
    #[serde(with = "crate::ext::extended_f64")]
    pub current_utility: f64,
    pub best: BestResponse,
    #[serde(with = "crate::ext::extended_f64")]
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub is_eps_nash: bool,
    pub eps: f64,
    pub space: MessageSpace,
    pub worst_agent: usize,
    #[serde(with = "crate::ext::extended_f64")]
    pub max_gain: f64,
    pub agents: Vec<AgentCheck>,
}

pub(crate) fn check_profile(instance: &Instance, profile: &[Message]) -> Result<()> {
    if profile.len() != instance.n_agents() {
        return Err(Error::input(format!(
            "profile has {} messages for {} agents",
            profile.len(),
            instance.n_agents()
        )));
    }
    Ok(())
}

pub(crate) fn replace(profile: &[Message], i: usize, msg: Message) -> Vec<Message> {
    let mut p = profile.to_vec();
    p[i] = msg;
    p
}

/// True utility of agent `i` at the equilibrium of `profile`.
pub fn utility_of_profile(instance: &Instance, profile: &[Message], i: usize) -> Result<f64> {
    check_profile(instance, profile)?;
    if i >= profile.len() {
        return Err(Error::input(format!("agent index {i} out of range")));
    }
    let out = solve_fppe(instance, profile)?;
    Ok(instance.agents[i].utility(&out.allocation[i], &instance.ctr[i], out.payments[i]))
}

/// Check that no agent gains more than `eps` by deviating within `space`.
pub fn verify_pure_nash(instance: &Instance, profile: &[Message], eps: f64, space: MessageSpace) -> Result<NashReport> {
    check_profile(instance, profile)?;
    let out = solve_fppe(instance, profile)?;
    let mut agents = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let current = instance.agents[i].utility(&out.allocation[i], &instance.ctr[i], out.payments[i]);
        let best = best_response(instance, profile, i, space)?;
        let gain = if best.utility == f64::NEG_INFINITY && current == f64::NEG_INFINITY {
            0.0
        } else {
            best.utility - current
        };
        agents.push(AgentCheck { agent: i, current_utility: current, best, gain });
    }
    let (worst_agent, max_gain) = agents
        .iter()
        .map(|a| (a.agent, a.gain))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(NashReport { is_eps_nash: max_gain <= eps, eps, space, worst_agent, max_gain, agents })
}
