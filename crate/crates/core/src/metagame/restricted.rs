//! Welfare loss when advertisers can report only a value.
//!
//! `N` agents value clicks at `N²` but hold a budget of one half; two more
//! agents hold a budget of one and value clicks at 2 with probability
//! `1 - eps`, else at 0. In the equilibrium studied here the small agents
//! report one half and the large agents report 1 when their value is 2,
//! which prices the small agents out whenever a large agent shows up.

use serde::{Deserialize, Serialize};

use crate::agents::{AgentType, Instance};
use crate::error::{Error, Result};
use crate::fppe::{solve_fppe, Message};
use crate::welfare::{liquid_welfare, optimal_liquid_welfare};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    /// Whether each of the two large agents has value 2.
    pub high: [bool; 2],
    pub probability: f64,
    pub optimum: f64,
    pub equilibrium_welfare: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueOnlyLowerBound {
    pub small_agents: usize,
    pub eps: f64,
    pub expected_optimum: f64,
    /// Upper bound on the equilibrium's expected welfare under any tie-break.
    pub equilibrium_bound: f64,
    /// Expected welfare of the equilibrium under the solver's tie-break.
    pub evaluated_equilibrium: f64,
    /// `expected_optimum / equilibrium_bound`.
    pub ratio: f64,
    pub realizations: Vec<Realization>,
}

/// Instance for one realization of the two large agents' values.
pub fn value_only_instance(small_agents: usize, high: [bool; 2]) -> Result<Instance> {
    let big = (small_agents * small_agents) as f64;
    let mut agents = vec![AgentType::budgeted(big, 0.5); small_agents];
    agents.extend(high.iter().map(|&h| AgentType::budgeted(if h { 2.0 } else { 0.0 }, 1.0)));
    Instance::single_item(agents)
}

/// Equilibrium reports for one realization.
pub fn value_only_profile(small_agents: usize, high: [bool; 2]) -> Vec<Message> {
    let mut profile = vec![Message::value_only(0.5); small_agents];
    profile.extend(high.iter().map(|&h| Message::value_only(if h { 1.0 } else { 0.0 })));
    profile
}

/// Expected optimum against the equilibrium welfare bound.
pub fn value_only_lower_bound(small_agents: usize, eps: f64) -> Result<ValueOnlyLowerBound> {
    if small_agents == 0 {
        return Err(Error::input("need at least one small agent"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::input(format!("probability must lie in [0, 1], got {eps}")));
    }
    let mut realizations = Vec::with_capacity(4);
    let mut expected_optimum = 0.0;
    let mut evaluated_equilibrium = 0.0;
    for high in [[true, true], [true, false], [false, true], [false, false]] {
        let probability = high.iter().map(|&h| if h { 1.0 - eps } else { eps }).product::<f64>();
        let instance = value_only_instance(small_agents, high)?;
        let optimum = optimal_liquid_welfare(&instance)?.value;
        let out = solve_fppe(&instance, &value_only_profile(small_agents, high))?;
        let equilibrium_welfare = liquid_welfare(&instance, &out.allocation)?;
        expected_optimum += probability * optimum;
        evaluated_equilibrium += probability * equilibrium_welfare;
        realizations.push(Realization { high, probability, optimum, equilibrium_welfare, price: out.prices[0] });
    }
    let n = small_agents as f64;
    let equilibrium_bound = (1.0 - eps).powi(2) * 2.0 + 2.0 * eps * (1.0 - eps) + eps * eps * n / 2.0;
    Ok(ValueOnlyLowerBound {
        small_agents,
        eps,
        expected_optimum,
        equilibrium_bound,
        evaluated_equilibrium,
        ratio: expected_optimum / equilibrium_bound,
        realizations,
    })
}
