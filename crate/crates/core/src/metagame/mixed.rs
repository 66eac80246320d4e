//! Per-agent deviation bounds for randomized message profiles.

use serde::{Deserialize, Serialize};

use super::check_profile;
use crate::agents::{clicks, Instance};
use crate::error::{Error, Result};
use crate::fppe::{solve_fppe, Message};
use crate::welfare::{check_allocation, liquid_welfare, liquid_welfare_from_expected_values};

/// Largest support product enumerated.
pub const MAX_SUPPORT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub message: Message,
    pub prob: f64,
}

/// Independent finite-support distributions, one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    pub supports: Vec<Vec<SupportPoint>>,
}

impl MixedProfile {
    pub fn point_mass(profile: &[Message]) -> Self {
        Self { supports: profile.iter().map(|&message| vec![SupportPoint { message, prob: 1.0 }]).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.supports.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::input(format!("agent {i} has an empty support")));
            }
            if row.iter().any(|s| !(s.prob >= 0.0)) {
                return Err(Error::input(format!("agent {i} has a negative probability")));
            }
            let total: f64 = row.iter().map(|s| s.prob).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::input(format!("agent {i} probabilities sum to {total}")));
            }
        }
        Ok(())
    }

    pub fn is_pure(&self) -> bool {
        self.supports.iter().all(|row| row.iter().filter(|s| s.prob > 0.0).count() == 1)
    }

    fn support_size(&self) -> Option<usize> {
        self.supports.iter().try_fold(1usize, |acc, row| acc.checked_mul(row.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBound {
    pub agent: usize,
    pub expected_utility: f64,
    /// Half the agent's welfare contribution under the reference allocation.
    pub half_reference_welfare: f64,
    /// Money-equivalent of the expected utility plus the expected cost of
    /// the reference bundle.
    pub bound: f64,
    pub slack: f64,
    /// Expected prices with this agent replaced by a zero budget.
    pub prices_without: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationBoundReport {
    pub expected_prices: Vec<f64>,
    pub expected_revenue: f64,
    pub equilibrium_welfare: f64,
    pub reference_welfare: f64,
    pub agents: Vec<AgentBound>,
    /// `4 * equilibrium - reference`.
    pub aggregate_slack: f64,
    /// `2 * equilibrium - reference`, the guarantee for pure profiles.
    pub pure_slack: f64,
    pub is_pure: bool,
    /// Expected revenue does not exceed equilibrium welfare.
    pub revenue_within_welfare: bool,
    /// Removing any agent never raises an expected price.
    pub prices_drop_without_agent: bool,
}

/// Evaluate the per-agent deviation inequality for `mixed` against the
/// reference allocation `reference` (typically the welfare optimum).
pub fn mixed_deviation_bound_check(
    instance: &Instance,
    mixed: &MixedProfile,
    reference: &[Vec<f64>],
) -> Result<DeviationBoundReport> {
    mixed.validate()?;
    if mixed.supports.len() != instance.n_agents() {
        return Err(Error::input(format!(
            "mixed profile has {} agents, instance has {}",
            mixed.supports.len(),
            instance.n_agents()
        )));
    }
    check_allocation(instance, reference)?;
    let total = mixed
        .support_size()
        .filter(|&t| t <= MAX_SUPPORT)
        .ok_or_else(|| Error::Size(format!("support product exceeds {MAX_SUPPORT} profiles")))?;
    let n = instance.n_agents();
    let m = instance.n_items();

    let mut prices = vec![0.0; m];
    let mut prices_without = vec![vec![0.0; m]; n];
    let mut utility = vec![0.0; n];
    let mut value = vec![0.0; n];
    let mut revenue = 0.0;
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut prob = 1.0;
        let profile: Vec<Message> = (0..n)
            .map(|i| {
                let s = &mixed.supports[i][idx[i]];
                prob *= s.prob;
                s.message
            })
            .collect();
        if prob > 0.0 {
            check_profile(instance, &profile)?;
            let out = solve_fppe(instance, &profile)?;
            for (e, p) in prices.iter_mut().zip(&out.prices) {
                *e += prob * p;
            }
            revenue += prob * out.revenue();
            for i in 0..n {
                let agent = &instance.agents[i];
                let q = out.clicks(&instance.ctr, i);
                utility[i] += prob * agent.utility_of_clicks(q, out.payments[i]);
                value[i] += prob * agent.valuation.value(q);
                let mut without = profile.clone();
                without[i] = Message::budget_only(0.0);
                let out_without = solve_fppe(instance, &without)?;
                for (e, p) in prices_without[i].iter_mut().zip(&out_without.prices) {
                    *e += prob * p;
                }
            }
        }
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < mixed.supports[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }

    let equilibrium_welfare = liquid_welfare_from_expected_values(instance, &value);
    let reference_welfare = liquid_welfare(instance, reference)?;
    let tol = 1e-9 * prices.iter().fold(1.0f64, |a, &p| a.max(p));
    let agents: Vec<AgentBound> = (0..n)
        .map(|i| {
            let agent = &instance.agents[i];
            let money = agent.money_cost.inverse_ext(utility[i].max(0.0));
            let money = agent.budget.min_f64(money.to_f64());
            let bundle: f64 = reference[i].iter().zip(&prices).map(|(x, p)| x * p).sum();
            let half = 0.5 * agent.willingness_to_pay(clicks(&reference[i], &instance.ctr[i]));
            let bound = money + bundle;
            AgentBound {
                agent: i,
                expected_utility: utility[i],
                half_reference_welfare: half,
                bound,
                slack: bound - half,
                prices_without: prices_without[i].clone(),
            }
        })
        .collect();
    let prices_drop_without_agent =
        prices_without.iter().all(|row| row.iter().zip(&prices).all(|(a, b)| *a <= b + tol));
    Ok(DeviationBoundReport {
        revenue_within_welfare: revenue <= equilibrium_welfare + tol,
        prices_drop_without_agent,
        aggregate_slack: 4.0 * equilibrium_welfare - reference_welfare,
        pure_slack: 2.0 * equilibrium_welfare - reference_welfare,
        is_pure: mixed.is_pure(),
        expected_prices: prices,
        expected_revenue: revenue,
        equilibrium_welfare,
        reference_welfare,
        agents,
    })
}
