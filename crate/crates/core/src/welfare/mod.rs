//! Liquid welfare: each agent contributes the smaller of its budget and the
//! money it would give up for the clicks it receives.

mod optimum;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::agents::{clicks, Instance};
use crate::error::{Error, Result};

pub use optimum::optimal_liquid_welfare;
pub use oracle::brute_force_optimal_welfare;

/// Allocation slack tolerated by the feasibility check.
const FEASIBILITY_TOL: f64 = 1e-9;

pub(crate) fn check_allocation(instance: &Instance, alloc: &[Vec<f64>]) -> Result<()> {
    let m = instance.n_items();
    if alloc.len() != instance.n_agents() || alloc.iter().any(|r| r.len() != m) {
        return Err(Error::input("allocation dimensions do not match the instance"));
    }
    if alloc.iter().flatten().any(|x| !x.is_finite() || *x < -FEASIBILITY_TOL) {
        return Err(Error::input("allocation entries must be finite and non-negative"));
    }
    for j in 0..m {
        let sold: f64 = alloc.iter().map(|r| r[j]).sum();
        if sold > 1.0 + FEASIBILITY_TOL {
            return Err(Error::input(format!("item {j} is over-allocated ({sold})")));
        }
    }
    Ok(())
}

/// Liquid welfare of a deterministic allocation.
pub fn liquid_welfare(instance: &Instance, allocation: &[Vec<f64>]) -> Result<f64> {
    check_allocation(instance, allocation)?;
    Ok(instance
        .agents
        .iter()
        .zip(allocation)
        .zip(&instance.ctr)
        .map(|((a, x), c)| a.willingness_to_pay(clicks(x, c).max(0.0)))
        .sum())
}

/// Liquid welfare of a randomized allocation, given each agent's expected
/// valuation of its clicks.
pub fn liquid_welfare_from_expected_values(instance: &Instance, expected_values: &[f64]) -> f64 {
    instance
        .agents
        .iter()
        .zip(expected_values)
        .map(|(a, &ev)| match a.money_cost.inverse_ext(ev) {
            crate::ext::Finite(t) => a.budget.min_f64(t),
            crate::ext::Infinite => a.budget.to_f64(),
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumMethod {
    /// Bisection on a common marginal value (one item).
    MarginalBisection,
    /// Projected supergradient ascent followed by pairwise exchanges.
    SupergradientExchange,
    /// Exhaustive simplex grid with local refinement.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareOptimum {
    pub value: f64,
    pub allocation: Vec<Vec<f64>>,
    pub method: OptimumMethod,
    /// Upper bound on `optimum - value` from a dual certificate, when one
    /// is available.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaReport {
    /// `optimal / equilibrium`; infinite when the equilibrium has zero welfare.
    #[serde(with = "crate::ext::extended_f64")]
    pub ratio: f64,
    pub optimal: f64,
    pub equilibrium: f64,
    pub note: Option<String>,
}

/// Ratio of optimal liquid welfare to the welfare of `eq_allocation`.
pub fn poa_ratio(instance: &Instance, eq_allocation: &[Vec<f64>]) -> Result<PoaReport> {
    let equilibrium = liquid_welfare(instance, eq_allocation)?;
    let optimal = optimal_liquid_welfare(instance)?.value;
    let (ratio, note) = if equilibrium > 0.0 {
        (optimal / equilibrium, None)
    } else if optimal > 0.0 {
        (f64::INFINITY, Some("equilibrium allocation has zero liquid welfare".to_string()))
    } else {
        (1.0, Some("both optimal and equilibrium welfare are zero".to_string()))
    };
    Ok(PoaReport { ratio, optimal, equilibrium, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentType;

    #[test]
    fn liquid_welfare_caps_each_agent_at_its_budget() {
        let inst = Instance::single_item(vec![AgentType::budgeted(100.0, 1.0), AgentType::linear(1.0)]).unwrap();
        let w = liquid_welfare(&inst, &[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(w, 1.0);
        let w = liquid_welfare(&inst, &[vec![0.01], vec![0.99]]).unwrap();
        assert!((w - 1.99).abs() < 1e-12);
    }

    #[test]
    fn over_allocation_is_rejected() {
        let inst = Instance::single_item(vec![AgentType::linear(1.0), AgentType::linear(1.0)]).unwrap();
        assert!(liquid_welfare(&inst, &[vec![0.7], vec![0.7]]).is_err());
    }

    #[test]
    fn zero_welfare_equilibrium_gives_infinite_ratio() {
        let inst = Instance::single_item(vec![AgentType::linear(1.0), AgentType::linear(0.0)]).unwrap();
        let r = poa_ratio(&inst, &[vec![0.0], vec![1.0]]).unwrap();
        assert!(r.ratio.is_infinite() && r.note.is_some());
    }
}
