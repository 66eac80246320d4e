//! First-price pacing equilibrium for reported (value, budget) messages.
//!
//! Every reported pair `(ṽ_i, w̃_i)` is treated as a budgeted bidder. The
//! equilibrium is unique, so any solver path must land on the same prices.
//!
//! Three paths are available:
//! * a closed form for one item,
//! * an exact path that identifies the equilibrium's tie structure from a
//!   warm start and solves it exactly (small instances),
//! * an iterative proportional-response path that runs to a residual target.

mod flow;
mod iterative;
mod oracle;
mod single;
mod structure;
mod verify;

use serde::{Deserialize, Serialize};

use crate::agents::Instance;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::ext::{ExtNonNeg, Finite, Infinite};

pub use oracle::brute_force_fppe;
pub use verify::{compute_residuals, Residuals};

/// A reported (value, budget) pair. At most one component may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMessage")]
pub struct Message {
    pub value: ExtNonNeg,
    pub budget: ExtNonNeg,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMessage {
    value: ExtNonNeg,
    budget: ExtNonNeg,
}

impl TryFrom<RawMessage> for Message {
    type Error = Error;

    fn try_from(r: RawMessage) -> Result<Self> {
        Message::new(r.value, r.budget)
    }
}

impl Message {
    pub fn new(value: ExtNonNeg, budget: ExtNonNeg) -> Result<Self> {
        if value.is_infinite() && budget.is_infinite() {
            return Err(Error::input("a message cannot report both value and budget as infinite"));
        }
        Ok(Self { value, budget })
    }

    /// Finite value and budget.
    pub fn finite(value: f64, budget: f64) -> Self {
        Self { value: Finite(value), budget: Finite(budget) }
    }

    /// `(∞, budget)`.
    pub fn budget_only(budget: f64) -> Self {
        Self { value: Infinite, budget: Finite(budget) }
    }

    /// `(value, ∞)`.
    pub fn value_only(value: f64) -> Self {
        Self { value: Finite(value), budget: Infinite }
    }

    /// Whether this message can ever buy anything at a positive price.
    fn can_spend(&self, ctr_row: &[f64]) -> bool {
        !self.budget.is_zero() && !self.value.is_zero() && ctr_row.iter().any(|&c| c > 0.0)
    }
}

/// Order in which tied agents receive supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndexFirst,
    HighestIndexFirst,
}

impl TieBreak {
    pub(crate) fn order(self, idx: &[usize]) -> Vec<usize> {
        let mut v = idx.to_vec();
        match self {
            TieBreak::LowestIndexFirst => v.sort_unstable(),
            TieBreak::HighestIndexFirst => v.sort_unstable_by(|a, b| b.cmp(a)),
        }
        v
    }
}

/// Requested solution path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    #[default]
    Auto,
    Exact,
    Iterative,
}

/// Path that produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathUsed {
    ClosedForm,
    Exact,
    Iterative,
    Trivial,
    GridOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FppeOptions {
    pub tie_break: TieBreak,
    pub path: SolvePath,
    pub tolerances: Tolerances,
}

impl Default for FppeOptions {
    fn default() -> Self {
        Self { tie_break: TieBreak::default(), path: SolvePath::default(), tolerances: Tolerances::default() }
    }
}

impl FppeOptions {
    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_path(mut self, path: SolvePath) -> Self {
        self.path = path;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FppeOutcome {
    pub prices: Vec<f64>,
    /// `allocation[i][j]`: share of item `j` given to agent `i`.
    pub allocation: Vec<Vec<f64>>,
    pub payments: Vec<f64>,
    /// Pacing multipliers; zero for agents reporting an infinite value.
    pub multipliers: Vec<f64>,
    pub residuals: Residuals,
    pub path: PathUsed,
    pub iterations: usize,
}

impl FppeOutcome {
    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }

    /// Clicks received by agent `i`.
    pub fn clicks(&self, ctr: &[Vec<f64>], i: usize) -> f64 {
        crate::agents::clicks(&self.allocation[i], &ctr[i])
    }
}

pub(crate) fn validate_market(ctr: &[Vec<f64>], msgs: &[Message]) -> Result<()> {
    if ctr.is_empty() || ctr.len() != msgs.len() {
        return Err(Error::input(format!(
            "profile has {} messages for {} agents",
            msgs.len(),
            ctr.len()
        )));
    }
    let m = ctr[0].len();
    if m == 0 || ctr.iter().any(|r| r.len() != m) {
        return Err(Error::input("ragged or empty click-through-rate matrix"));
    }
    if ctr.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::input("click-through rates must be finite and non-negative"));
    }
    for (i, msg) in msgs.iter().enumerate() {
        if msg.value.is_infinite() && msg.budget.is_infinite() {
            return Err(Error::input(format!("message {i} reports both components as infinite")));
        }
        for x in [msg.value, msg.budget] {
            if let Finite(v) = x {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::input(format!("message {i} has invalid entry {v}")));
                }
            }
        }
    }
    Ok(())
}

/// Pacing multipliers implied by prices: `min(1, min_j p_j / (ṽ_i φ_ij))`.
pub(crate) fn multipliers_from_prices(ctr: &[Vec<f64>], msgs: &[Message], prices: &[f64]) -> Vec<f64> {
    msgs.iter()
        .zip(ctr)
        .map(|(msg, row)| match msg.value {
            Infinite => 0.0,
            Finite(v) => {
                let mut a = 1.0f64;
                for (&p, &phi) in prices.iter().zip(row) {
                    if v * phi > 0.0 {
                        a = a.min(p / (v * phi));
                    }
                }
                a
            }
        })
        .collect()
}

fn assemble(
    ctr: &[Vec<f64>],
    msgs: &[Message],
    prices: Vec<f64>,
    allocation: Vec<Vec<f64>>,
    path: PathUsed,
    iterations: usize,
) -> FppeOutcome {
    let payments: Vec<f64> = allocation
        .iter()
        .map(|row| row.iter().zip(&prices).map(|(x, p)| x * p).sum())
        .collect();
    let residuals = compute_residuals(ctr, msgs, &prices, &allocation, &payments);
    let multipliers = multipliers_from_prices(ctr, msgs, &prices);
    FppeOutcome { prices, allocation, payments, multipliers, residuals, path, iterations }
}

/// Solve with default options.
pub fn solve_fppe(instance: &Instance, profile: &[Message]) -> Result<FppeOutcome> {
    solve_market(&instance.ctr, profile, &FppeOptions::default())
}

/// Closed-form equilibrium of a one-item market, all click-through rates one.
pub fn solve_fppe_single_item(profile: &[Message]) -> Result<FppeOutcome> {
    let ctr = vec![vec![1.0]; profile.len()];
    solve_market(&ctr, profile, &FppeOptions::default())
}

/// Solve for an arbitrary click-through-rate matrix and message profile.
pub fn solve_market(ctr: &[Vec<f64>], msgs: &[Message], opts: &FppeOptions) -> Result<FppeOutcome> {
    validate_market(ctr, msgs)?;
    let n = msgs.len();
    let m = ctr[0].len();
    if m == 1 {
        let (p, x) = single::solve(ctr, msgs, opts.tie_break);
        return Ok(assemble(ctr, msgs, vec![p], x, PathUsed::ClosedForm, 0));
    }
    let sub = SubMarket::new(ctr, msgs);
    if sub.agents.is_empty() {
        return Ok(assemble(ctr, msgs, vec![0.0; m], vec![vec![0.0; m]; n], PathUsed::Trivial, 0));
    }
    let tol = &opts.tolerances;
    let small = sub.agents.len() <= tol.exact_max_agents && sub.items.len() <= tol.exact_max_items;
    match opts.path {
        SolvePath::Iterative => iterative_only(ctr, msgs, &sub, opts),
        SolvePath::Exact if !small => Err(Error::Size(format!(
            "exact path handles at most {} agents and {} items",
            tol.exact_max_agents, tol.exact_max_items
        ))),
        SolvePath::Exact | SolvePath::Auto if small => {
            let attempt = structure::solve_exact(&sub, opts);
            if let Some(sol) = attempt.solution {
                let (p, x) = sub.expand(&sol.prices, &sol.allocation);
                let out = assemble(ctr, msgs, p, x, PathUsed::Exact, attempt.iterations);
                if out.residuals.normalized_worst() <= tol.eps_exact {
                    return Ok(out);
                }
            }
            if opts.path == SolvePath::Exact {
                let (p, x) = sub.expand_bids(&attempt.bids);
                let out = assemble(ctr, msgs, p, x, PathUsed::Iterative, attempt.iterations);
                return Err(Error::Convergence {
                    iterations: attempt.iterations,
                    worst: out.residuals.normalized_worst(),
                    residuals: Box::new(out.residuals),
                });
            }
            let (p, x) = sub.expand_bids(&attempt.bids);
            let out = assemble(ctr, msgs, p, x, PathUsed::Iterative, attempt.iterations);
            if out.residuals.normalized_worst() <= tol.eps_fppe {
                Ok(out)
            } else {
                Err(Error::Convergence {
                    iterations: attempt.iterations,
                    worst: out.residuals.normalized_worst(),
                    residuals: Box::new(out.residuals),
                })
            }
        }
        _ => iterative_only(ctr, msgs, &sub, opts),
    }
}

fn iterative_only(ctr: &[Vec<f64>], msgs: &[Message], sub: &SubMarket, opts: &FppeOptions) -> Result<FppeOutcome> {
    let tol = &opts.tolerances;
    let mut pr = iterative::ProportionalResponse::new(sub);
    let mut best: Option<FppeOutcome> = None;
    let check_every = 10;
    while pr.iterations < tol.max_iter {
        pr.run(sub, check_every.min(tol.max_iter - pr.iterations));
        let (p, x) = sub.expand_bids(&pr.bids);
        let out = assemble(ctr, msgs, p, x, PathUsed::Iterative, pr.iterations);
        let worst = out.residuals.normalized_worst();
        if worst <= tol.eps_exact {
            return Ok(out);
        }
        if best.as_ref().is_none_or(|b| worst < b.residuals.normalized_worst()) {
            best = Some(out);
        }
    }
    // Ill-conditioned markets may stall short of the tight target.
    let best = best.expect("at least one iteration ran");
    if best.residuals.normalized_worst() <= tol.eps_fppe {
        return Ok(best);
    }
    Err(Error::Convergence {
        iterations: pr.iterations,
        worst: best.residuals.normalized_worst(),
        residuals: Box::new(best.residuals),
    })
}

/// Verdict of [`verify_fppe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FppeVerdict {
    pub passed: bool,
    pub residuals: Residuals,
    pub tolerance: f64,
}

/// Check the equilibrium conditions of `(prices, allocation, payments)`.
/// Quantities of supply are compared against `eps` directly, money
/// quantities against `eps` times the largest price.
pub fn verify_fppe(
    instance: &Instance,
    profile: &[Message],
    prices: &[f64],
    allocation: &[Vec<f64>],
    payments: &[f64],
    eps: f64,
) -> Result<FppeVerdict> {
    validate_market(&instance.ctr, profile)?;
    let m = instance.n_items();
    if prices.len() != m || allocation.len() != profile.len() || payments.len() != profile.len() {
        return Err(Error::input("outcome dimensions do not match the instance"));
    }
    if allocation.iter().any(|r| r.len() != m) {
        return Err(Error::input("allocation rows must have one entry per item"));
    }
    let residuals = compute_residuals(&instance.ctr, profile, prices, allocation, payments);
    Ok(FppeVerdict { passed: residuals.normalized_worst() <= eps, residuals, tolerance: eps })
}

/// Before/after comparison when one agent's reported budget rises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub agent: usize,
    pub budget_before: f64,
    pub budget_after: f64,
    pub prices_before: Vec<f64>,
    pub prices_after: Vec<f64>,
    /// Smallest per-item price change (non-negative when prices are monotone).
    pub min_price_delta: f64,
    pub revenue_delta: f64,
}

/// Solve before and after raising agent `agent`'s reported budget by `delta`.
pub fn price_monotonicity_check(
    instance: &Instance,
    profile: &[Message],
    agent: usize,
    delta: f64,
) -> Result<MonotonicityReport> {
    if agent >= profile.len() {
        return Err(Error::input(format!("agent index {agent} out of range")));
    }
    let w = profile[agent]
        .budget
        .finite()
        .ok_or_else(|| Error::input("agent reports an infinite budget; it cannot be raised"))?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::input("budget increase must be positive and finite"));
    }
    let before = solve_fppe(instance, profile)?;
    let mut raised = profile.to_vec();
    raised[agent].budget = Finite(w + delta);
    let after = solve_fppe(instance, &raised)?;
    let min_price_delta = after
        .prices
        .iter()
        .zip(&before.prices)
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        agent,
        budget_before: w,
        budget_after: w + delta,
        revenue_delta: after.revenue() - before.revenue(),
        prices_before: before.prices,
        prices_after: after.prices,
        min_price_delta,
    })
}

/// The part of a market that can trade at positive prices.
#[derive(Debug, Clone)]
pub(crate) struct SubMarket {
    n: usize,
    m: usize,
    /// Original indices of agents that can spend.
    pub agents: Vec<usize>,
    /// Original indices of items some active agent values.
    pub items: Vec<usize>,
    /// `phi[a][k]` over active agents and items.
    pub phi: Vec<Vec<f64>>,
    /// Reported value; `None` for infinity.
    pub value: Vec<Option<f64>>,
    /// Reported budget; `None` for infinity.
    pub budget: Vec<Option<f64>>,
}

impl SubMarket {
    pub fn new(ctr: &[Vec<f64>], msgs: &[Message]) -> Self {
        let n = msgs.len();
        let m = ctr[0].len();
        let agents: Vec<usize> = (0..n).filter(|&i| msgs[i].can_spend(&ctr[i])).collect();
        let items: Vec<usize> = (0..m).filter(|&j| agents.iter().any(|&i| ctr[i][j] > 0.0)).collect();
        let phi = agents.iter().map(|&i| items.iter().map(|&j| ctr[i][j]).collect()).collect();
        let value = agents.iter().map(|&i| msgs[i].value.finite()).collect();
        let budget = agents.iter().map(|&i| msgs[i].budget.finite()).collect();
        Self { n, m, agents, items, phi, value, budget }
    }

    /// Scatter sub-market prices and allocation back to full size.
    pub fn expand(&self, prices: &[f64], alloc: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut p = vec![0.0; self.m];
        let mut x = vec![vec![0.0; self.m]; self.n];
        for (k, &j) in self.items.iter().enumerate() {
            p[j] = prices[k];
        }
        for (a, &i) in self.agents.iter().enumerate() {
            for (k, &j) in self.items.iter().enumerate() {
                x[i][j] = alloc[a][k];
            }
        }
        (p, x)
    }

    /// Prices and allocation implied by a bid matrix.
    pub fn expand_bids(&self, bids: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = self.items.len();
        let prices: Vec<f64> = (0..k).map(|j| bids.iter().map(|r| r[j]).sum()).collect();
        let alloc: Vec<Vec<f64>> = bids
            .iter()
            .map(|r| (0..k).map(|j| if prices[j] > 0.0 { r[j] / prices[j] } else { 0.0 }).collect())
            .collect();
        self.expand(&prices, &alloc)
    }
}
