//! Pure equilibria of the single-item metagame.
//!
//! At a common price `p`, `y_i(p)` is the smallest allocation at which agent
//! `i` no longer wants a larger budget and `z_i(p)` is the largest allocation
//! it still values at the margin. Low-price equilibria sit where the `y`
//! sum to one; high-price equilibria use one agent as the price setter and
//! split the rest between `y` and `z`.

use serde::{Deserialize, Serialize};

use super::{verify_pure_nash, MessageSpace};
use crate::agents::{AgentType, Instance};
use crate::error::{Error, Result};
use crate::fppe::Message;
use crate::numeric::{bisect_first_true, bisect_last_true};

const BISECT_ITERS: usize = 200;
const VERIFY_EPS: f64 = 1e-6;
const INTERVAL_TOL: f64 = 1e-9;
const INTERIOR_SAMPLES: usize = 9;

/// Allocation bounds of every agent at one price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocBounds {
    pub p: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// `(y, z)` for one agent with click-through rate `phi` at price `p >= 0`.
///
/// At `p = 0` both equal one unless the agent has no use for the item.
pub fn agent_alloc_bounds(agent: &AgentType, phi: f64, p: f64) -> Result<(f64, f64)> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::input(format!("price must be finite and non-negative, got {p}")));
    }
    if !(phi >= 0.0) {
        return Err(Error::input(format!("click-through rate must be non-negative, got {phi}")));
    }
    let marginal_value = |x: f64| phi * agent.valuation.marginal(phi * x);
    let marginal_cost = |x: f64| p * agent.money_cost.marginal(p * x);
    let cap = if p == 0.0 {
        if agent.budget.is_zero() { 0.0 } else { 1.0 }
    } else {
        agent.budget.to_f64() / p
    };
    if phi == 0.0 || marginal_value(0.0) <= 0.0 {
        return Ok((0.0, 0.0));
    }
    if p == 0.0 {
        return Ok((cap.min(1.0), cap.min(1.0)));
    }
    let y = bisect_first_true(0.0, 1.0, BISECT_ITERS, |x| marginal_value(x) * (1.0 - x) <= marginal_cost(x));
    let z = if marginal_value(0.0) < marginal_cost(0.0) {
        0.0
    } else {
        bisect_last_true(0.0, 1.0, BISECT_ITERS, |x| marginal_value(x) >= marginal_cost(x))
    };
    Ok((y.min(cap).clamp(0.0, 1.0), z.min(cap).clamp(0.0, 1.0)))
}

fn single_item_ctr(instance: &Instance) -> Result<Vec<f64>> {
    if instance.n_items() != 1 {
        return Err(Error::Unsupported(format!(
            "the single-item characterization needs one item, got {}",
            instance.n_items()
        )));
    }
    Ok(instance.ctr.iter().map(|row| row[0]).collect())
}

/// Bounds for all agents of a single-item instance.
pub fn alloc_bounds(instance: &Instance, p: f64) -> Result<AllocBounds> {
    let phi = single_item_ctr(instance)?;
    let mut y = Vec::with_capacity(phi.len());
    let mut z = Vec::with_capacity(phi.len());
    for (agent, &c) in instance.agents.iter().zip(&phi) {
        let (a, b) = agent_alloc_bounds(agent, c, p)?;
        y.push(a);
        z.push(b);
    }
    Ok(AllocBounds { p, y, z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceInterval {
    pub lo: f64,
    pub hi: f64,
    /// The endpoint is only a limit (a zero price is never an equilibrium
    /// price when some agent has positive demand).
    pub lo_open: bool,
    pub hi_open: bool,
}

impl PriceInterval {
    pub fn contains(&self, p: f64, tol: f64) -> bool {
        p >= self.lo - tol && p <= self.hi + tol
    }

    pub fn is_subset_of(&self, other: &PriceInterval, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceIntervals {
    /// Prices where the lower bounds sum to exactly one.
    pub low: Option<PriceInterval>,
    /// Prices where the lower bounds sum to at most one and the upper
    /// bounds to at least one.
    pub high: Option<PriceInterval>,
}

impl PriceIntervals {
    /// Lowest per-unit price over all pure equilibria.
    pub fn lowest_price(&self) -> Option<f64> {
        self.low.map(|i| i.lo)
    }

    /// Highest per-unit price over all pure equilibria.
    pub fn highest_price(&self) -> Option<f64> {
        self.high.map(|i| i.hi)
    }
}

fn sums(instance: &Instance, phi: &[f64], p: f64) -> (f64, f64) {
    let mut sy = 0.0;
    let mut sz = 0.0;
    for (agent, &c) in instance.agents.iter().zip(phi) {
        let (y, z) = agent_alloc_bounds(agent, c, p).unwrap_or((0.0, 0.0));
        sy += y;
        sz += z;
    }
    (sy, sz)
}

/// Both price intervals of a single-item instance.
pub fn price_intervals(instance: &Instance) -> Result<PriceIntervals> {
    let phi = single_item_ctr(instance)?;
    let (sy0, _) = sums(instance, &phi, 0.0);
    if sy0 < 1.0 {
        return Ok(PriceIntervals { low: None, high: None });
    }
    // Both sums are below one far enough out.
    let mut top = 1.0;
    while top < 1e300 {
        let (sy, sz) = sums(instance, &phi, top);
        if sy < 1.0 && sz < 1.0 {
            break;
        }
        top *= 2.0;
    }
    let sy = |p: f64| sums(instance, &phi, p).0;
    let sz = |p: f64| sums(instance, &phi, p).1;
    // Endpoints within rounding of zero are the zero limit.
    let snap = |p: f64| if p <= 1e-12 * top { 0.0 } else { p };
    let lo_l = snap(bisect_first_true(0.0, top, BISECT_ITERS, |p| sy(p) <= 1.0));
    let hi_l = snap(bisect_last_true(0.0, top, BISECT_ITERS, |p| sy(p) >= 1.0));
    let hi_h = snap(bisect_last_true(lo_l, top, BISECT_ITERS, |p| sz(p) >= 1.0));
    let low = PriceInterval { lo: lo_l, hi: hi_l.max(lo_l), lo_open: lo_l == 0.0, hi_open: hi_l == 0.0 };
    let high = PriceInterval { lo: lo_l, hi: hi_h.max(lo_l), lo_open: lo_l == 0.0, hi_open: hi_h == 0.0 };
    Ok(PriceIntervals { low: Some(low), high: Some(high) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Low,
    High,
}

/// Every agent asks for the budget that buys exactly its lower bound.
pub fn construct_low_price_eq(instance: &Instance, p: f64) -> Result<Vec<Message>> {
    let intervals = price_intervals(instance)?;
    match intervals.low {
        Some(iv) if iv.contains(p, INTERVAL_TOL * iv.hi.max(1.0)) => {}
        _ => return Err(Error::input(format!("price {p} is outside the low-price interval"))),
    }
    let bounds = alloc_bounds(instance, p)?;
    Ok(bounds
        .y
        .iter()
        .zip(&instance.agents)
        .map(|(&y, agent)| Message::budget_only(agent.budget.min_f64(p * y)))
        .collect())
}

/// One agent sets the price by reporting it as its value; the others buy
/// between their bounds. `None` when no agent can play that role.
///
/// The price setter absorbs whatever the others leave at price `p`, so an
/// agent strictly below its upper bound could buy more at that price. The
/// profile is therefore built only when the price setter's lower bound is
/// zero (the others then exhaust the item), or when every other agent sits
/// at its upper bound and the price setter's share equals its lower bound.
pub fn construct_high_price_eq(instance: &Instance, p: f64) -> Result<Option<Vec<Message>>> {
    let intervals = price_intervals(instance)?;
    match intervals.high {
        Some(iv) if iv.contains(p, INTERVAL_TOL * iv.hi.max(1.0)) => {}
        _ => return Err(Error::input(format!("price {p} is outside the high-price interval"))),
    }
    if p <= 0.0 {
        return Ok(None);
    }
    let phi = single_item_ctr(instance)?;
    let AllocBounds { y, z, .. } = alloc_bounds(instance, p)?;
    let n = y.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| phi[i] > 0.0).collect();
    order.sort_by(|&a, &b| (z[b] - y[b]).total_cmp(&(z[a] - y[a])).then(a.cmp(&b)));
    let y_total: f64 = y.iter().sum();
    let z_total: f64 = z.iter().sum();
    let build = |star: usize, share: &[f64]| -> Vec<Message> {
        (0..n)
            .map(|k| if k == star {
                    Message::value_only(p / phi[k])
                } else {
                    Message::budget_only(instance.agents[k].budget.min_f64(p * share[k]))
                })
            .collect()
    };
    for &star in &order {
        let others_y = y_total - y[star];
        let others_z = z_total - z[star];
        if y[star] <= INTERVAL_TOL {
            if others_y > 1.0 + INTERVAL_TOL || others_z < 1.0 - INTERVAL_TOL {
                continue;
            }
            let mut share = y.clone();
            share[star] = 0.0;
            let mut missing = 1.0 - others_y;
            for k in (0..n).filter(|&k| k != star) {
                if missing <= 0.0 {
                    break;
                }
                let add = (z[k] - y[k]).min(missing);
                share[k] += add;
                missing -= add;
            }
            return Ok(Some(build(star, &share)));
        }
        if (y[star] + others_z - 1.0).abs() <= INTERVAL_TOL {
            return Ok(Some(build(star, &z)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleItemEquilibrium {
    pub price: f64,
    pub kind: EquilibriumKind,
    pub profile: Vec<Message>,
    /// Largest deviation gain found in the full message space.
    pub max_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleItemNashSolution {
    pub intervals: PriceIntervals,
    /// Verified equilibria in order of construction.
    pub equilibria: Vec<SingleItemEquilibrium>,
    /// Profiles at open interval endpoints: equilibria only in the limit.
    pub limits: Vec<SingleItemEquilibrium>,
    /// Constructed profiles that failed verification.
    pub rejected: usize,
    pub lowest_price: Option<f64>,
    pub highest_price: Option<f64>,
}

fn sample_prices(iv: &PriceInterval) -> Vec<f64> {
    let mut ps = vec![iv.lo, iv.hi];
    for k in 1..=INTERIOR_SAMPLES {
        ps.push(iv.lo + (iv.hi - iv.lo) * k as f64 / (INTERIOR_SAMPLES + 1) as f64);
    }
    ps.sort_by(f64::total_cmp);
    ps.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));
    ps
}

/// Low-price equilibria at the ends of the low interval and high-price
/// equilibria across the high interval, each verified against every
/// single-agent deviation.
pub fn solve_pure_nash_single_item(instance: &Instance) -> Result<SingleItemNashSolution> {
    let intervals = price_intervals(instance)?;
    let mut candidates: Vec<(f64, EquilibriumKind, Vec<Message>)> = Vec::new();
    if let Some(iv) = intervals.low {
        let mut ends = vec![iv.lo, iv.hi];
        ends.dedup();
        for p in ends {
            candidates.push((p, EquilibriumKind::Low, construct_low_price_eq(instance, p)?));
        }
    }
    if let Some(iv) = intervals.high {
        for p in sample_prices(&iv) {
            if let Some(profile) = construct_high_price_eq(instance, p)? {
                candidates.push((p, EquilibriumKind::High, profile));
            }
        }
    }
    let mut equilibria = Vec::new();
    let mut limits = Vec::new();
    let mut rejected = 0;
    for (price, kind, profile) in candidates {
        let report = verify_pure_nash(instance, &profile, VERIFY_EPS, MessageSpace::Full)?;
        let eq = SingleItemEquilibrium { price, kind, profile, max_gain: report.max_gain };
        if price == 0.0 {
            limits.push(eq);
        } else if report.is_eps_nash {
            equilibria.push(eq);
        } else {
            rejected += 1;
        }
    }
    Ok(SingleItemNashSolution {
        lowest_price: intervals.lowest_price(),
        highest_price: intervals.highest_price(),
        intervals,
        equilibria,
        limits,
        rejected,
    })
}
