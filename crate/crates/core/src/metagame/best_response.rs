//! Best responses within a message space.
//!
//! Every deviation space is one-dimensional: a budget with infinite value,
//! a budget with the true value, or a value with infinite budget. Along that
//! parameter the item prices never decrease. With one item the price path
//! is piecewise either rising with the parameter or flat at an opponent's
//! effective value; the utility is concave on each such piece, so the
//! breakpoints plus a golden-section search per piece give the exact
//! supremum. With several items a dense grid with local refinement is used.

use super::{check_profile, replace, BestResponse, MessageSpace, SearchMethod};
use crate::agents::{AgentType, Instance};
use crate::error::{Error, Result};
use crate::fppe::{solve_fppe, FppeOutcome, Message};
use crate::numeric::{bisect_first_true, bisect_last_true, golden_max, mixed_grid};

const GRID_POINTS: usize = 2000;

/// One-parameter family of deviations for a fixed agent.
struct Family<'a> {
    instance: &'a Instance,
    profile: &'a [Message],
    agent: usize,
    space: MessageSpace,
    /// Per-click true value, needed for the known-value space.
    true_value: f64,
}

impl Family<'_> {
    fn message(&self, theta: f64) -> Message {
        match self.space {
            MessageSpace::Full | MessageSpace::BudgetOnly => Message::budget_only(theta),
            MessageSpace::BudgetOnlyKnownValue => Message::finite(self.true_value, theta),
            MessageSpace::ValueOnly => Message::value_only(theta),
        }
    }

    fn outcome(&self, theta: f64) -> Result<FppeOutcome> {
        solve_fppe(self.instance, &replace(self.profile, self.agent, self.message(theta)))
    }

    fn agent(&self) -> &AgentType {
        &self.instance.agents[self.agent]
    }

    fn utility_of(&self, out: &FppeOutcome) -> f64 {
        let i = self.agent;
        self.agent().utility(&out.allocation[i], &self.instance.ctr[i], out.payments[i])
    }

    fn utility(&self, theta: f64) -> Result<f64> {
        Ok(self.utility_of(&self.outcome(theta)?))
    }

    /// Upper end of the parameter range beyond which no deviation can help.
    fn upper(&self) -> f64 {
        let i = self.agent;
        let agent = self.agent();
        let row = &self.instance.ctr[i];
        let all_clicks: f64 = row.iter().sum();
        let spend_cap = agent.willingness_to_pay(all_clicks);
        match self.space {
            MessageSpace::Full | MessageSpace::BudgetOnly => spend_cap,
            MessageSpace::BudgetOnlyKnownValue => {
                let top = row.iter().fold(0.0f64, |a, &c| a.max(c)) * self.true_value;
                agent.budget.min_f64(top)
            }
            MessageSpace::ValueOnly => {
                let min_phi = row.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
                if !min_phi.is_finite() {
                    return 0.0;
                }
                let opp_budgets: f64 = self
                    .profile
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .filter_map(|(_, m)| m.budget.finite())
                    .sum();
                let opp_values = self
                    .profile
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .filter_map(|(k, m)| {
                        m.value.finite().map(|v| v * self.instance.ctr[k].iter().fold(0.0f64, |a, &c| a.max(c)))
                    })
                    .fold(0.0f64, f64::max);
                (opp_budgets + opp_values + spend_cap) / min_phi
            }
        }
    }
}

/// Best deviation of agent `i` within `space`.
pub fn best_response(instance: &Instance, profile: &[Message], i: usize, space: MessageSpace) -> Result<BestResponse> {
    check_profile(instance, profile)?;
    if i >= profile.len() {
        return Err(Error::input(format!("agent index {i} out of range")));
    }
    let true_value = match space {
        MessageSpace::BudgetOnlyKnownValue => instance.agents[i]
            .linear_value()
            .ok_or_else(|| Error::Unsupported("the known-value space needs a linear valuation".into()))?,
        _ => 0.0,
    };
    let fam = Family { instance, profile, agent: i, space, true_value };
    if instance.n_items() == 1 {
        piecewise(&fam)
    } else {
        grid(&fam)
    }
}

/// Exact best response in a single-item market.
pub fn best_response_single_item(
    instance: &Instance,
    profile: &[Message],
    i: usize,
    space: MessageSpace,
) -> Result<BestResponse> {
    if instance.n_items() != 1 {
        return Err(Error::Unsupported(format!(
            "exact best response needs one item, got {}",
            instance.n_items()
        )));
    }
    best_response(instance, profile, i, space)
}

fn piecewise(fam: &Family) -> Result<BestResponse> {
    let i = fam.agent;
    let hi = fam.upper();
    let price = |theta: f64| -> Result<f64> { Ok(fam.outcome(theta)?.prices[0]) };

    // Levels at which the price path can stay flat.
    let mut levels: Vec<f64> = fam
        .profile
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .filter_map(|(k, m)| m.value.finite().map(|v| v * fam.instance.ctr[k][0]))
        .filter(|&e| e > 0.0)
        .collect();
    match fam.space {
        MessageSpace::BudgetOnlyKnownValue => levels.push(fam.true_value * fam.instance.ctr[i][0]),
        MessageSpace::ValueOnly => levels.push(price(0.0)?),
        _ => {}
    }

    let mut cuts = vec![0.0, hi];
    if hi > 0.0 {
        // Bisection needs infallible closures; solver errors surface below.
        let p = |t: f64| price(t).unwrap_or(f64::NAN);
        for &level in &levels {
            if level <= 0.0 {
                continue;
            }
            let lo_cut = bisect_first_true(0.0, hi, 200, |t| p(t) >= level);
            let hi_cut = bisect_last_true(0.0, hi, 200, |t| p(t) <= level);
            cuts.extend([lo_cut, hi_cut]);
        }
    }
    cuts.retain(|c| c.is_finite() && *c >= 0.0 && *c <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * hi.max(1.0));

    let u = |t: f64| fam.utility(t).unwrap_or(f64::NAN);
    let mut best = (0.0, fam.utility(0.0)?);
    let tol = 1e-13 * hi.max(1.0);
    for w in cuts.windows(2) {
        let (t, v) = golden_max(w[0], w[1], tol, u);
        if v > best.1 {
            best = (t, v);
        }
    }
    if best.1.is_nan() {
        return Err(Error::domain("utility evaluation failed along the deviation path"));
    }

    // With a zero price at the bottom of the range, the first piece is
    // decreasing and its supremum sits at the open end zero.
    let mut attained = true;
    if hi > 0.0 && price(0.0)? == 0.0 && best.0 <= 1e-6 * hi {
        let out = fam.outcome(1e-9 * hi)?;
        let clicks = out.clicks(&fam.instance.ctr, i);
        let limit = fam.agent().valuation.value(clicks) - fam.agent().money_cost.cost(0.0);
        if limit > fam.utility(0.0)? && limit >= best.1 {
            best = (0.0, limit);
            attained = false;
        }
    }
    Ok(BestResponse {
        agent: i,
        message: fam.message(best.0),
        utility: best.1,
        attained,
        method: SearchMethod::Piecewise { pieces: cuts.len().saturating_sub(1) },
    })
}

fn grid(fam: &Family) -> Result<BestResponse> {
    let hi = fam.upper();
    let pts = mixed_grid(hi, GRID_POINTS);
    let mut vals = Vec::with_capacity(pts.len());
    for &t in &pts {
        vals.push(fam.utility(t)?);
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut best = (pts[order[0]], vals[order[0]]);
    let u = |t: f64| fam.utility(t).unwrap_or(f64::NEG_INFINITY);
    for &k in order.iter().take(3) {
        let a = pts[k.saturating_sub(1)];
        let b = pts[(k + 1).min(pts.len() - 1)];
        let (t, v) = golden_max(a, b, 1e-12 * hi.max(1.0), u);
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(BestResponse {
        agent: fam.agent,
        message: fam.message(best.0),
        utility: best.1,
        attained: true,
        method: SearchMethod::Grid { points: pts.len() },
    })
}
