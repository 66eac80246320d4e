//! Agent preference types and the advertising instance.
//!
//! An agent values clicks through a concave valuation, pays through a convex
//! money cost, and may face a hard budget. Utility is extended-real: spending
//! above the budget yields `-inf`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{ExtNonNeg, Finite, Infinite};

const SHAPE_TOL: f64 = 1e-12;

fn check_breakpoints(points: &[(f64, f64)], what: &str) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::input(format!("{what}: need at least two breakpoints")));
    }
    if points[0] != (0.0, 0.0) {
        return Err(Error::input(format!("{what}: first breakpoint must be (0, 0)")));
    }
    let mut slopes = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if !(x1.is_finite() && y1.is_finite()) || x1 <= x0 {
            return Err(Error::input(format!(
                "{what}: breakpoints must be finite with strictly increasing abscissae"
            )));
        }
        let s = (y1 - y0) / (x1 - x0);
        if s < 0.0 {
            return Err(Error::input(format!("{what}: function must be non-decreasing")));
        }
        slopes.push(s);
    }
    Ok(slopes)
}

/// Piecewise-linear evaluation with the last slope extended to infinity.
fn pwl_value(points: &[(f64, f64)], q: f64) -> f64 {
    let k = segment_index(points, q);
    let (x0, y0) = points[k];
    let (x1, y1) = points[k + 1];
    y0 + (y1 - y0) / (x1 - x0) * (q - x0)
}

/// Index of the segment whose half-open range `[x_k, x_{k+1})` contains `q`.
fn segment_index(points: &[(f64, f64)], q: f64) -> usize {
    let last = points.len() - 2;
    (0..=last).find(|&k| q < points[k + 1].0).unwrap_or(last)
}

fn pwl_right_slope(points: &[(f64, f64)], q: f64) -> f64 {
    let k = segment_index(points, q);
    let (x0, y0) = points[k];
    let (x1, y1) = points[k + 1];
    (y1 - y0) / (x1 - x0)
}

/// Concave non-decreasing value of clicks with `V(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationFn {
    /// `V(q) = v q`.
    Linear { v: f64 },
    /// `V(q) = scale * q^exponent` with `0 < exponent <= 1`.
    Power { scale: f64, exponent: f64 },
    /// Interpolates `breakpoints`, extended with its last slope.
    PwlConcave { breakpoints: Vec<(f64, f64)> },
}

impl ValuationFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            ValuationFn::Linear { v } => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::input("linear valuation needs a finite v >= 0"));
                }
            }
            ValuationFn::Power { scale, exponent } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::input("power valuation needs a finite scale >= 0"));
                }
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(Error::input("power valuation needs 0 < exponent <= 1"));
                }
            }
            ValuationFn::PwlConcave { breakpoints } => {
                let s = check_breakpoints(breakpoints, "piecewise-linear valuation")?;
                if s.windows(2).any(|w| w[1] > w[0] + SHAPE_TOL * w[0].max(1.0)) {
                    return Err(Error::input("piecewise-linear valuation must be concave"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, q: f64) -> f64 {
        match self {
            ValuationFn::Linear { v } => v * q,
            ValuationFn::Power { scale, exponent } => scale * q.powf(*exponent),
            ValuationFn::PwlConcave { breakpoints } => pwl_value(breakpoints, q),
        }
    }

    /// Right derivative; `+inf` at zero for sublinear power valuations.
    pub fn marginal(&self, q: f64) -> f64 {
        match self {
            ValuationFn::Linear { v } => *v,
            ValuationFn::Power { scale, exponent } => {
                if *exponent == 1.0 {
                    *scale
                } else if q <= 0.0 {
                    if *scale > 0.0 { f64::INFINITY } else { 0.0 }
                } else {
                    scale * exponent * q.powf(exponent - 1.0)
                }
            }
            ValuationFn::PwlConcave { breakpoints } => pwl_right_slope(breakpoints, q),
        }
    }
}

/// Convex increasing money cost with `C(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MoneyCostFn {
    /// `C(t) = t`.
    Identity,
    /// `C(t) = scale * t^exponent` with `exponent >= 1`.
    Power { scale: f64, exponent: f64 },
    /// Interpolates `breakpoints`, extended with its last slope.
    PwlConvex { breakpoints: Vec<(f64, f64)> },
}

impl MoneyCostFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            MoneyCostFn::Identity => {}
            MoneyCostFn::Power { scale, exponent } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::input("power money cost needs a finite scale > 0"));
                }
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::input("power money cost needs exponent >= 1"));
                }
            }
            MoneyCostFn::PwlConvex { breakpoints } => {
                let s = check_breakpoints(breakpoints, "piecewise-linear money cost")?;
                if s.windows(2).any(|w| w[1] + SHAPE_TOL * w[1].max(1.0) < w[0]) {
                    return Err(Error::input("piecewise-linear money cost must be convex"));
                }
            }
        }
        Ok(())
    }

    pub fn cost(&self, t: f64) -> f64 {
        match self {
            MoneyCostFn::Identity => t,
            MoneyCostFn::Power { scale, exponent } => scale * t.powf(*exponent),
            MoneyCostFn::PwlConvex { breakpoints } => pwl_value(breakpoints, t),
        }
    }

    /// Right derivative of the cost.
    pub fn marginal(&self, t: f64) -> f64 {
        match self {
            MoneyCostFn::Identity => 1.0,
            MoneyCostFn::Power { scale, exponent } => {
                if *exponent == 1.0 {
                    *scale
                } else {
                    scale * exponent * t.max(0.0).powf(exponent - 1.0)
                }
            }
            MoneyCostFn::PwlConvex { breakpoints } => pwl_right_slope(breakpoints, t),
        }
    }

    /// Supremum of the cost's range.
    pub fn range_sup(&self) -> f64 {
        match self {
            MoneyCostFn::Identity | MoneyCostFn::Power { .. } => f64::INFINITY,
            MoneyCostFn::PwlConvex { breakpoints } => {
                let n = breakpoints.len();
                if pwl_right_slope(breakpoints, breakpoints[n - 1].0) > 0.0 {
                    f64::INFINITY
                } else {
                    breakpoints[n - 1].1
                }
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.range_sup() == 0.0
    }

    /// Generalized inverse `inf { t : C(t) >= u }`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        match self.inverse_ext(u) {
            Finite(t) => Ok(t),
            Infinite => Err(Error::Range { value: u, sup: self.range_sup() }),
        }
    }

    /// Like [`MoneyCostFn::inverse`] but maps values above the range to `inf`.
    pub fn inverse_ext(&self, u: f64) -> ExtNonNeg {
        if u <= 0.0 {
            return Finite(0.0);
        }
        match self {
            MoneyCostFn::Identity => Finite(u),
            MoneyCostFn::Power { scale, exponent } => Finite((u / scale).powf(1.0 / exponent)),
            MoneyCostFn::PwlConvex { breakpoints } => {
                for w in breakpoints.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if u <= y1 && y1 > y0 {
                        return Finite(x0 + (u - y0) * (x1 - x0) / (y1 - y0));
                    }
                }
                let (xl, yl) = breakpoints[breakpoints.len() - 1];
                let s = pwl_right_slope(breakpoints, xl);
                if s > 0.0 { Finite(xl + (u - yl) / s) } else { Infinite }
            }
        }
    }
}

/// True preferences of one advertiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentType {
    pub valuation: ValuationFn,
    pub money_cost: MoneyCostFn,
    pub budget: ExtNonNeg,
}

impl AgentType {
    pub fn new(valuation: ValuationFn, money_cost: MoneyCostFn, budget: ExtNonNeg) -> Result<Self> {
        let a = Self { valuation, money_cost, budget };
        a.validate()?;
        Ok(a)
    }

    /// Linear value per click, identity money cost, finite budget.
    pub fn budgeted(v: f64, budget: f64) -> Self {
        Self {
            valuation: ValuationFn::Linear { v },
            money_cost: MoneyCostFn::Identity,
            budget: Finite(budget),
        }
    }

    /// Linear value per click with no budget.
    pub fn linear(v: f64) -> Self {
        Self {
            valuation: ValuationFn::Linear { v },
            money_cost: MoneyCostFn::Identity,
            budget: Infinite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.valuation.validate()?;
        self.money_cost.validate()?;
        if let Finite(w) = self.budget {
            ExtNonNeg::new(w)?;
        } else if self.money_cost.is_identically_zero() {
            return Err(Error::input(
                "an agent without a budget needs a money cost that is not identically zero",
            ));
        }
        Ok(())
    }

    /// Linear valuation with identity cost and a finite budget.
    pub fn is_budgeted(&self) -> bool {
        matches!(self.valuation, ValuationFn::Linear { .. })
            && self.money_cost == MoneyCostFn::Identity
            && !self.budget.is_infinite()
    }

    pub fn linear_value(&self) -> Option<f64> {
        match self.valuation {
            ValuationFn::Linear { v } => Some(v),
            _ => None,
        }
    }

    /// Utility of receiving `clicks` while paying `t`.
    /// Payments above the budget by float rounding only are tolerated.
    pub fn utility_of_clicks(&self, clicks: f64, t: f64) -> f64 {
        if !self.budget.ge_f64(t * (1.0 - BUDGET_ROUNDING)) {
            return f64::NEG_INFINITY;
        }
        self.valuation.value(clicks) - self.money_cost.cost(t)
    }

    /// Utility of an allocation row at payment `t`.
    pub fn utility(&self, x_row: &[f64], ctr_row: &[f64], t: f64) -> f64 {
        self.utility_of_clicks(clicks(x_row, ctr_row), t)
    }

    /// `min { w, C^{-1}(V(q)) }`, the most this agent would pay for `q` clicks.
    pub fn willingness_to_pay(&self, q: f64) -> f64 {
        match self.money_cost.inverse_ext(self.valuation.value(q)) {
            Finite(t) => self.budget.min_f64(t),
            Infinite => self.budget.to_f64(),
        }
    }

    /// Right derivative of [`AgentType::willingness_to_pay`] in clicks.
    pub fn willingness_marginal(&self, q: f64) -> f64 {
        let inner = match self.money_cost.inverse_ext(self.valuation.value(q)) {
            Finite(t) => t,
            Infinite => return 0.0,
        };
        if !self.budget.ge_f64(inner) || self.budget == Finite(inner) {
            return 0.0;
        }
        let s = self.valuation.marginal(q);
        if s == 0.0 {
            return 0.0;
        }
        let r = self.money_cost.marginal(inner);
        if r == 0.0 { f64::INFINITY } else { s / r }
    }
}

/// Relative slack on the hard budget check.
pub const BUDGET_ROUNDING: f64 = 1e-12;

pub fn clicks(x_row: &[f64], ctr_row: &[f64]) -> f64 {
    x_row.iter().zip(ctr_row).map(|(x, c)| x * c).sum()
}

/// Utility of an agent that spends `t` buying only the cheapest clicks at
/// the given item prices.
pub fn utility_from_prices(agent: &AgentType, t: f64, prices: &[f64], ctr_row: &[f64]) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::input(format!("payment must be finite and non-negative, got {t}")));
    }
    if prices.len() != ctr_row.len() {
        return Err(Error::input("prices and click-through rates differ in length"));
    }
    if !agent.budget.ge_f64(t) {
        return Ok(f64::NEG_INFINITY);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    for (&p, &phi) in prices.iter().zip(ctr_row) {
        if phi <= 0.0 {
            continue;
        }
        if p <= 0.0 {
            return Err(Error::domain(
                "a zero price on an item the agent can use makes click prices unbounded",
            ));
        }
        best = best.max(phi / p);
    }
    Ok(agent.valuation.value(best * t) - agent.money_cost.cost(t))
}

/// Agents plus a click-through-rate matrix (`ctr[i][j]` for agent `i`, item `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub agents: Vec<AgentType>,
    pub ctr: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(agents: Vec<AgentType>, ctr: Vec<Vec<f64>>) -> Result<Self> {
        let inst = Self { agents, ctr };
        inst.validate()?;
        Ok(inst)
    }

    /// One item with unit click-through rates.
    pub fn single_item(agents: Vec<AgentType>) -> Result<Self> {
        let n = agents.len();
        Self::new(agents, vec![vec![1.0]; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::input("instance needs at least one agent"));
        }
        if self.ctr.len() != self.agents.len() {
            return Err(Error::input("ctr must have one row per agent"));
        }
        let m = self.ctr[0].len();
        if m == 0 {
            return Err(Error::input("instance needs at least one item"));
        }
        for (i, row) in self.ctr.iter().enumerate() {
            if row.len() != m {
                return Err(Error::input(format!("ctr row {i} has {} entries, expected {m}", row.len())));
            }
            if let Some(bad) = row.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
                return Err(Error::input(format!("ctr row {i} contains invalid entry {bad}")));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.validate().map_err(|e| Error::input(format!("agent {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_items(&self) -> usize {
        self.ctr[0].len()
    }

    /// Items no agent can obtain clicks from.
    pub fn degenerate_items(&self) -> Vec<usize> {
        (0..self.n_items())
            .filter(|&j| self.ctr.iter().all(|row| row[j] == 0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pwl_val() -> ValuationFn {
        ValuationFn::PwlConcave { breakpoints: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)] }
    }

    #[test]
    fn valuation_values_and_slopes() {
        let lin = ValuationFn::Linear { v: 2.0 };
        assert_eq!(lin.value(0.3), 0.6);
        assert_eq!(lin.marginal(0.3), 2.0);
        let v = pwl_val();
        assert_eq!(v.value(1.5), 2.5);
        assert_eq!(v.marginal(1.0), 1.0);
        assert_eq!(v.marginal(0.5), 2.0);
        assert_eq!(v.value(3.0), 4.0);
        let p = ValuationFn::Power { scale: 1.0, exponent: 0.5 };
        assert!((p.value(0.25) - 0.5).abs() < 1e-15);
        assert!(p.marginal(0.0).is_infinite());
    }

    #[test]
    fn power_marginal_matches_finite_difference() {
        let p = ValuationFn::Power { scale: 1.3, exponent: 0.4 };
        for &q in &[0.1, 0.5, 1.0, 3.0] {
            let h = 1e-6;
            let fd = (p.value(q + h) - p.value(q - h)) / (2.0 * h);
            assert!((p.marginal(q) - fd).abs() < 1e-6 * fd.max(1.0));
        }
        let c = MoneyCostFn::Power { scale: 0.7, exponent: 2.2 };
        for &t in &[0.1, 0.5, 1.0, 3.0] {
            let h = 1e-6;
            let fd = (c.cost(t + h) - c.cost(t - h)) / (2.0 * h);
            assert!((c.marginal(t) - fd).abs() < 1e-6 * fd.max(1.0));
        }
    }

    #[test]
    fn rejects_nonconcave_valuation() {
        let v = ValuationFn::PwlConcave { breakpoints: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)] };
        assert!(v.validate().is_err());
        let c = MoneyCostFn::PwlConvex { breakpoints: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn cost_inverse_round_trips() {
        let costs = [
            MoneyCostFn::Identity,
            MoneyCostFn::Power { scale: 2.0, exponent: 1.5 },
            MoneyCostFn::PwlConvex { breakpoints: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 2.0)] },
        ];
        for c in &costs {
            for &t in &[0.0, 0.2, 1.0, 1.7, 4.0] {
                let back = c.inverse(c.cost(t)).unwrap();
                assert!((back - t).abs() < 1e-12, "{c:?} {t} {back}");
            }
        }
    }

    #[test]
    fn flat_cost_reports_range_error() {
        let c = MoneyCostFn::PwlConvex { breakpoints: vec![(0.0, 0.0), (1.0, 0.0)] };
        assert!(matches!(c.inverse(0.5), Err(Error::Range { .. })));
        assert!(AgentType::new(ValuationFn::Linear { v: 1.0 }, c, Infinite).is_err());
    }

    #[test]
    fn utility_examples() {
        let a = AgentType::budgeted(2.0, 0.5);
        let u = utility_from_prices(&a, 0.5, &[0.9], &[1.0]).unwrap();
        assert!((u - (2.0 * 5.0 / 9.0 - 0.5)).abs() < 1e-15);
        assert_eq!(utility_from_prices(&a, 0.6, &[0.9], &[1.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(utility_from_prices(&a, 0.1, &[0.0], &[1.0]), Err(Error::Domain(_))));
        assert_eq!(utility_from_prices(&a, 0.0, &[0.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn willingness_to_pay_caps_at_budget() {
        let a = AgentType::budgeted(100.0, 1.0);
        assert!((a.willingness_to_pay(0.005) - 0.5).abs() < 1e-15);
        assert_eq!(a.willingness_to_pay(0.5), 1.0);
        assert_eq!(a.willingness_marginal(0.005), 100.0);
        assert_eq!(a.willingness_marginal(0.01), 0.0);
    }
}
