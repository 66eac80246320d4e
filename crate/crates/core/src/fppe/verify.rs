//! Residuals of the four equilibrium properties plus the multiplier form.

use serde::{Deserialize, Serialize};

use super::Message;
use crate::ext::{Finite, Infinite};

/// Largest violation of each equilibrium property.
///
/// `supply` is measured in units of items; all other entries are money and
/// are normalized by `price_scale` in [`Residuals::normalized_worst`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Spending on items outside an agent's best bang-per-buck set, or above
    /// its reported value.
    pub bang_per_buck: f64,
    pub supply: f64,
    pub payment: f64,
    /// Overspending, or unspent budget while some item is strictly worth more
    /// than its price.
    pub budget: f64,
    /// Gap between each price and the highest paced bid on that item.
    pub multiplier: f64,
    pub price_scale: f64,
}

impl Residuals {
    pub fn normalized_worst(&self) -> f64 {
        let s = if self.price_scale > 0.0 { self.price_scale } else { 1.0 };
        let money = self.bang_per_buck.max(self.payment).max(self.budget).max(self.multiplier);
        self.supply.max(money / s)
    }
}

pub fn compute_residuals(
    ctr: &[Vec<f64>],
    msgs: &[Message],
    prices: &[f64],
    alloc: &[Vec<f64>],
    payments: &[f64],
) -> Residuals {
    let m = prices.len();
    let scale = prices.iter().copied().fold(0.0, f64::max);
    let mut r = Residuals { price_scale: scale, ..Default::default() };

    for j in 0..m {
        let sold: f64 = alloc.iter().map(|row| row[j]).sum();
        let v = if prices[j] > 0.0 { (sold - 1.0).abs() } else { (sold - 1.0).max(0.0) };
        r.supply = r.supply.max(v);
    }

    let mut per_click = vec![0.0; msgs.len()];
    for (i, (msg, row)) in msgs.iter().zip(ctr).enumerate() {
        let best_ratio = (0..m)
            .filter(|&j| row[j] > 0.0)
            .map(|j| if prices[j] > 0.0 { row[j] / prices[j] } else { f64::INFINITY })
            .fold(0.0, f64::max);

        let mut bpb = 0.0f64;
        for j in 0..m {
            let x = alloc[i][j];
            if x <= 0.0 {
                continue;
            }
            let p = prices[j];
            let ratio = if row[j] > 0.0 && p == 0.0 { f64::INFINITY } else if p > 0.0 { row[j] / p } else { 0.0 };
            let rel = if best_ratio == 0.0 || ratio == f64::INFINITY {
                1.0
            } else if best_ratio == f64::INFINITY {
                0.0
            } else {
                ratio / best_ratio
            };
            bpb = bpb.max(x * p * (1.0 - rel).max(0.0));
            let cap = match msg.value {
                Finite(v) => v * row[j],
                Infinite if row[j] > 0.0 => f64::INFINITY,
                Infinite => 0.0,
            };
            bpb = bpb.max(x * (p - cap).max(0.0));
        }
        r.bang_per_buck = r.bang_per_buck.max(bpb);

        let spent: f64 = (0..m).map(|j| alloc[i][j] * prices[j]).sum();
        r.payment = r.payment.max((payments[i] - spent).abs());

        let t = payments[i];
        let over = match msg.budget {
            Finite(w) => (t - w).max(0.0),
            Infinite => 0.0,
        };
        let value_ratio = match msg.value {
            Finite(v) => v * best_ratio,
            Infinite if best_ratio > 0.0 => f64::INFINITY,
            Infinite => 0.0,
        };
        let under = if value_ratio > 1.0 {
            let slack = match msg.budget {
                Finite(w) => (w - t).max(0.0),
                Infinite => f64::INFINITY,
            };
            slack.min((value_ratio - 1.0) * scale.max(f64::MIN_POSITIVE))
        } else {
            0.0
        };
        r.budget = r.budget.max(over).max(under);

        per_click[i] = match msg.value {
            Finite(v) => {
                if best_ratio > 0.0 { v.min(1.0 / best_ratio) } else { v }
            }
            Infinite => {
                if best_ratio > 0.0 { 1.0 / best_ratio } else { 0.0 }
            }
        };
    }

    for j in 0..m {
        if ctr.iter().all(|row| row[j] == 0.0) {
            r.multiplier = r.multiplier.max(prices[j]);
            continue;
        }
        let top = (0..msgs.len()).map(|i| per_click[i] * ctr[i][j]).fold(0.0, f64::max);
        let mut gap = (prices[j] - top).abs();
        for (i, row) in alloc.iter().enumerate() {
            if row[j] > 0.0 {
                gap = gap.max(row[j] * (prices[j] - per_click[i] * ctr[i][j]).max(0.0));
            }
        }
        r.multiplier = r.multiplier.max(gap);
    }
    r
}
