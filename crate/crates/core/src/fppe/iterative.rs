//! Proportional-response dynamics for the equivalent quasi-linear market.
//!
//! Each agent re-splits its spending in proportion to the value it received
//! from each item in the previous round. Budgeted agents whose value exceeds
//! their budget spend exactly the budget; the rest spend their value.

use super::SubMarket;

pub(crate) struct ProportionalResponse {
    /// `bids[a][k]`: money agent `a` puts on item `k`.
    pub bids: Vec<Vec<f64>>,
    pub iterations: usize,
    prices: Vec<f64>,
}

impl ProportionalResponse {
    pub fn new(sub: &SubMarket) -> Self {
        let bids = sub
            .phi
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let total_phi: f64 = row.iter().sum();
                let spend = match (sub.value[a], sub.budget[a]) {
                    (Some(v), Some(w)) => w.min(v * total_phi),
                    (Some(v), None) => v * total_phi,
                    (None, Some(w)) => w,
                    (None, None) => unreachable!("messages never have two infinite components"),
                };
                row.iter().map(|&phi| spend * phi / total_phi).collect()
            })
            .collect();
        Self { bids, iterations: 0, prices: vec![0.0; sub.items.len()] }
    }

    pub fn run(&mut self, sub: &SubMarket, iters: usize) {
        let k = sub.items.len();
        for _ in 0..iters {
            for j in 0..k {
                self.prices[j] = self.bids.iter().map(|r| r[j]).sum();
            }
            for (a, row) in self.bids.iter_mut().enumerate() {
                let phi = &sub.phi[a];
                // Per-click weight of each item under the current allocation.
                let mut gain = 0.0;
                for j in 0..k {
                    if self.prices[j] > 0.0 {
                        row[j] = phi[j] * row[j] / self.prices[j];
                        gain += row[j];
                    } else {
                        row[j] = 0.0;
                    }
                }
                if gain <= 0.0 {
                    continue;
                }
                let scale = match (sub.value[a], sub.budget[a]) {
                    (Some(v), Some(w)) => v * w / (v * gain).max(w),
                    (Some(v), None) => v,
                    (None, Some(w)) => w / gain,
                    (None, None) => unreachable!(),
                };
                for b in row.iter_mut() {
                    *b *= scale;
                }
            }
            self.iterations += 1;
        }
    }
}
