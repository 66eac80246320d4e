//! Grid-search reference solver over pacing multipliers.
//!
//! The equilibrium multipliers are the componentwise largest budget-feasible
//! ones. This oracle enumerates multipliers on a grid, keeps the points that
//! are budget-feasible when near-ties within one grid step may win, and
//! refines around their componentwise maximum. It shares no code with the main solver paths
//! except the flow routine and the residual check.

use super::flow::FlowNet;
use super::{assemble, validate_market, FppeOutcome, Message, PathUsed, SubMarket};
use crate::error::{Error, Result};

const MAX_AGENTS: usize = 4;
const MAX_ITEMS: usize = 4;
const MAX_PASSES: usize = 12;

struct Grid<'a> {
    sub: &'a SubMarket,
    /// Bid per unit multiplier, `e[a][j]`.
    eff: Vec<Vec<f64>>,
}

impl Grid<'_> {
    fn prices(&self, alpha: &[f64]) -> Vec<f64> {
        let k = self.sub.items.len();
        (0..k)
            .map(|j| (0..alpha.len()).map(|a| alpha[a] * self.eff[a][j]).fold(0.0, f64::max))
            .collect()
    }

    /// Budget-feasible when bids within one grid step `h` of the price count
    /// as tied. The grid point just below the equilibrium always passes.
    /// Returns money flows, serving paced agents first.
    fn relaxed_feasible(&self, alpha: &[f64], h: f64) -> Option<Vec<Vec<f64>>> {
        let na = alpha.len();
        let k = self.sub.items.len();
        let prices = self.prices(alpha);
        let total: f64 = prices.iter().sum();
        if total <= 0.0 {
            return Some(vec![vec![0.0; k]; na]);
        }
        let (source, sink) = (na + k, na + k + 1);
        let mut net = FlowNet::new(na + k + 2, total * 1e-14);
        for a in 0..na {
            let cap = self.sub.budget[a].map_or(total, |w| (w * (1.0 + 1e-12)).min(total));
            net.set_cap(source, a, cap);
            for j in 0..k {
                if self.eff[a][j] > 0.0 && (alpha[a] + h) * self.eff[a][j] >= prices[j] {
                    net.set_cap(a, na + j, total);
                }
            }
        }
        for j in 0..k {
            net.set_cap(na + j, sink, prices[j]);
        }
        let paced: Vec<usize> = (0..na).filter(|&a| self.sub.value[a].is_none() || alpha[a] < 1.0 - h).collect();
        let rest: Vec<usize> = (0..na).filter(|a| !paced.contains(a)).collect();
        net.augment_in_order(source, &paced, sink);
        net.augment_in_order(source, &rest, sink);
        let sold: f64 = (0..k).map(|j| net.flow(na + j, sink)).sum();
        if sold < total * (1.0 - 1e-12) {
            return None;
        }
        Some((0..na).map(|a| (0..k).map(|j| net.flow(a, na + j)).collect()).collect())
    }
}

/// Enumerate every point of a box grid.
fn for_each_point(lo: &[f64], hi: &[f64], h: f64, mut f: impl FnMut(&[f64])) {
    let dims = lo.len();
    let counts: Vec<usize> = (0..dims).map(|d| ((hi[d] - lo[d]) / h + 1e-9).floor() as usize + 1).collect();
    let mut idx = vec![0usize; dims];
    let mut point = lo.to_vec();
    loop {
        for d in 0..dims {
            point[d] = (lo[d] + idx[d] as f64 * h).min(hi[d]);
        }
        f(&point);
        let mut d = 0;
        loop {
            if d == dims {
                return;
            }
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Reference equilibrium by multiplier grid search with local refinement.
///
/// The coarse grid has about `grid_steps^(1/3)` points per axis; refinement
/// passes shrink the step until it is below `1/grid_steps` times the
/// smallest positive multiplier found (at most a fixed number of passes).
pub fn brute_force_fppe(ctr: &[Vec<f64>], msgs: &[Message], grid_steps: usize) -> Result<FppeOutcome> {
    validate_market(ctr, msgs)?;
    if grid_steps < 2 {
        return Err(Error::input("grid_steps must be at least 2"));
    }
    let n = msgs.len();
    let m = ctr[0].len();
    if n > MAX_AGENTS || m > MAX_ITEMS {
        return Err(Error::Size(format!("grid oracle handles at most {MAX_AGENTS} agents and {MAX_ITEMS} items")));
    }
    let sub = SubMarket::new(ctr, msgs);
    if sub.agents.is_empty() {
        return Ok(assemble(ctr, msgs, vec![0.0; m], vec![vec![0.0; m]; n], PathUsed::GridOracle, 0));
    }
    let na = sub.agents.len();
    let k = sub.items.len();

    // Stand-in value for infinite reports, larger than any equilibrium bid.
    let finite_budgets: f64 = sub.budget.iter().flatten().sum();
    let top_value = (0..na)
        .filter_map(|a| sub.value[a].map(|v| (0..k).map(|j| v * sub.phi[a][j]).fold(0.0, f64::max)))
        .fold(0.0, f64::max);
    let min_phi = sub.phi.iter().flatten().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let stand_in = 2.0 * (finite_budgets + top_value) / min_phi + 1.0;
    let eff: Vec<Vec<f64>> = (0..na)
        .map(|a| {
            let v = sub.value[a].unwrap_or(stand_in);
            sub.phi[a].iter().map(|&c| v * c).collect()
        })
        .collect();
    let grid = Grid { sub: &sub, eff };

    let per_axis = ((grid_steps as f64).cbrt().ceil() as usize).max(2);
    let target = 1.0 / grid_steps as f64;
    let mut h = 1.0 / per_axis as f64;
    let mut lo = vec![0.0; na];
    let mut hi = vec![1.0; na];
    let mut best: (Vec<f64>, Vec<Vec<f64>>) = (vec![0.0; na], vec![vec![0.0; k]; na]);
    let mut iterations = 0;
    let mut reach = 4.0;
    let mut pass = 0;
    while pass < MAX_PASSES {
        let mut top = vec![0.0f64; na];
        let mut feasible: Vec<Vec<f64>> = Vec::new();
        for_each_point(&lo, &hi, h, |alpha| {
            if grid.relaxed_feasible(alpha, h).is_some() {
                for a in 0..na {
                    top[a] = top[a].max(alpha[a]);
                }
                feasible.push(alpha.to_vec());
            }
        });
        iterations += 1;
        if feasible.is_empty() {
            // The box missed the equilibrium: widen it downward and retry.
            reach *= 2.0;
            for a in 0..na {
                lo[a] = (best.0[a] - reach * h * 4.0).max(0.0);
                hi[a] = (best.0[a] + 2.0 * h * 4.0).min(1.0);
            }
            h *= 4.0;
            if reach > 64.0 {
                return Err(Error::Certification { best: 0.0, gap: h });
            }
            continue;
        }
        best = match grid.relaxed_feasible(&top, h) {
            Some(flows) => (top.clone(), flows),
            None => {
                let far = feasible
                    .iter()
                    .max_by(|x, y| x.iter().sum::<f64>().total_cmp(&y.iter().sum::<f64>()))
                    .cloned()
                    .expect("feasible set is non-empty");
                let flows = grid.relaxed_feasible(&far, h).expect("point was feasible");
                (far, flows)
            }
        };
        let smallest = best.0.iter().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
        if pass >= 2 && h <= target * smallest {
            break;
        }
        for a in 0..na {
            lo[a] = (top[a] - reach * h).max(0.0);
            hi[a] = (top[a] + 2.0 * h).min(1.0);
        }
        h /= 4.0;
        pass += 1;
    }

    let prices = grid.prices(&best.0);
    let alloc: Vec<Vec<f64>> = (0..na)
        .map(|a| (0..k).map(|j| if prices[j] > 0.0 { best.1[a][j] / prices[j] } else { 0.0 }).collect())
        .collect();
    let (p, x) = sub.expand(&prices, &alloc);
    Ok(assemble(ctr, msgs, p, x, PathUsed::GridOracle, iterations))
}
