//! Grid reference for the welfare optimum.
//!
//! Unsold supply never helps, so each item's shares lie on a simplex over
//! the agents that can use it. Small grids are enumerated exhaustively at
//! resolution `1/grid_steps`; larger ones start coarse and refine around the
//! incumbent with a halving step.

use super::{OptimumMethod, WelfareOptimum};
use crate::agents::{clicks, Instance};
use crate::error::{Error, Result};

const MAX_CELLS: usize = 9;
const EXHAUSTIVE_LIMIT: f64 = 2e6;
const COARSE_LIMIT: f64 = 2e5;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct Layout {
    /// Agents able to use each item.
    users: Vec<Vec<usize>>,
}

impl Layout {
    fn free_dims(&self) -> usize {
        self.users.iter().map(|u| u.len().saturating_sub(1)).sum()
    }

    fn grid_size(&self, steps: usize) -> f64 {
        self.users.iter().filter(|u| !u.is_empty()).map(|u| binom(steps + u.len() - 1, u.len() - 1)).product()
    }

    /// Expand free coordinates to a full allocation; `None` if infeasible.
    fn allocation(&self, n: usize, m: usize, free: &[f64]) -> Option<Vec<Vec<f64>>> {
        let mut x = vec![vec![0.0; m]; n];
        let mut k = 0;
        for (j, users) in self.users.iter().enumerate() {
            if users.is_empty() {
                continue;
            }
            let mut left = 1.0;
            for &i in &users[..users.len() - 1] {
                x[i][j] = free[k];
                left -= free[k];
                k += 1;
            }
            if left < -1e-12 {
                return None;
            }
            x[users[users.len() - 1]][j] = left.max(0.0);
        }
        Some(x)
    }
}

fn welfare(instance: &Instance, x: &[Vec<f64>]) -> f64 {
    instance
        .agents
        .iter()
        .zip(x)
        .zip(&instance.ctr)
        .map(|((a, r), c)| a.willingness_to_pay(clicks(r, c)))
        .sum()
}

/// Visit every point `lo + k*h` inside `[lo, hi]` per coordinate.
fn scan(lo: &[f64], hi: &[f64], h: f64, mut f: impl FnMut(&[f64])) {
    let d = lo.len();
    if d == 0 {
        f(&[]);
        return;
    }
    let counts: Vec<usize> = (0..d).map(|k| ((hi[k] - lo[k]) / h + 1e-9).floor() as usize + 1).collect();
    let mut idx = vec![0usize; d];
    let mut p = lo.to_vec();
    loop {
        for k in 0..d {
            p[k] = lo[k] + idx[k] as f64 * h;
        }
        f(&p);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Reference optimum by simplex grid search; instances with at most nine
/// agent-item cells.
pub fn brute_force_optimal_welfare(instance: &Instance, grid_steps: usize) -> Result<WelfareOptimum> {
    instance.validate()?;
    let n = instance.n_agents();
    let m = instance.n_items();
    if n * m > MAX_CELLS {
        return Err(Error::Size(format!("welfare grid oracle handles at most {MAX_CELLS} agent-item cells")));
    }
    if grid_steps == 0 {
        return Err(Error::input("grid_steps must be positive"));
    }
    let layout = Layout {
        users: (0..m).map(|j| (0..n).filter(|&i| instance.ctr[i][j] > 0.0).collect()).collect(),
    };
    let dims = layout.free_dims();
    let target = 1.0 / grid_steps as f64;

    let mut steps = grid_steps;
    if layout.grid_size(steps) > EXHAUSTIVE_LIMIT {
        steps = 2;
        while layout.grid_size(steps * 2) <= COARSE_LIMIT {
            steps *= 2;
        }
    }
    let mut h = 1.0 / steps as f64;
    let mut lo = vec![0.0; dims];
    let mut hi = vec![1.0; dims];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        scan(&lo, &hi, h, |free| {
            if let Some(x) = layout.allocation(n, m, free) {
                let v = welfare(instance, &x);
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, free.to_vec()));
                }
            }
        });
        if h <= target * (1.0 + 1e-9) {
            break;
        }
        let centre = best.as_ref().expect("grid contains a feasible point").1.clone();
        for k in 0..dims {
            lo[k] = (centre[k] - 2.0 * h).max(0.0);
            hi[k] = (centre[k] + 2.0 * h).min(1.0);
        }
        h = (h / 2.0).max(target);
    }
    let (value, free) = best.expect("grid contains a feasible point");
    let allocation = layout.allocation(n, m, &free).expect("incumbent is feasible");
    Ok(WelfareOptimum { value, allocation, method: OptimumMethod::Grid, gap: None })
}
