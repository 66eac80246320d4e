//! Maximizing liquid welfare over feasible allocations.
//!
//! Each agent's contribution is concave in its clicks, so the problem is a
//! concave maximization over one simplex per item. One item is solved by
//! bisection on the common marginal value; several items by projected
//! supergradient ascent, then pairwise exchanges on each item, with a dual
//! bound reported as the certified gap.

use super::{OptimumMethod, WelfareOptimum};
use crate::agents::{clicks, AgentType, Instance};
use crate::error::{Error, Result};
use crate::numeric::{bisect_last_true, golden_max};

/// Relative gap above which the multi-item optimizer reports failure.
const MAX_RELATIVE_GAP: f64 = 1e-3;

pub fn optimal_liquid_welfare(instance: &Instance) -> Result<WelfareOptimum> {
    instance.validate()?;
    if instance.n_items() == 1 {
        Ok(single_item(instance))
    } else {
        multi_item(instance)
    }
}

fn total_welfare(instance: &Instance, x: &[Vec<f64>]) -> f64 {
    instance
        .agents
        .iter()
        .zip(x)
        .zip(&instance.ctr)
        .map(|((a, row), c)| a.willingness_to_pay(clicks(row, c).max(0.0)))
        .sum()
}

/// Largest share `x` of the item at which the marginal welfare is still `>= lambda`.
fn demand(agent: &AgentType, phi: f64, lambda: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    let pred = |x: f64| phi * agent.willingness_marginal(phi * x) >= lambda;
    if !pred(0.0) {
        return 0.0;
    }
    bisect_last_true(0.0, 1.0, 200, pred)
}

fn single_item(instance: &Instance) -> WelfareOptimum {
    let n = instance.n_agents();
    let phi: Vec<f64> = instance.ctr.iter().map(|r| r[0]).collect();
    let demands = |lambda: f64| -> Vec<f64> {
        (0..n).map(|i| demand(&instance.agents[i], phi[i], lambda)).collect()
    };
    let total = |d: &[f64]| d.iter().sum::<f64>();

    let floor = f64::MIN_POSITIVE;
    let at_floor = demands(floor);
    let x: Vec<f64> = if total(&at_floor) <= 1.0 {
        at_floor
    } else {
        let mut hi = 1.0;
        let mut guard = 0;
        while total(&demands(hi)) > 1.0 && guard < 2000 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = hi / 2.0;
        while total(&demands(lo)) <= 1.0 && lo > floor {
            lo /= 2.0;
        }
        let lo = lo.max(floor);
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..400 {
            let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi {
                break;
            }
            if total(&demands(mid)) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let base = demands(hi);
        let upper = demands(lo);
        let mut x = base.clone();
        let mut left = 1.0 - total(&base);
        for i in 0..n {
            if left <= 0.0 {
                break;
            }
            let add = (upper[i] - base[i]).max(0.0).min(left);
            x[i] += add;
            left -= add;
        }
        x
    };
    let allocation: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let value = total_welfare(instance, &allocation);
    WelfareOptimum { value, allocation, method: OptimumMethod::MarginalBisection, gap: Some(0.0) }
}

/// Euclidean projection onto `{x >= 0, sum x <= 1}` over the active entries.
fn project_capped_simplex(v: &mut [f64], active: &[bool]) {
    for (x, &a) in v.iter_mut().zip(active) {
        if !a || *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s <= 1.0 {
        return;
    }
    let mut u: Vec<f64> = v.iter().zip(active).filter(|(_, &a)| a).map(|(x, _)| *x).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for (x, &a) in v.iter_mut().zip(active) {
        if a {
            *x = (*x - theta).max(0.0);
        }
    }
}

fn marginal(agent: &AgentType, q: f64) -> f64 {
    let m = agent.willingness_marginal(q.max(1e-9));
    if m.is_finite() { m } else { 1e9 }
}

fn multi_item(instance: &Instance) -> Result<WelfareOptimum> {
    let n = instance.n_agents();
    let m = instance.n_items();
    let ctr = &instance.ctr;
    let agents = &instance.agents;
    let active: Vec<Vec<bool>> = (0..m).map(|j| (0..n).map(|i| ctr[i][j] > 0.0).collect()).collect();

    let mut x: Vec<Vec<f64>> = vec![vec![0.0; m]; n];
    for j in 0..m {
        let tot: f64 = (0..n).map(|i| ctr[i][j]).sum();
        if tot > 0.0 {
            for i in 0..n {
                x[i][j] = ctr[i][j] / tot;
            }
        }
    }
    let mut best = (total_welfare(instance, &x), x.clone());

    let iters = 500 * n * m;
    let mut col = vec![0.0; n];
    for t in 0..iters {
        let q: Vec<f64> = (0..n).map(|i| clicks(&x[i], &ctr[i])).collect();
        let g: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| ctr[i][j] * marginal(&agents[i], q[i])).collect()).collect();
        let gmax = g.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        if gmax == 0.0 {
            break;
        }
        let step = 0.25 / ((t + 1) as f64).sqrt() / gmax;
        for j in 0..m {
            for i in 0..n {
                col[i] = x[i][j] + step * g[i][j];
            }
            project_capped_simplex(&mut col, &active[j]);
            for i in 0..n {
                x[i][j] = col[i];
            }
        }
        let val = total_welfare(instance, &x);
        if val > best.0 {
            best = (val, x.clone());
        }
    }

    let mut x = best.1;
    fill_leftover(instance, &mut x, &active);
    exchange_polish(instance, &mut x);
    let value = total_welfare(instance, &x);
    let bound = dual_bound(instance, &x, value);
    let gap = (bound - value).max(0.0);
    if gap > MAX_RELATIVE_GAP * value.max(1.0) {
        return Err(Error::Certification { best: value, gap });
    }
    Ok(WelfareOptimum { value, allocation: x, method: OptimumMethod::SupergradientExchange, gap: Some(gap) })
}

/// Give unsold supply to the agent with the largest marginal on that item.
fn fill_leftover(instance: &Instance, x: &mut [Vec<f64>], active: &[Vec<bool>]) {
    let n = instance.n_agents();
    for j in 0..instance.n_items() {
        let sold: f64 = (0..n).map(|i| x[i][j]).sum();
        if sold >= 1.0 {
            continue;
        }
        let pick = (0..n).filter(|&i| active[j][i]).max_by(|&a, &b| {
            let qa = clicks(&x[a], &instance.ctr[a]);
            let qb = clicks(&x[b], &instance.ctr[b]);
            let ga = instance.ctr[a][j] * marginal(&instance.agents[a], qa);
            let gb = instance.ctr[b][j] * marginal(&instance.agents[b], qb);
            ga.total_cmp(&gb).then(b.cmp(&a))
        });
        if let Some(i) = pick {
            x[i][j] += 1.0 - sold;
        }
    }
}

/// Local moves that strictly improve welfare, repeated until none does:
/// moving supply of one item between two agents, and trading two items
/// between two agents so that one of them keeps its clicks unchanged (this
/// slides along a budget cap where single-item moves stall).
fn exchange_polish(instance: &Instance, x: &mut [Vec<f64>]) {
    let n = instance.n_agents();
    let m = instance.n_items();
    let ctr = &instance.ctr;
    let agents = &instance.agents;
    let wtp = |i: usize, q: f64| agents[i].willingness_to_pay(q.max(0.0));
    for _ in 0..2000 {
        let mut improved = 0.0;
        for i in 0..n {
            for k in 0..n {
                if i == k {
                    continue;
                }
                for j in 0..m {
                    if x[i][j] <= 0.0 || ctr[k][j] <= 0.0 {
                        continue;
                    }
                    let qi = clicks(&x[i], &ctr[i]);
                    let qk = clicks(&x[k], &ctr[k]);
                    let pair = |d: f64| wtp(i, qi - ctr[i][j] * d) + wtp(k, qk + ctr[k][j] * d);
                    let now = pair(0.0);
                    let (d, val) = golden_max(0.0, x[i][j], 1e-15, pair);
                    if val > now + 1e-15 * now.abs().max(1.0) {
                        x[i][j] -= d;
                        x[k][j] += d;
                        improved += val - now;
                    }
                    // Agent i gives item j to k and takes item j2 back.
                    for j2 in 0..m {
                        if j2 == j || x[k][j2] <= 0.0 || ctr[i][j2] <= 0.0 {
                            continue;
                        }
                        for keep_i in [true, false] {
                            let r = if keep_i {
                                ctr[i][j] / ctr[i][j2]
                            } else if ctr[k][j2] > 0.0 {
                                ctr[k][j] / ctr[k][j2]
                            } else {
                                continue;
                            };
                            let qi = clicks(&x[i], &ctr[i]);
                            let qk = clicks(&x[k], &ctr[k]);
                            let cycle = |d: f64| {
                                wtp(i, qi - ctr[i][j] * d + ctr[i][j2] * r * d)
                                    + wtp(k, qk + ctr[k][j] * d - ctr[k][j2] * r * d)
                            };
                            let now = cycle(0.0);
                            let dmax = x[i][j].min(x[k][j2] / r);
                            let (d, val) = golden_max(0.0, dmax, 1e-15, cycle);
                            if val > now + 1e-15 * now.abs().max(1.0) {
                                x[i][j] -= d;
                                x[k][j] += d;
                                x[k][j2] -= r * d;
                                x[i][j2] += r * d;
                                improved += val - now;
                            }
                        }
                    }
                }
            }
        }
        if improved <= 1e-14 {
            break;
        }
    }
}

/// Best net welfare an agent could get buying clicks at item prices `pi`,
/// at most one unit of each item. Also returns the purchased shares.
fn agent_dual(agent: &AgentType, phi: &[f64], pi: &[f64]) -> (f64, Vec<f64>) {
    let mut order: Vec<usize> = (0..phi.len()).filter(|&j| phi[j] > 0.0).collect();
    order.sort_by(|&a, &b| (pi[a] / phi[a]).total_cmp(&(pi[b] / phi[b])));
    let mut best = (0.0f64, vec![0.0; phi.len()]);
    let mut bought = vec![0.0; phi.len()];
    let (mut q0, mut c0) = (0.0, 0.0);
    for j in order {
        let rate = pi[j] / phi[j];
        let f = |q: f64| agent.willingness_to_pay(q0 + q) - c0 - rate * q;
        let (q, v) = golden_max(0.0, phi[j], 1e-13, f);
        if v > best.0 {
            let mut x = bought.clone();
            x[j] = q / phi[j];
            best = (v, x);
        }
        bought[j] = 1.0;
        q0 += phi[j];
        c0 += pi[j];
    }
    best
}

/// Dual objective and a subgradient.
fn dual_value(instance: &Instance, pi: &[f64]) -> (f64, Vec<f64>) {
    let m = pi.len();
    let mut value: f64 = pi.iter().sum();
    let mut grad = vec![1.0; m];
    for (a, c) in instance.agents.iter().zip(&instance.ctr) {
        let (v, x) = agent_dual(a, c, pi);
        value += v;
        for j in 0..m {
            grad[j] -= x[j];
        }
    }
    (value, grad)
}

/// Weak-duality upper bound on the optimum. Starts from item prices read off
/// the marginals at `x` and takes Polyak subgradient steps toward `target`.
fn dual_bound(instance: &Instance, x: &[Vec<f64>], target: f64) -> f64 {
    let n = instance.n_agents();
    let m = instance.n_items();
    let ctr = &instance.ctr;
    let q: Vec<f64> = (0..n).map(|i| clicks(&x[i], &ctr[i])).collect();
    let mut pi: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| ctr[i][j] * marginal(&instance.agents[i], q[i])).fold(0.0, f64::max))
        .collect();
    let mut bound = f64::INFINITY;
    for _ in 0..3000 {
        let (v, g) = dual_value(instance, &pi);
        bound = bound.min(v);
        let excess = v - target;
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        if excess <= 1e-12 * target.abs().max(1.0) || norm2 == 0.0 {
            break;
        }
        let step = excess / norm2;
        for j in 0..m {
            pi[j] = (pi[j] - step * g[j]).max(0.0);
        }
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_splits_at_common_marginal() {
        for k in [10.0, 100.0, 1e4] {
            let inst = Instance::single_item(vec![AgentType::budgeted(k, 1.0), AgentType::linear(1.0)]).unwrap();
            let opt = optimal_liquid_welfare(&inst).unwrap();
            assert!((opt.value - (2.0 - 1.0 / k)).abs() < 1e-9, "{k} {}", opt.value);
            assert!((opt.allocation[0][0] - 1.0 / k).abs() < 1e-9);
        }
    }

    #[test]
    fn lone_linear_agent_takes_the_item() {
        let inst = Instance::single_item(vec![AgentType::linear(3.0)]).unwrap();
        let opt = optimal_liquid_welfare(&inst).unwrap();
        assert_eq!(opt.allocation[0][0], 1.0);
        assert_eq!(opt.value, 3.0);
    }

    #[test]
    fn projection_lands_in_capped_simplex() {
        let mut v = vec![0.8, 0.9, -0.2];
        project_capped_simplex(&mut v, &[true, true, true]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.45).abs() < 1e-15 && (v[1] - 0.55).abs() < 1e-15 && v[2] == 0.0);
    }
}
