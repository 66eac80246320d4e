//! Exact path: read the equilibrium's tie structure off a warm start and
//! solve the resulting equations exactly.
//!
//! A structure is a set of tight (agent, item) pairs, where the agent's
//! per-click bid times the click-through rate equals the price, plus a
//! status per agent: paced (spends its budget) or capped (bids its value).
//! On each connected component of tight pairs the bids and prices share one
//! free scale, fixed either by a capped agent or by budget balance. The
//! allocation then comes from a max-flow with paced agents served first.

use std::collections::{HashSet, VecDeque};

use super::flow::FlowNet;
use super::iterative::ProportionalResponse;
use super::{FppeOptions, SubMarket};

/// Exact prices and allocation over the sub-market.
pub(crate) struct Solution {
    pub prices: Vec<f64>,
    pub allocation: Vec<Vec<f64>>,
}

pub(crate) struct Attempt {
    pub solution: Option<Solution>,
    /// Final warm-start bids, used as a fallback.
    pub bids: Vec<Vec<f64>>,
    pub iterations: usize,
}

const STAGES: [usize; 9] = [20, 60, 200, 600, 2_000, 6_000, 20_000, 50_000, 100_000];
const TAUS: [f64; 9] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];
const MAX_AMBIGUOUS: usize = 4;

pub(crate) fn solve_exact(sub: &SubMarket, opts: &FppeOptions) -> Attempt {
    let mut pr = ProportionalResponse::new(sub);
    let mut tried: HashSet<(Vec<bool>, Vec<bool>)> = HashSet::new();
    for &stage in STAGES.iter() {
        let stage = stage.min(opts.tolerances.max_iter);
        if stage > pr.iterations {
            pr.run(sub, stage - pr.iterations);
        }
        for (edges, paced) in candidates(sub, &pr.bids) {
            if !tried.insert((edges.clone(), paced.clone())) {
                continue;
            }
            if let Some(sol) = solve_structure(sub, &edges, &paced, opts) {
                return Attempt { solution: Some(sol), bids: pr.bids, iterations: pr.iterations };
            }
        }
        if stage >= opts.tolerances.max_iter {
            break;
        }
    }
    Attempt { solution: None, bids: pr.bids, iterations: pr.iterations }
}

/// Candidate structures read from bids at several tightness thresholds.
fn candidates(sub: &SubMarket, bids: &[Vec<f64>]) -> Vec<(Vec<bool>, Vec<bool>)> {
    let na = sub.agents.len();
    let k = sub.items.len();
    let prices: Vec<f64> = (0..k).map(|j| bids.iter().map(|r| r[j]).sum()).collect();
    if prices.iter().any(|&p| !(p > 0.0)) {
        return Vec::new();
    }
    let spend: Vec<f64> = bids.iter().map(|r| r.iter().sum()).collect();
    let per_click: Vec<f64> = (0..na)
        .map(|a| {
            let cheapest = (0..k)
                .filter(|&j| sub.phi[a][j] > 0.0)
                .map(|j| prices[j] / sub.phi[a][j])
                .fold(f64::INFINITY, f64::min);
            sub.value[a].map_or(cheapest, |v| v.min(cheapest))
        })
        .collect();

    let mut out = Vec::new();
    for &tau in TAUS.iter() {
        let edges: Vec<bool> = (0..na * k)
            .map(|e| {
                let (a, j) = (e / k, e % k);
                sub.phi[a][j] > 0.0 && per_click[a] * sub.phi[a][j] >= (1.0 - tau) * prices[j]
            })
            .collect();
        let mut base = vec![false; na];
        let mut ambiguous = Vec::new();
        for a in 0..na {
            match (sub.value[a], sub.budget[a]) {
                (None, _) => base[a] = true,
                (Some(_), None) => base[a] = false,
                (Some(v), Some(w)) => {
                    let gap_spend = ((w - spend[a]) / w).max(0.0);
                    let gap_cap = ((v - per_click[a]) / v).max(0.0);
                    base[a] = gap_spend < gap_cap;
                    if gap_spend <= tau && gap_cap <= tau {
                        ambiguous.push(a);
                    }
                }
            }
        }
        ambiguous.truncate(MAX_AMBIGUOUS);
        for mask in 0..(1usize << ambiguous.len()) {
            let mut paced = base.clone();
            for (bit, &a) in ambiguous.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    paced[a] = !paced[a];
                }
            }
            out.push((edges.clone(), paced));
        }
    }
    out
}

/// Solve one structure exactly; `None` if it is inconsistent.
fn solve_structure(sub: &SubMarket, edges: &[bool], paced: &[bool], opts: &FppeOptions) -> Option<Solution> {
    let na = sub.agents.len();
    let k = sub.items.len();
    let nodes = na + k;
    let edge = |a: usize, j: usize| edges[a * k + j];
    let log_tol = 1e-9;

    // Relative log-values per node; agents first, then items.
    let mut rel = vec![f64::NAN; nodes];
    let mut comp = vec![usize::MAX; nodes];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..nodes {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        rel[start] = 0.0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let neighbours: Vec<(usize, f64)> = if u < na {
                (0..k).filter(|&j| edge(u, j)).map(|j| (na + j, rel[u] + sub.phi[u][j].ln())).collect()
            } else {
                let j = u - na;
                (0..na).filter(|&a| edge(a, j)).map(|a| (a, rel[u] - sub.phi[a][j].ln())).collect()
            };
            for (v, target) in neighbours {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    rel[v] = target;
                    members.push(v);
                    queue.push_back(v);
                } else if (rel[v] - target).abs() > log_tol {
                    return None;
                }
            }
        }
        components.push(members);
    }

    let mut per_click = vec![0.0; na];
    let mut prices = vec![0.0; k];
    for members in &components {
        let agents: Vec<usize> = members.iter().copied().filter(|&u| u < na).collect();
        let items: Vec<usize> = members.iter().copied().filter(|&u| u >= na).map(|u| u - na).collect();
        if items.is_empty() && agents.iter().any(|&a| paced[a]) {
            return None;
        }
        if agents.is_empty() {
            return None;
        }
        let anchors: Vec<f64> = agents
            .iter()
            .filter(|&&a| !paced[a])
            .map(|&a| sub.value[a].expect("capped agents report finite values").ln() - rel[a])
            .collect();
        let offset = if let Some(&first) = anchors.first() {
            if anchors.iter().any(|o| (o - first).abs() > log_tol) {
                return None;
            }
            first
        } else {
            let total_budget: f64 = agents.iter().map(|&a| sub.budget[a].expect("paced budgets are finite")).sum();
            let top = items.iter().map(|&j| rel[na + j]).fold(f64::NEG_INFINITY, f64::max);
            let mass: f64 = items.iter().map(|&j| (rel[na + j] - top).exp()).sum();
            total_budget.ln() - top - mass.ln()
        };
        for &a in &agents {
            per_click[a] = match (paced[a], sub.value[a]) {
                (false, Some(v)) => v,
                _ => (rel[a] + offset).exp(),
            };
        }
        for &j in &items {
            prices[j] = (rel[na + j] + offset).exp();
        }
    }

    let rel_tol = 1e-12;
    for a in 0..na {
        if let Some(v) = sub.value[a] {
            if per_click[a] > v * (1.0 + rel_tol) {
                return None;
            }
        }
        for j in 0..k {
            if !edge(a, j) && per_click[a] * sub.phi[a][j] > prices[j] * (1.0 + rel_tol) {
                return None;
            }
        }
    }

    // Money flow: source -> agent -> item -> sink.
    let total: f64 = prices.iter().sum();
    let (source, sink) = (nodes, nodes + 1);
    let mut net = FlowNet::new(nodes + 2, total * 1e-15);
    for a in 0..na {
        let cap = sub.budget[a].map_or(total, |w| w.min(total));
        net.set_cap(source, a, cap);
        for j in 0..k {
            if edge(a, j) {
                net.set_cap(a, na + j, total);
            }
        }
    }
    for j in 0..k {
        net.set_cap(na + j, sink, prices[j]);
    }
    let all: Vec<usize> = (0..na).collect();
    let order = opts.tie_break.order(&all);
    let first: Vec<usize> = order.iter().copied().filter(|&a| paced[a]).collect();
    let second: Vec<usize> = order.iter().copied().filter(|&a| !paced[a]).collect();
    net.augment_in_order(source, &first, sink);
    for &a in &first {
        let w = sub.budget[a].expect("paced budgets are finite");
        if net.flow(source, a) < w * (1.0 - 1e-11) {
            return None;
        }
    }
    net.augment_in_order(source, &second, sink);
    for j in 0..k {
        if net.flow(na + j, sink) < prices[j] * (1.0 - 1e-11) {
            return None;
        }
    }

    let allocation = (0..na)
        .map(|a| (0..k).map(|j| if edge(a, j) { net.flow(a, na + j) / prices[j] } else { 0.0 }).collect())
        .collect();
    Some(Solution { prices, allocation })
}
