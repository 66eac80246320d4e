//! Exhaustive equilibrium search over finite message grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_profile;
use crate::agents::Instance;
use crate::error::{Error, Result};
use crate::ext::ExtNonNeg;
use crate::fppe::{solve_fppe, Message};

/// Largest number of profiles the search will enumerate.
pub const MAX_PROFILES: usize = 1_000_000;

/// A finite message set for each agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyGrid {
    pub messages: Vec<Vec<Message>>,
}

impl StrategyGrid {
    /// Every agent gets the product of `values` and `budgets`, skipping the
    /// pair that reports both as infinite.
    pub fn product(n_agents: usize, values: &[ExtNonNeg], budgets: &[ExtNonNeg]) -> Self {
        let row: Vec<Message> = values
            .iter()
            .flat_map(|&v| budgets.iter().filter_map(move |&w| Message::new(v, w).ok()))
            .collect();
        Self { messages: vec![row; n_agents] }
    }

    /// Values `0, 0.25, ..., 1.5, ∞` and budgets `0, 0.05, ..., 1.2`.
    pub fn default_for(n_agents: usize) -> Self {
        let mut values: Vec<ExtNonNeg> = (0..=6).map(|k| ExtNonNeg::Finite(0.25 * k as f64)).collect();
        values.push(ExtNonNeg::Infinite);
        let budgets: Vec<ExtNonNeg> = (0..=24).map(|k| ExtNonNeg::Finite(0.05 * k as f64)).collect();
        Self::product(n_agents, &values, &budgets)
    }

    pub fn n_profiles(&self) -> Option<usize> {
        self.messages.iter().try_fold(1usize, |acc, row| acc.checked_mul(row.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    /// Index of each agent's message in its grid row.
    pub indices: Vec<usize>,
    pub messages: Vec<Message>,
    /// Largest gain any agent gets from switching to another grid message.
    #[serde(with = "crate::ext::extended_f64")]
    pub max_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub eps: f64,
    pub profiles: usize,
    /// Profiles whose largest deviation gain is at most `eps`.
    pub equilibria: Vec<GridProfile>,
    /// The profile closest to an equilibrium. Its gain being positive
    /// means no exact equilibrium exists on the grid.
    pub closest: GridProfile,
}

fn gain(best: f64, current: f64) -> f64 {
    if best == current { 0.0 } else { best - current }
}

/// Enumerate all grid profiles and their best grid deviations.
pub fn grid_epsilon_pne_search(instance: &Instance, grid: &StrategyGrid, eps: f64) -> Result<GridSearchResult> {
    let n = instance.n_agents();
    if grid.messages.len() != n {
        return Err(Error::input(format!("grid has {} rows for {n} agents", grid.messages.len())));
    }
    if grid.messages.iter().any(|row| row.is_empty()) {
        return Err(Error::input("every agent needs at least one grid message"));
    }
    let total = grid.n_profiles().filter(|&t| t <= MAX_PROFILES).ok_or_else(|| {
        Error::Size(format!("grid has more than {MAX_PROFILES} profiles"))
    })?;
    let radix: Vec<usize> = grid.messages.iter().map(Vec::len).collect();
    // stride[i] is the index step for agent i's coordinate.
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * radix[i + 1];
    }
    let decode = |mut k: usize| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let d = k / stride[i];
                k %= stride[i];
                d
            })
            .collect()
    };
    let messages_of = |idx: &[usize]| -> Vec<Message> { idx.iter().enumerate().map(|(i, &d)| grid.messages[i][d]).collect() };

    let utilities: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let profile = messages_of(&decode(k));
            check_profile(instance, &profile)?;
            let out = solve_fppe(instance, &profile)?;
            Ok((0..n)
                .map(|i| instance.agents[i].utility(&out.allocation[i], &instance.ctr[i], out.payments[i]))
                .collect())
        })
        .collect::<Result<_>>()?;

    // best[i][k0] is agent i's best grid utility given the others' part of
    // profile k, keyed by the profile with agent i's coordinate zeroed.
    let best: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![f64::NEG_INFINITY; total];
            for k in 0..total {
                let base = k - (k / stride[i]) % radix[i] * stride[i];
                if utilities[k][i] > row[base] {
                    row[base] = utilities[k][i];
                }
            }
            row
        })
        .collect();

    let max_gain = |k: usize| -> f64 {
        (0..n)
            .map(|i| {
                let base = k - (k / stride[i]) % radix[i] * stride[i];
                gain(best[i][base], utilities[k][i])
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let gains: Vec<f64> = (0..total).into_par_iter().map(max_gain).collect();

    let mut equilibria = Vec::new();
    let mut closest = 0;
    for (k, &g) in gains.iter().enumerate() {
        if g <= eps {
            let indices = decode(k);
            equilibria.push(GridProfile { messages: messages_of(&indices), indices, max_gain: g });
        }
        if g < gains[closest] {
            closest = k;
        }
    }
    let indices = decode(closest);
    Ok(GridSearchResult {
        eps,
        profiles: total,
        equilibria,
        closest: GridProfile { messages: messages_of(&indices), indices, max_gain: gains[closest] },
    })
}
