//! Numerical tolerances shared by every module.
//!
//! All thresholds live in one record so that reports can echo exactly which
//! values a run used.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Generic floating-point slack for comparisons.
    pub eps_num: f64,
    /// Residual threshold for an equilibrium produced by the iterative path.
    pub eps_fppe: f64,
    /// Residual threshold a structure-polished candidate must meet.
    pub eps_exact: f64,
    /// Deviation gain allowed when verifying single-item equilibria.
    pub eps_nash_single: f64,
    /// Deviation gain allowed for grid-restricted equilibrium search.
    pub eps_nash_grid: f64,
    /// Iteration cap for the iterative equilibrium path.
    pub max_iter: usize,
    /// Largest number of agents handled by the exact path.
    pub exact_max_agents: usize,
    /// Largest number of items handled by the exact path.
    pub exact_max_items: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_num: 1e-9,
            eps_fppe: 1e-8,
            eps_exact: 1e-10,
            eps_nash_single: 1e-7,
            eps_nash_grid: 1e-4,
            max_iter: 100_000,
            exact_max_agents: 6,
            exact_max_items: 6,
        }
    }
}
