//! Autobidding with budget and value reporting.
//!
//! Advertisers report a (value, budget) pair to a platform that runs a
//! first-price auction per item with budget pacing. This crate computes the
//! pacing equilibrium for any reported profile ([`fppe`]), analyzes the
//! reporting game played by advertisers with general preferences
//! ([`metagame`]), and measures outcomes by liquid welfare ([`welfare`]).

pub mod agents;
pub mod config;
pub mod error;
pub mod ext;
pub mod fppe;
pub mod metagame;
pub mod numeric;
pub mod sampling;
pub mod welfare;

pub use agents::{AgentType, Instance, MoneyCostFn, ValuationFn};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use ext::ExtNonNeg;
pub use fppe::{solve_fppe, solve_fppe_single_item, FppeOutcome, Message};
