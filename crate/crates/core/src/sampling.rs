//! Seeded random instances for sweeps and property checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentType, Instance, MoneyCostFn, ValuationFn};
use crate::ext::{Finite, Infinite};
use crate::fppe::Message;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Concave valuation from one of the three supported families.
pub fn random_valuation<R: Rng>(rng: &mut R) -> ValuationFn {
    match rng.gen_range(0..3) {
        0 => ValuationFn::Linear { v: rng.gen_range(0.2..2.0) },
        1 => ValuationFn::Power { scale: rng.gen_range(0.3..2.0), exponent: rng.gen_range(0.3..1.0) },
        _ => {
            let segments = rng.gen_range(2..=3);
            let mut slope = rng.gen_range(0.8..3.0);
            let mut pts = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for _ in 0..segments {
                let len = rng.gen_range(0.1..0.6);
                x += len;
                y += slope * len;
                pts.push((x, y));
                slope *= rng.gen_range(0.1..0.8);
            }
            ValuationFn::PwlConcave { breakpoints: pts }
        }
    }
}

/// Convex money cost from one of the three supported families.
pub fn random_cost<R: Rng>(rng: &mut R) -> MoneyCostFn {
    match rng.gen_range(0..3) {
        0 => MoneyCostFn::Identity,
        1 => MoneyCostFn::Power { scale: rng.gen_range(0.5..1.5), exponent: rng.gen_range(1.0..2.5) },
        _ => {
            let mut slope = rng.gen_range(0.4..1.0);
            let mut pts = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for _ in 0..rng.gen_range(2..=3) {
                let len = rng.gen_range(0.1..0.8);
                x += len;
                y += slope * len;
                pts.push((x, y));
                slope *= rng.gen_range(1.2..3.0);
            }
            MoneyCostFn::PwlConvex { breakpoints: pts }
        }
    }
}

/// Agent with mixed preference families; budget infinite with probability 0.4.
pub fn random_agent<R: Rng>(rng: &mut R) -> AgentType {
    let valuation = random_valuation(rng);
    let money_cost = random_cost(rng);
    let budget = if rng.gen_bool(0.4) { Infinite } else { Finite(rng.gen_range(0.05..1.5)) };
    AgentType { valuation, money_cost, budget }
}

/// Linear value, identity cost, finite budget.
pub fn random_budgeted_agent<R: Rng>(rng: &mut R) -> AgentType {
    AgentType::budgeted(rng.gen_range(0.1..2.0), rng.gen_range(0.05..1.5))
}

/// One item, `2..=max_agents` agents with mixed preferences and CTRs in `[0.5, 1.5]`.
pub fn random_single_item<R: Rng>(rng: &mut R, max_agents: usize) -> Instance {
    let n = rng.gen_range(2..=max_agents);
    let agents = (0..n).map(|_| random_agent(rng)).collect();
    let ctr = (0..n).map(|_| vec![rng.gen_range(0.5..1.5)]).collect();
    Instance::new(agents, ctr).expect("sampled instance is valid")
}

/// Budgeted agents with random CTRs in `[0.1, 1]`, some entries zero.
pub fn random_budgeted_instance<R: Rng>(rng: &mut R, n: usize, m: usize) -> Instance {
    let agents = (0..n).map(|_| random_budgeted_agent(rng)).collect();
    let ctr = (0..n)
        .map(|_| (0..m).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.1..1.0) }).collect())
        .collect();
    Instance::new(agents, ctr).expect("sampled instance is valid")
}

/// Report profile mixing finite, value-only and budget-only messages.
pub fn random_profile<R: Rng>(rng: &mut R, n: usize, infinite_prob: f64) -> Vec<Message> {
    (0..n)
        .map(|_| {
            let v = rng.gen_range(0.1..1.0);
            let w = rng.gen_range(0.05..1.0);
            let roll: f64 = rng.gen();
            if roll < infinite_prob {
                Message::budget_only(w)
            } else if roll < 2.0 * infinite_prob {
                Message::value_only(v)
            } else {
                Message::finite(v, w)
            }
        })
        .collect()
}

/// Random CTR matrix with entries in `[0.1, 1]` and occasional zeros.
pub fn random_ctr<R: Rng>(rng: &mut R, n: usize, m: usize, zero_prob: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.1..1.0) }).collect())
        .collect()
}
