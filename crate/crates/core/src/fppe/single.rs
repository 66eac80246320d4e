//! Closed-form equilibrium for a single item.
//!
//! With effective values `e_i = ṽ_i φ_i`, the price is the smallest `p` with
//! `Σ_{e_i > p} w̃_i <= p`. Agents strictly above the price are paced and
//! spend their whole budget; the leftover supply goes to agents whose
//! effective value equals the price, in tie-break order.

use super::{Message, TieBreak};
use crate::ext::{ExtNonNeg, Finite, Infinite};

fn effective_value(msg: &Message, phi: f64) -> ExtNonNeg {
    if phi <= 0.0 {
        return Finite(0.0);
    }
    match msg.value {
        Finite(v) => Finite(v * phi),
        Infinite => Infinite,
    }
}

/// Budget of every agent whose effective value is at least `level`.
fn demand_at_or_above(eff: &[ExtNonNeg], msgs: &[Message], level: ExtNonNeg) -> ExtNonNeg {
    let mut total = 0.0;
    for (e, msg) in eff.iter().zip(msgs) {
        if *e >= level {
            match msg.budget {
                Finite(w) => total += w,
                Infinite => return Infinite,
            }
        }
    }
    Finite(total)
}

/// Returns the price and the `n x 1` allocation.
pub(super) fn solve(ctr: &[Vec<f64>], msgs: &[Message], tie: TieBreak) -> (f64, Vec<Vec<f64>>) {
    let n = msgs.len();
    let eff: Vec<ExtNonNeg> = msgs.iter().zip(ctr).map(|(m, r)| effective_value(m, r[0])).collect();

    let mut levels: Vec<f64> = eff.iter().filter_map(|e| e.finite()).filter(|&e| e > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    // Boundaries 0 = b_0 < b_1 < ... < b_K < b_{K+1} = ∞. On [b_k, b_{k+1})
    // the agents strictly above the price are those with e >= b_{k+1}.
    let mut bounds: Vec<ExtNonNeg> = vec![Finite(0.0)];
    bounds.extend(levels.iter().map(|&l| Finite(l)));
    bounds.push(Infinite);

    let mut price = 0.0;
    for k in 0..bounds.len() - 1 {
        let lo = bounds[k].finite().expect("lower boundary is finite");
        let Finite(d) = demand_at_or_above(&eff, msgs, bounds[k + 1]) else {
            continue;
        };
        let candidate = lo.max(d);
        if Finite(candidate) < bounds[k + 1] {
            price = candidate;
            break;
        }
    }

    let mut x = vec![vec![0.0]; n];
    if price <= 0.0 {
        return (0.0, x);
    }
    let mut left = 1.0;
    for i in 0..n {
        if eff[i] > Finite(price) {
            let w = msgs[i].budget.finite().expect("paced agents have finite budgets");
            x[i][0] = w / price;
            left -= x[i][0];
        }
    }
    let tied: Vec<usize> = (0..n).filter(|&i| eff[i] == Finite(price)).collect();
    for i in tie.order(&tied) {
        if left <= 0.0 {
            break;
        }
        let cap = match msgs[i].budget {
            Finite(w) => w / price,
            Infinite => f64::INFINITY,
        };
        let take = left.min(cap);
        x[i][0] = take;
        left -= take;
    }
    (price, x)
}
