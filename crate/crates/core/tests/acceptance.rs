//! Acceptance run: one line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use pacing_core::fppe::{
    brute_force_fppe, price_monotonicity_check, solve_market, FppeOptions, SolvePath,
};
use pacing_core::metagame::{
    best_response_single_item, grid_epsilon_pne_search, mixed_deviation_bound_check, price_intervals,
    solve_pure_nash_single_item, value_only_lower_bound, verify_pure_nash, MessageSpace, MixedProfile, StrategyGrid,
};
use pacing_core::sampling::{random_agent, random_budgeted_instance, random_ctr, random_profile, random_single_item, rng};
use pacing_core::welfare::{brute_force_optimal_welfare, optimal_liquid_welfare, poa_ratio};
use pacing_core::{solve_fppe, solve_fppe_single_item, AgentType, Instance, Message};
use rand::Rng;

type Outcome = Result<String, String>;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn two_linear(v1: f64, v2: f64) -> Instance {
    Instance::single_item(vec![AgentType::linear(v1), AgentType::linear(v2)]).unwrap()
}

fn budget_regimes() -> Outcome {
    let cases = [
        ((0.5, 0.4), 0.9, (5.0 / 9.0, 4.0 / 9.0), (0.45, 0.9)),
        ((0.7, 0.5), 1.0, (0.7, 0.3), (0.5, 1.0)),
        ((1.5, 0.5), 1.5, (1.0, 0.0), (0.75, 1.0)),
    ];
    let mut slowest = Duration::ZERO;
    for ((w1, w2), p, (x1, x2), (a1, a2)) in cases {
        let msgs = [Message::finite(2.0, w1), Message::finite(1.0, w2)];
        let t = Instant::now();
        let out = solve_fppe_single_item(&msgs).map_err(err)?;
        slowest = slowest.max(t.elapsed());
        let got = [out.prices[0], out.allocation[0][0], out.allocation[1][0], out.multipliers[0], out.multipliers[1]];
        let want = [p, x1, x2, a1, a2];
        ensure(got.iter().zip(&want).all(|(g, w)| close(*g, *w, 1e-12)), || format!("budgets ({w1}, {w2}): got {got:?}, want {want:?}"))?;
    }
    ensure(slowest < Duration::from_millis(1), || format!("slowest solve took {slowest:?}"))?;
    Ok(format!("three regimes exact, slowest {slowest:?}"))
}

fn crossed_items() -> Outcome {
    let ctr = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let msgs = [Message::finite(1.0, 0.5), Message::finite(1.0, 0.5)];
    for path in [SolvePath::Exact, SolvePath::Iterative] {
        let out = solve_market(&ctr, &msgs, &FppeOptions::default().with_path(path)).map_err(err)?;
        let ok = (0..2).all(|j| close(out.prices[j], 0.5, 1e-8))
            && (0..2).all(|i| (0..2).all(|j| close(out.allocation[i][j], if i == j { 1.0 } else { 0.0 }, 1e-8)));
        ensure(ok, || format!("{path:?}: prices {:?}, allocation {:?}", out.prices, out.allocation))?;
    }
    Ok("prices (0.5, 0.5) and identity allocation on both paths".into())
}

fn runner_up_and_proportional() -> Outcome {
    let inst = two_linear(1.0, 0.7);
    let kink = [Message::finite(1.0, 0.7), Message::finite(0.7, 0.7)];
    let rep = verify_pure_nash(&inst, &kink, 1e-7, MessageSpace::Full).map_err(err)?;
    ensure(rep.is_eps_nash, || format!("runner-up profile gain {}", rep.max_gain))?;
    let br = best_response_single_item(&inst, &kink, 0, MessageSpace::Full).map_err(err)?;
    let w = br.message.budget.to_f64();
    ensure(close(w, 0.7, 1e-6), || format!("best budget {w}, want 0.7"))?;

    let share = 0.7 / 1.7f64.powi(2);
    let split = [Message::finite(1.0, share), Message::finite(0.7, share * 0.7)];
    let rep = verify_pure_nash(&inst, &split, 1e-7, MessageSpace::Full).map_err(err)?;
    ensure(rep.is_eps_nash, || format!("proportional profile gain {}", rep.max_gain))?;
    let br = best_response_single_item(&inst, &split, 0, MessageSpace::Full).map_err(err)?;
    let w2 = br.message.budget.to_f64();
    ensure(close(w2, 0.242_214_53, 1e-6), || format!("best budget {w2}, want 0.24221453"))?;
    Ok(format!("both verified; best budgets {w:.8} and {w2:.8}"))
}

fn proportional_breaks() -> Outcome {
    let inst = two_linear(1.0, 0.6);
    let share = 0.6 / 1.6f64.powi(2);
    let split = [Message::finite(1.0, share), Message::finite(0.6, share * 0.6)];
    let rep = verify_pure_nash(&inst, &split, 1e-7, MessageSpace::Full).map_err(err)?;
    ensure(!rep.is_eps_nash && rep.max_gain > 0.0, || format!("profile accepted, gain {}", rep.max_gain))?;
    Ok(format!("rejected; agent {} gains {:.6}", rep.worst_agent, rep.max_gain))
}

fn crossed_items_no_equilibrium() -> Outcome {
    let inst = Instance::new(
        vec![AgentType::budgeted(1.0, 0.5), AgentType::budgeted(1.0, 0.5)],
        vec![vec![1.0, 0.5], vec![0.5, 1.0]],
    )
    .unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(err)?;
    let t = Instant::now();
    let res = pool.install(|| grid_epsilon_pne_search(&inst, &StrategyGrid::default_for(2), 1e-3)).map_err(err)?;
    let elapsed = t.elapsed();
    ensure(res.equilibria.is_empty(), || format!("{} grid equilibria found", res.equilibria.len()))?;
    ensure(res.closest.max_gain > 0.0, || "closest profile has zero gain".into())?;
    ensure(elapsed < Duration::from_secs(60), || format!("search took {elapsed:?}"))?;
    Ok(format!("{} profiles, none within 1e-3, min max gain {:.6}, {elapsed:.2?}", res.profiles, res.closest.max_gain))
}

fn capped_winner_tightness() -> Outcome {
    let mut ratios = Vec::new();
    for k in [10.0, 100.0, 1e4] {
        let inst = Instance::single_item(vec![AgentType::budgeted(k, 1.0), AgentType::linear(1.0)]).unwrap();
        let sol = solve_pure_nash_single_item(&inst).map_err(err)?;
        let mut worst: f64 = 0.0;
        for eq in &sol.equilibria {
            let out = solve_fppe(&inst, &eq.profile).map_err(err)?;
            worst = worst.max(poa_ratio(&inst, &out.allocation).map_err(err)?.ratio);
        }
        ensure(close(worst, 2.0 - 1.0 / k, 1e-6), || format!("K = {k}: ratio {worst}, want {}", 2.0 - 1.0 / k))?;
        ratios.push(worst);
    }
    ensure(ratios.windows(2).all(|w| w[1] > w[0]), || format!("not increasing: {ratios:?}"))?;
    Ok(format!("ratios {ratios:?}"))
}

/// Equilibria of the random sweep, kept for the deviation-bound check.
struct Sweep {
    instances: Vec<(Instance, Vec<Vec<Message>>)>,
}

fn random_sweep(sweep: &mut Option<Sweep>) -> Outcome {
    let mut r = rng(2024);
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut without = 0;
    let mut instances = Vec::new();
    for _ in 0..200 {
        let inst = random_single_item(&mut r, 6);
        let sol = solve_pure_nash_single_item(&inst).map_err(err)?;
        if sol.equilibria.is_empty() {
            without += 1;
        }
        let opt = optimal_liquid_welfare(&inst).map_err(err)?.value;
        let mut profiles = Vec::new();
        for eq in sol.equilibria {
            let out = solve_fppe(&inst, &eq.profile).map_err(err)?;
            let ratio = poa_ratio(&inst, &out.allocation).map_err(err)?;
            ensure(ratio.ratio <= 2.0 + 1e-6, || format!("ratio {} (optimum {opt}) at price {}", ratio.ratio, eq.price))?;
            worst = worst.max(ratio.ratio);
            count += 1;
            profiles.push(eq.profile);
        }
        instances.push((inst, profiles));
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("sweep took {elapsed:?}"))?;
    *sweep = Some(Sweep { instances });
    Ok(format!("{count} equilibria, worst ratio {worst:.6}, {without} instances without one, {elapsed:.2?}"))
}

fn budget_monotonicity() -> Outcome {
    let mut r = rng(77);
    let mut price_bad = 0;
    let mut revenue_bad = 0;
    for _ in 0..500 {
        let n = r.gen_range(2..=5);
        let m = r.gen_range(1..=4);
        let inst = random_budgeted_instance(&mut r, n, m);
        let msgs: Vec<Message> = (0..n).map(|_| Message::finite(r.gen_range(0.1..2.0), r.gen_range(0.01..1.5))).collect();
        let i = r.gen_range(0..n);
        let delta = r.gen_range(1e-4..1.0);
        let rep = price_monotonicity_check(&inst, &msgs, i, delta).map_err(err)?;
        if rep.min_price_delta < -1e-9 {
            price_bad += 1;
        }
        if rep.revenue_delta < -1e-9 || rep.revenue_delta > delta + 1e-9 {
            revenue_bad += 1;
        }
    }
    ensure(price_bad == 0 && revenue_bad == 0, || format!("{price_bad} price and {revenue_bad} revenue violations"))?;
    Ok("500 perturbations, no violations".into())
}

fn oracle_agreement() -> Outcome {
    let mut r = rng(99);
    let mut price_gap: f64 = 0.0;
    let mut welfare_gap: f64 = 0.0;
    for _ in 0..50 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(1..=3);
        let agents: Vec<AgentType> = (0..n).map(|_| random_agent(&mut r)).collect();
        let inst = Instance::new(agents, random_ctr(&mut r, n, m, 0.1)).unwrap();
        let msgs = random_profile(&mut r, n, 0.2);
        let out = solve_fppe(&inst, &msgs).map_err(err)?;
        let oracle = brute_force_fppe(&inst.ctr, &msgs, 1000).map_err(err)?;
        for (a, b) in out.prices.iter().zip(&oracle.prices) {
            price_gap = price_gap.max((a - b).abs());
        }
        let opt = optimal_liquid_welfare(&inst).map_err(err)?;
        let grid = brute_force_optimal_welfare(&inst, 1000).map_err(err)?;
        welfare_gap = welfare_gap.max((opt.value - grid.value).abs());
    }
    ensure(price_gap <= 3e-3, || format!("price gap {price_gap}"))?;
    ensure(welfare_gap <= 2e-3, || format!("welfare gap {welfare_gap}"))?;
    Ok(format!("max price gap {price_gap:.2e}, max welfare gap {welfare_gap:.2e}"))
}

fn single_item_characterization() -> Outcome {
    for (v1, v2) in [(1.0, 0.7), (2.0, 0.5), (1.0, 1.0)] {
        let iv = price_intervals(&two_linear(v1, v2)).map_err(err)?;
        let low = iv.low.ok_or("empty low interval")?;
        let want = v1 * v2 / (v1 + v2);
        ensure(close(low.lo, want, 1e-6) && close(low.hi, want, 1e-6), || format!("({v1}, {v2}): {low:?}, want {want}"))?;
    }
    let mut r = rng(5);
    for _ in 0..200 {
        let inst = random_single_item(&mut r, 6);
        let iv = price_intervals(&inst).map_err(err)?;
        if let (Some(low), Some(high)) = (iv.low, iv.high) {
            ensure(low.is_subset_of(&high, 1e-9), || format!("{low:?} not inside {high:?}"))?;
        }
    }
    let inst = Instance::single_item(vec![AgentType::budgeted(1.0, 0.9), AgentType::budgeted(0.6, 0.5)]).unwrap();
    let sol = solve_pure_nash_single_item(&inst).map_err(err)?;
    let mut prices: Vec<f64> = sol.equilibria.iter().map(|e| e.price).collect();
    prices.sort_by(f64::total_cmp);
    prices.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    ensure(prices.len() >= 2, || format!("equilibrium prices {prices:?}"))?;
    Ok(format!("low interval endpoints exact, nesting holds, {} distinct prices", prices.len()))
}

fn value_reporting_gap() -> Outcome {
    let mut ratios = Vec::new();
    for n in [10, 50, 100] {
        let res = value_only_lower_bound(n, 0.01).map_err(err)?;
        ensure(res.evaluated_equilibrium <= res.equilibrium_bound + 1e-9, || format!("N = {n}: welfare above bound"))?;
        ratios.push(res.ratio);
    }
    ensure(ratios[1] >= 50.0 / 5.0, || format!("N = 50 ratio {}", ratios[1]))?;
    let slope_a = (ratios[1] - ratios[0]) / 40.0;
    let slope_b = (ratios[2] - ratios[1]) / 50.0;
    ensure(slope_a > 0.0 && (slope_a / slope_b - 1.0).abs() < 0.1, || format!("slopes {slope_a} and {slope_b}"))?;
    Ok(format!("ratios {ratios:.4?}, slope {slope_b:.4} per agent"))
}

fn deviation_bounds(sweep: &Option<Sweep>) -> Outcome {
    let sweep = sweep.as_ref().ok_or("random sweep did not run")?;
    let mut checked = 0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    let mut extra = vec![(two_linear(1.0, 0.7), vec![vec![Message::finite(1.0, 0.7), Message::finite(0.7, 0.7)]])];
    extra.extend(sweep.instances.iter().cloned());
    for (inst, profiles) in &extra {
        if profiles.is_empty() {
            continue;
        }
        let opt = optimal_liquid_welfare(inst).map_err(err)?;
        for profile in profiles {
            let rep = mixed_deviation_bound_check(inst, &MixedProfile::point_mass(profile), &opt.allocation).map_err(err)?;
            for a in &rep.agents {
                worst_slack = worst_slack.min(a.slack);
            }
            ensure(rep.aggregate_slack >= 0.0, || format!("optimum {} above four times {}", rep.reference_welfare, rep.equilibrium_welfare))?;
            worst_ratio = worst_ratio.max(rep.reference_welfare / rep.equilibrium_welfare);
            checked += 1;
        }
    }
    ensure(worst_slack >= -1e-6, || format!("per-agent slack {worst_slack}"))?;
    Ok(format!("{checked} equilibria, worst per-agent slack {worst_slack:.2e}, worst ratio {worst_ratio:.4}"))
}

fn main() {
    let mut sweep = None;
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 two-bidder budget regimes", budget_regimes()),
        ("2 crossed-items equilibrium", crossed_items()),
        ("3 runner-up and proportional equilibria", runner_up_and_proportional()),
        ("4 proportional split breaks at v2 = 0.6", proportional_breaks()),
        ("5 no grid equilibrium on crossed items", crossed_items_no_equilibrium()),
        ("6 capped-winner ratio 2 - 1/K", capped_winner_tightness()),
        ("7 pure equilibria within factor 2", random_sweep(&mut sweep)),
        ("8 budget monotonicity", budget_monotonicity()),
        ("9 oracle agreement", oracle_agreement()),
        ("10 single-item price intervals", single_item_characterization()),
        ("11 value-only reporting loses linearly", value_reporting_gap()),
    ];
    results.push(("12 deviation bound and factor 4", deviation_bounds(&sweep)));
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
