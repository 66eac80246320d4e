//! Named, reproducible scenarios with built-in checks.

use std::collections::BTreeMap;

use pacing_core::fppe::{brute_force_fppe, price_monotonicity_check};
use pacing_core::metagame::{
    best_response_single_item, grid_epsilon_pne_search, solve_pure_nash_single_item, value_only_lower_bound, verify_pure_nash,
    MessageSpace, StrategyGrid,
};
use pacing_core::sampling::{random_agent, random_budgeted_instance, random_ctr, random_profile, random_single_item, rng};
use pacing_core::welfare::{brute_force_optimal_welfare, liquid_welfare, optimal_liquid_welfare, poa_ratio};
use pacing_core::{solve_fppe, solve_fppe_single_item, AgentType, Instance, Message};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands::{CliError, CliResult};
use crate::report::{num, to_value, Report};

type Runner = fn(&mut Params, u64, &mut Report) -> CliResult<()>;

struct Scenario {
    name: &'static str,
    about: &'static str,
    defaults: &'static [(&'static str, &'static str)],
    /// Default seed for randomized scenarios.
    seed: Option<u64>,
    run: Runner,
}

const REGISTRY: &[Scenario] = &[
    Scenario {
        name: "table1",
        about: "two bidders with values (2, 1) under three budget regimes; closed-form price, allocation and multipliers",
        defaults: &[],
        seed: None,
        run: table1,
    },
    Scenario {
        name: "linear_efficient",
        about: "runner-up budget profile for two linear agents is an equilibrium",
        defaults: &[("v1", "1"), ("v2", "0.7")],
        seed: None,
        run: linear_efficient,
    },
    Scenario {
        name: "linear_inefficient",
        about: "proportional-split profile for two linear agents and its existence condition",
        defaults: &[("v1", "1"), ("v2", "0.7")],
        seed: None,
        run: linear_inefficient,
    },
    Scenario {
        name: "budgeted_nonexistence",
        about: "grid search finds no approximate pure equilibrium on the crossed-items market",
        defaults: &[("eps", "0.001")],
        seed: None,
        run: budgeted_nonexistence,
    },
    Scenario {
        name: "poa_lower_bound",
        about: "capped high-value bidder against a linear bidder; worst equilibrium ratio 2 - 1/K",
        defaults: &[("K", "100")],
        seed: None,
        run: poa_lower_bound,
    },
    Scenario {
        name: "value_reporting_omega_n",
        about: "value-only reporting loses welfare linearly in the number of small agents",
        defaults: &[("N", "50"), ("eps", "0.01")],
        seed: None,
        run: value_reporting,
    },
    Scenario {
        name: "single_item_nash_sweep",
        about: "random single-item instances: constructed equilibria verify and stay within factor 2",
        defaults: &[("count", "200"), ("max_agents", "6")],
        seed: Some(2024),
        run: single_item_sweep,
    },
    Scenario {
        name: "budget_monotonicity_sweep",
        about: "raising one reported budget never lowers a price and adds at most the increase to revenue",
        defaults: &[("count", "500")],
        seed: Some(77),
        run: monotonicity_sweep,
    },
    Scenario {
        name: "oracle_agreement",
        about: "solver against brute-force equilibrium and welfare oracles on tiny instances",
        defaults: &[("count", "50"), ("grid", "1000")],
        seed: Some(99),
        run: oracle_agreement,
    },
];

/// Scenario parameters given as `key=value` pairs.
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    fn parse(defaults: &[(&str, &str)], args: &[String]) -> CliResult<Self> {
        let mut values: BTreeMap<String, String> = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for arg in args {
            let (k, v) = arg
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("parameter {arg:?} is not of the form key=value")))?;
            if !values.contains_key(k) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Input(format!("unknown parameter {k:?}; expected one of {known:?}")));
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Self { values })
    }

    fn f64(&self, key: &str) -> CliResult<f64> {
        let raw = &self.values[key];
        raw.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Input(format!("parameter {key}={raw} is not a finite number")))
    }

    fn usize(&self, key: &str) -> CliResult<usize> {
        let raw = &self.values[key];
        raw.parse::<usize>().map_err(|_| CliError::Input(format!("parameter {key}={raw} is not a non-negative integer")))
    }

    fn positive(&self, key: &str) -> CliResult<f64> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(CliError::Input(format!("parameter {key} must be positive")))
        }
    }
}

pub fn list() -> Report {
    let mut report = Report::new("list", "scenarios");
    let entries: Vec<Value> = REGISTRY
        .iter()
        .map(|s| {
            let defaults: BTreeMap<&str, &str> = s.defaults.iter().copied().collect();
            json!({ "name": s.name, "about": s.about, "params": defaults, "default_seed": s.seed })
        })
        .collect();
    report.result = Value::Array(entries);
    report
}

pub fn run(name: &str, args: &[String], seed: Option<u64>) -> CliResult<Report> {
    let scenario = REGISTRY.iter().find(|s| s.name == name).ok_or_else(|| {
        let names: Vec<&str> = REGISTRY.iter().map(|s| s.name).collect();
        CliError::Input(format!("unknown scenario {name:?}; known scenarios: {}", names.join(", ")))
    })?;
    let mut params = Params::parse(scenario.defaults, args)?;
    let mut report = Report::new("scenario", scenario.name);
    for (k, v) in &params.values {
        let value = v.parse::<f64>().map(num).unwrap_or_else(|_| json!(v));
        report.params.insert(k.clone(), value);
    }
    let seed = scenario.seed.map(|d| seed.unwrap_or(d));
    report.seed = seed;
    (scenario.run)(&mut params, seed.unwrap_or(0), &mut report)?;
    Ok(report)
}

fn two_linear(v1: f64, v2: f64) -> CliResult<Instance> {
    Ok(Instance::single_item(vec![AgentType::linear(v1), AgentType::linear(v2)])?)
}

fn table1(_: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    const SOURCE: &str = "two-bidder closed form";
    let regimes = [
        ("both budgets bind", (0.5, 0.4), 0.9, (5.0 / 9.0, 4.0 / 9.0), (0.45, 0.9)),
        ("loser budget binds", (0.7, 0.5), 1.0, (0.7, 0.3), (0.5, 1.0)),
        ("winner unconstrained", (1.5, 0.5), 1.5, (1.0, 0.0), (0.75, 1.0)),
    ];
    let mut results = Vec::new();
    for (label, (w1, w2), p, (x1, x2), (a1, a2)) in regimes {
        let out = solve_fppe_single_item(&[Message::finite(2.0, w1), Message::finite(1.0, w2)])?;
        report.check_close(&format!("{label}: price"), out.prices[0], p, 1e-12, SOURCE);
        report.check_close(&format!("{label}: allocation 1"), out.allocation[0][0], x1, 1e-12, SOURCE);
        report.check_close(&format!("{label}: allocation 2"), out.allocation[1][0], x2, 1e-12, SOURCE);
        report.check_close(&format!("{label}: multiplier 1"), out.multipliers[0], a1, 1e-12, SOURCE);
        report.check_close(&format!("{label}: multiplier 2"), out.multipliers[1], a2, 1e-12, SOURCE);
        results.push(json!({ "regime": label, "budgets": [w1, w2], "outcome": to_value(&out) }));
    }
    report.result = Value::Array(results);
    Ok(())
}

fn linear_efficient(p: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    let (v1, v2) = (p.positive("v1")?, p.positive("v2")?);
    if v2 > v1 {
        return Err(CliError::Input("linear_efficient needs v1 >= v2".into()));
    }
    let inst = two_linear(v1, v2)?;
    let profile = [Message::finite(v1, v2), Message::finite(v2, v2)];
    let eps = report.tolerances.eps_nash_single;
    let rep = verify_pure_nash(&inst, &profile, eps, MessageSpace::Full)?;
    report.check("profile is an equilibrium", rep.is_eps_nash, true, "runner-up budget equilibrium", rep.is_eps_nash);
    let br = best_response_single_item(&inst, &profile, 0, MessageSpace::Full)?;
    report.check_close("best budget of the high bidder", br.message.budget.to_f64(), v2, 1e-6, "pay the runner-up value");
    report.check_close("utility of the high bidder", br.utility, v1 - v2, 1e-6, "win the item at price v2");
    report.result = json!({ "profile": profile, "nash": to_value(&rep), "best_response": to_value(&br) });
    Ok(())
}

fn linear_inefficient(p: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    let (v1, v2) = (p.positive("v1")?, p.positive("v2")?);
    let inst = two_linear(v1, v2)?;
    let s = (v1 + v2).powi(2);
    let (w1, w2) = (v1 * v1 * v2 / s, v1 * v2 * v2 / s);
    let profile = [Message::finite(v1, w1), Message::finite(v2, w2)];
    let eps = report.tolerances.eps_nash_single;
    let rep = verify_pure_nash(&inst, &profile, eps, MessageSpace::Full)?;
    let ratio = v2.min(v1) / v2.max(v1);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let exists = ratio >= golden;
    report.check(
        "equilibrium iff the value ratio is at least (sqrt 5 - 1)/2",
        rep.is_eps_nash,
        exists,
        "local maxima of the deviation utility compared in closed form",
        rep.is_eps_nash == exists,
    );
    if exists {
        for (i, w) in [(0, w1), (1, w2)] {
            let br = best_response_single_item(&inst, &profile, i, MessageSpace::Full)?;
            report.check_close(
                &format!("best budget of agent {}", i + 1),
                br.message.budget.to_f64(),
                w,
                1e-6,
                "proportional split v1 v2 / (v1 + v2)^2 scaled by own value",
            );
        }
    } else {
        report.check("largest deviation gain is positive", num(rep.max_gain), "> 0", "the split is not stable", rep.max_gain > 0.0);
    }
    report.result = json!({ "profile": profile, "budgets": [w1, w2], "nash": to_value(&rep) });
    Ok(())
}

fn crossed_items() -> CliResult<Instance> {
    Ok(Instance::new(
        vec![AgentType::budgeted(1.0, 0.5), AgentType::budgeted(1.0, 0.5)],
        vec![vec![1.0, 0.5], vec![0.5, 1.0]],
    )?)
}

fn budgeted_nonexistence(p: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    let eps = p.positive("eps")?;
    let inst = crossed_items()?;
    let res = grid_epsilon_pne_search(&inst, &StrategyGrid::default_for(2), eps)?;
    report.check("approximate equilibria on the grid", res.equilibria.len(), 0, "no pure equilibrium exists", res.equilibria.is_empty());
    report.check(
        "smallest largest-gain over the grid",
        num(res.closest.max_gain),
        "> 0",
        "no pure equilibrium exists",
        res.closest.max_gain > 0.0,
    );
    report.result = to_value(&res);
    Ok(())
}

fn poa_lower_bound(p: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    let k = p.positive("K")?;
    if k < 1.0 {
        return Err(CliError::Input("K must be at least 1".into()));
    }
    let inst = Instance::single_item(vec![AgentType::budgeted(k, 1.0), AgentType::linear(1.0)])?;
    let sol = solve_pure_nash_single_item(&inst)?;
    let mut worst: f64 = 0.0;
    let mut worst_price = None;
    for eq in &sol.equilibria {
        let out = solve_fppe(&inst, &eq.profile)?;
        let r = poa_ratio(&inst, &out.allocation)?.ratio;
        if r > worst {
            worst = r;
            worst_price = Some(eq.price);
        }
    }
    let target = 2.0 - 1.0 / k;
    report.check_close("worst equilibrium ratio", worst, target, 1e-6, "2 - 1/K");
    let x = [vec![1.0 / k], vec![1.0 - 1.0 / k]];
    let w = liquid_welfare(&inst, &x)?;
    report.check_close("welfare of the split (1/K, 1 - 1/K)", w, target, 1e-9, "capped bidder worth 1 plus the remainder");
    report.result = json!({
        "equilibria": sol.equilibria.len(),
        "worst_ratio": num(worst),
        "worst_price": worst_price,
        "optimum": num(optimal_liquid_welfare(&inst)?.value),
    });
    Ok(())
}

fn value_reporting(p: &mut Params, _: u64, report: &mut Report) -> CliResult<()> {
    let n = p.usize("N")?;
    let eps = p.f64("eps")?;
    let res = value_only_lower_bound(n, eps)?;
    report.check("ratio of expected optimum to equilibrium bound", num(res.ratio), format!(">= {}", n as f64 / 5.0), "ratio grows like N/4", res.ratio >= n as f64 / 5.0);
    report.check(
        "evaluated equilibrium welfare within the bound",
        num(res.evaluated_equilibrium),
        num(res.equilibrium_bound),
        "(1-eps)^2 * 2 + 2 eps (1-eps) + eps^2 N/2",
        res.evaluated_equilibrium <= res.equilibrium_bound + 1e-9,
    );
    report.result = to_value(&res);
    Ok(())
}

fn single_item_sweep(p: &mut Params, seed: u64, report: &mut Report) -> CliResult<()> {
    let count = p.usize("count")?;
    let max_agents = p.usize("max_agents")?;
    if !(2..=8).contains(&max_agents) {
        return Err(CliError::Input("max_agents must be between 2 and 8".into()));
    }
    let rows = (0..count)
        .into_par_iter()
        .map(|k| -> CliResult<BTreeMap<String, Value>> {
            let mut r = rng(seed.wrapping_add(k as u64));
            let inst = random_single_item(&mut r, max_agents);
            let sol = solve_pure_nash_single_item(&inst)?;
            let opt = optimal_liquid_welfare(&inst)?.value;
            let mut worst: f64 = 0.0;
            for eq in &sol.equilibria {
                let out = solve_fppe(&inst, &eq.profile)?;
                worst = worst.max(poa_ratio(&inst, &out.allocation)?.ratio);
            }
            Ok(BTreeMap::from([
                ("index".to_string(), json!(k)),
                ("agents".to_string(), json!(inst.n_agents())),
                ("equilibria".to_string(), json!(sol.equilibria.len())),
                ("limits".to_string(), json!(sol.limits.len())),
                ("rejected".to_string(), json!(sol.rejected)),
                ("lowest_price".to_string(), sol.lowest_price.map(num).unwrap_or(Value::Null)),
                ("highest_price".to_string(), sol.highest_price.map(num).unwrap_or(Value::Null)),
                ("optimum".to_string(), num(opt)),
                ("worst_ratio".to_string(), if sol.equilibria.is_empty() { Value::Null } else { num(worst) }),
            ]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let worst = rows.iter().filter_map(|r| r["worst_ratio"].as_f64()).fold(0.0, f64::max);
    let rejected: u64 = rows.iter().filter_map(|r| r["rejected"].as_u64()).sum();
    let equilibria: u64 = rows.iter().filter_map(|r| r["equilibria"].as_u64()).sum();
    report.check("worst optimum-to-equilibrium ratio", num(worst), "<= 2 + 1e-6", "pure equilibria are 2-approximate", worst <= 2.0 + 1e-6);
    report.check("constructed profiles rejected", rejected, 0, "every constructed profile is an equilibrium", rejected == 0);
    report.result = json!({ "instances": count, "equilibria": equilibria, "worst_ratio": num(worst) });
    report.rows = rows;
    Ok(())
}

fn monotonicity_sweep(p: &mut Params, seed: u64, report: &mut Report) -> CliResult<()> {
    let count = p.usize("count")?;
    let tol = 1e-9;
    let rows = (0..count)
        .into_par_iter()
        .map(|k| -> CliResult<BTreeMap<String, Value>> {
            let mut r = rng(seed.wrapping_add(k as u64));
            let n = r.gen_range(2..=5);
            let m = r.gen_range(1..=4);
            let inst = random_budgeted_instance(&mut r, n, m);
            let msgs: Vec<Message> = (0..n).map(|_| Message::finite(r.gen_range(0.1..2.0), r.gen_range(0.01..1.5))).collect();
            let i = r.gen_range(0..n);
            let delta = r.gen_range(1e-4..1.0);
            let rep = price_monotonicity_check(&inst, &msgs, i, delta)?;
            Ok(BTreeMap::from([
                ("index".to_string(), json!(k)),
                ("agents".to_string(), json!(n)),
                ("items".to_string(), json!(m)),
                ("agent".to_string(), json!(i)),
                ("delta".to_string(), num(delta)),
                ("min_price_delta".to_string(), num(rep.min_price_delta)),
                ("revenue_delta".to_string(), num(rep.revenue_delta)),
                ("price_ok".to_string(), json!(rep.min_price_delta >= -tol)),
                ("revenue_ok".to_string(), json!(rep.revenue_delta >= -tol && rep.revenue_delta <= delta + tol)),
            ]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let bad = |key: &str| rows.iter().filter(|r| r[key] == json!(false)).count();
    let (price_bad, revenue_bad) = (bad("price_ok"), bad("revenue_ok"));
    report.check("price decreases", price_bad, 0, "prices are monotone in budgets", price_bad == 0);
    report.check("revenue increments outside [0, delta]", revenue_bad, 0, "revenue rises by at most the budget increase", revenue_bad == 0);
    report.result = json!({ "perturbations": count, "tolerance": tol });
    report.rows = rows;
    Ok(())
}

fn oracle_agreement(p: &mut Params, seed: u64, report: &mut Report) -> CliResult<()> {
    let count = p.usize("count")?;
    let steps = p.usize("grid")?;
    if steps < 10 {
        return Err(CliError::Input("grid must be at least 10".into()));
    }
    let rows = (0..count)
        .into_par_iter()
        .map(|k| -> CliResult<BTreeMap<String, Value>> {
            let mut r = rng(seed.wrapping_add(k as u64));
            let n = r.gen_range(1..=3);
            let m = r.gen_range(1..=3);
            let agents: Vec<AgentType> = (0..n).map(|_| random_agent(&mut r)).collect();
            let inst = Instance::new(agents, random_ctr(&mut r, n, m, 0.1))?;
            let msgs = random_profile(&mut r, n, 0.2);
            let out = solve_fppe(&inst, &msgs)?;
            let oracle = brute_force_fppe(&inst.ctr, &msgs, steps)?;
            let price_gap = out.prices.iter().zip(&oracle.prices).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let opt = optimal_liquid_welfare(&inst)?.value;
            let grid = brute_force_optimal_welfare(&inst, steps)?.value;
            Ok(BTreeMap::from([
                ("index".to_string(), json!(k)),
                ("agents".to_string(), json!(n)),
                ("items".to_string(), json!(m)),
                ("price_gap".to_string(), num(price_gap)),
                ("welfare".to_string(), num(opt)),
                ("welfare_oracle".to_string(), num(grid)),
                ("welfare_gap".to_string(), num((opt - grid).abs())),
            ]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max = |key: &str| rows.iter().filter_map(|r| r[key].as_f64()).fold(0.0, f64::max);
    let (price_gap, welfare_gap) = (max("price_gap"), max("welfare_gap"));
    report.check_close("largest price gap", price_gap, 0.0, 3.0 / steps as f64, "brute-force equilibrium oracle");
    report.check_close("largest welfare gap", welfare_gap, 0.0, 2e-3, "brute-force welfare oracle");
    report.result = json!({ "instances": count, "grid": steps });
    report.rows = rows;
    Ok(())
}
