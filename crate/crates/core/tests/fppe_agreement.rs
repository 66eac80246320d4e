use pacing_core::fppe::{
    brute_force_fppe, price_monotonicity_check, solve_market, verify_fppe, FppeOptions, PathUsed, SolvePath,
};
use pacing_core::sampling::{random_budgeted_instance, random_ctr, random_profile, rng};
use pacing_core::{AgentType, Instance, Message};
use rand::Rng;

#[test]
fn exact_and_iterative_paths_agree() {
    let mut r = rng(21);
    let mut exact = 0;
    for _ in 0..300 {
        let n = r.gen_range(1..=5);
        let m = r.gen_range(2..=5);
        let ctr = random_ctr(&mut r, n, m, 0.2);
        let msgs = random_profile(&mut r, n, 0.15);
        let a = solve_market(&ctr, &msgs, &FppeOptions::default()).unwrap();
        let b = solve_market(&ctr, &msgs, &FppeOptions::default().with_path(SolvePath::Iterative)).unwrap();
        if a.path == PathUsed::Exact {
            exact += 1;
        }
        for (pa, pb) in a.prices.iter().zip(&b.prices) {
            assert!((pa - pb).abs() < 1e-6, "{:?} vs {:?}\n{ctr:?}\n{msgs:?}\n{:?}\n{:?} {}\n{:?}\n{:?}", a.prices, b.prices, a.residuals, b.residuals, b.iterations, a.allocation, b.allocation);
        }
        assert!(a.residuals.normalized_worst() <= 1e-8);
    }
    assert!(exact > 250, "exact path used only {exact} times");
}

#[test]
fn solver_output_passes_verification() {
    let mut r = rng(22);
    for _ in 0..200 {
        let n = r.gen_range(2..=4);
        let m = r.gen_range(1..=4);
        let inst = random_budgeted_instance(&mut r, n, m);
        let msgs: Vec<Message> = inst.agents.iter().map(|a| Message::finite(a.linear_value().unwrap(), a.budget.to_f64())).collect();
        let out = pacing_core::solve_fppe(&inst, &msgs).unwrap();
        let v = verify_fppe(&inst, &msgs, &out.prices, &out.allocation, &out.payments, 1e-8).unwrap();
        assert!(v.passed, "{:?}", v.residuals);
    }
}

#[test]
fn grid_oracle_tracks_the_solver() {
    let mut r = rng(23);
    for _ in 0..25 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(1..=3);
        let ctr = random_ctr(&mut r, n, m, 0.1);
        let msgs = random_profile(&mut r, n, 0.15);
        let a = solve_market(&ctr, &msgs, &FppeOptions::default()).unwrap();
        let o = brute_force_fppe(&ctr, &msgs, 1000).unwrap();
        for (pa, po) in a.prices.iter().zip(&o.prices) {
            assert!((pa - po).abs() <= 3e-3, "{:?} vs {:?}", a.prices, o.prices);
        }
    }
}

#[test]
fn raising_budgets_never_lowers_prices() {
    let mut r = rng(24);
    for _ in 0..200 {
        let n = r.gen_range(2..=4);
        let m = r.gen_range(1..=3);
        let inst = random_budgeted_instance(&mut r, n, m);
        let msgs: Vec<Message> = (0..n).map(|_| Message::finite(r.gen_range(0.1..1.5), r.gen_range(0.05..1.0))).collect();
        let i = r.gen_range(0..n);
        let delta = r.gen_range(0.001..0.5);
        let rep = price_monotonicity_check(&inst, &msgs, i, delta).unwrap();
        assert!(rep.min_price_delta >= -1e-9, "{rep:?}");
        assert!(rep.revenue_delta >= -1e-9 && rep.revenue_delta <= delta + 1e-9, "{rep:?}");
    }
}

#[test]
fn infinite_budget_cannot_be_raised() {
    let inst = Instance::single_item(vec![AgentType::linear(1.0)]).unwrap();
    assert!(price_monotonicity_check(&inst, &[Message::value_only(1.0)], 0, 0.1).is_err());
}
