use pacing_core::metagame::{
    best_response, best_response_single_item, construct_high_price_eq, construct_low_price_eq, price_intervals,
    solve_pure_nash_single_item, utility_of_profile, verify_pure_nash, EquilibriumKind, MessageSpace,
};
use pacing_core::{AgentType, Error, Instance, Message};

fn two_linear(v1: f64, v2: f64) -> Instance {
    Instance::single_item(vec![AgentType::linear(v1), AgentType::linear(v2)]).unwrap()
}

fn low_price_profile(v1: f64, v2: f64) -> Vec<Message> {
    let share = v1 * v2 / (v1 + v2).powi(2);
    vec![Message::finite(v1, share * v1), Message::finite(v2, share * v2)]
}

#[test]
fn winner_pays_runner_up_value() {
    let inst = two_linear(1.0, 0.7);
    let profile = vec![Message::finite(1.0, 0.7), Message::finite(0.7, 0.7)];
    assert!((utility_of_profile(&inst, &profile, 0).unwrap() - 0.3).abs() < 1e-12);
    let br = best_response_single_item(&inst, &profile, 0, MessageSpace::Full).unwrap();
    assert!((br.message.budget.to_f64() - 0.7).abs() < 1e-6, "{br:?}");
    assert!((br.utility - 0.3).abs() < 1e-9);
    assert!(br.attained);
    assert!(verify_pure_nash(&inst, &profile, 1e-7, MessageSpace::Full).unwrap().is_eps_nash);
}

#[test]
fn proportional_split_is_an_equilibrium_when_values_are_close() {
    let inst = two_linear(1.0, 0.7);
    let profile = low_price_profile(1.0, 0.7);
    let br = best_response(&inst, &profile, 0, MessageSpace::Full).unwrap();
    assert!((br.message.budget.to_f64() - 0.242_214_53).abs() < 1e-6, "{br:?}");
    let br2 = best_response(&inst, &profile, 1, MessageSpace::Full).unwrap();
    assert!((br2.message.budget.to_f64() - 0.169_550_17).abs() < 1e-6, "{br2:?}");
    let report = verify_pure_nash(&inst, &profile, 1e-7, MessageSpace::Full).unwrap();
    assert!(report.is_eps_nash, "{report:?}");
}

#[test]
fn proportional_split_breaks_when_values_are_far_apart() {
    for v2 in [0.6, 0.5] {
        let inst = two_linear(1.0, v2);
        let report = verify_pure_nash(&inst, &low_price_profile(1.0, v2), 1e-7, MessageSpace::Full).unwrap();
        assert!(!report.is_eps_nash);
        assert_eq!(report.worst_agent, 0);
        // Jumping to the opponent's value wins the whole item.
        let dev = &report.agents[0].best;
        assert!((dev.message.budget.to_f64() - v2).abs() < 1e-6, "{dev:?}");
        let stay = 1.0 / (1.0 + v2).powi(2);
        assert!((report.max_gain - ((1.0 - v2) - stay)).abs() < 1e-9);
    }
    let inst = two_linear(1.0, 0.6);
    let report = verify_pure_nash(&inst, &low_price_profile(1.0, 0.6), 1e-7, MessageSpace::Full).unwrap();
    assert!((report.max_gain - 0.009_375).abs() < 1e-9);
}

#[test]
fn vanishing_budget_against_a_silent_opponent_is_not_attained() {
    let inst = two_linear(0.8, 0.5);
    let profile = vec![Message::finite(0.8, 0.4), Message::budget_only(0.0)];
    let br = best_response(&inst, &profile, 0, MessageSpace::Full).unwrap();
    assert!(!br.attained);
    assert!((br.utility - 0.8).abs() < 1e-9);
    assert_eq!(br.message.budget.to_f64(), 0.0);
}

#[test]
fn known_value_space_needs_linear_valuation() {
    let agents = vec![
        AgentType::new(
            pacing_core::ValuationFn::Power { scale: 1.0, exponent: 0.5 },
            pacing_core::MoneyCostFn::Identity,
            pacing_core::ExtNonNeg::Infinite,
        )
        .unwrap(),
        AgentType::linear(1.0),
    ];
    let inst = Instance::single_item(agents).unwrap();
    let profile = vec![Message::budget_only(0.2), Message::budget_only(0.2)];
    let err = best_response(&inst, &profile, 0, MessageSpace::BudgetOnlyKnownValue).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
    assert!(best_response(&inst, &profile, 1, MessageSpace::BudgetOnlyKnownValue).is_ok());
}

#[test]
fn exact_best_response_rejects_several_items() {
    let inst = Instance::new(vec![AgentType::linear(1.0), AgentType::linear(1.0)], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
        .unwrap();
    let profile = vec![Message::budget_only(0.5), Message::budget_only(0.5)];
    assert!(matches!(best_response_single_item(&inst, &profile, 0, MessageSpace::Full), Err(Error::Unsupported(_))));
    assert!(best_response(&inst, &profile, 0, MessageSpace::Full).is_ok());
}

#[test]
fn two_linear_agents_low_interval_is_a_point() {
    let inst = two_linear(1.0, 0.7);
    let iv = price_intervals(&inst).unwrap();
    let low = iv.low.unwrap();
    let high = iv.high.unwrap();
    let point = 0.7 / 1.7;
    assert!((low.lo - point).abs() < 1e-9 && (low.hi - point).abs() < 1e-9);
    assert!((high.lo - point).abs() < 1e-9 && (high.hi - 1.0).abs() < 1e-9);

    let low_eq = construct_low_price_eq(&inst, point).unwrap();
    let gamma = 0.7 / 2.89;
    assert!((low_eq[0].budget.to_f64() - gamma).abs() < 1e-9);
    assert!((low_eq[1].budget.to_f64() - gamma * 0.7).abs() < 1e-9);

    let high_eq = construct_high_price_eq(&inst, 0.7).unwrap().unwrap();
    assert_eq!(high_eq[1], Message::value_only(0.7));
    assert_eq!(high_eq[0], Message::budget_only(0.7));
    assert!(verify_pure_nash(&inst, &high_eq, 1e-6, MessageSpace::Full).unwrap().is_eps_nash);
}

#[test]
fn solver_finds_both_price_levels() {
    let inst = two_linear(1.0, 0.7);
    let sol = solve_pure_nash_single_item(&inst).unwrap();
    assert!(sol.equilibria.iter().any(|e| e.kind == EquilibriumKind::Low && (e.price - 0.7 / 1.7).abs() < 1e-9));
    assert!(sol.equilibria.iter().any(|e| e.kind == EquilibriumKind::High && e.price > 0.5));
    for e in &sol.equilibria {
        assert!(e.max_gain <= 1e-6);
    }
}

#[test]
fn heavily_budgeted_agent_takes_the_item_at_price_one() {
    let k = 100.0;
    let inst = Instance::single_item(vec![AgentType::budgeted(k, 1.0), AgentType::linear(1.0)]).unwrap();
    let sol = solve_pure_nash_single_item(&inst).unwrap();
    assert!(!sol.equilibria.is_empty());
    let iv = sol.intervals;
    assert!((iv.low.unwrap().lo - 100.0 / 101.0).abs() < 1e-6, "{iv:?}");
    assert!((iv.high.unwrap().hi - 1.0).abs() < 1e-9);
    assert!(sol.equilibria.iter().any(|e| (e.price - 1.0).abs() < 1e-9));
}

#[test]
fn single_agent_only_has_a_limit_equilibrium() {
    let inst = Instance::single_item(vec![AgentType::linear(1.0)]).unwrap();
    let sol = solve_pure_nash_single_item(&inst).unwrap();
    assert!(sol.equilibria.is_empty(), "{sol:?}");
    assert_eq!(sol.lowest_price, Some(0.0));
    assert!(sol.intervals.low.unwrap().lo_open);
    assert!(!sol.limits.is_empty());
}
