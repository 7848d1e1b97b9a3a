use glucopt_core::dose::solve_proper_bolus;
use glucopt_core::multipulse::{
    balance_last_delivery, check_interlacing, count_crossings, find_saturating_count, plan_sequential,
    InterlacingRejection, CROSSING_DEAD_BAND,
};
use glucopt_core::{Error, Grid, MealImpulse, MealModel, Scenario};
use proptest::prelude::*;

fn two_meal(second: f64, at: f64) -> Scenario {
    let base = Scenario::example();
    let meals = MealModel::new(vec![
        MealImpulse {
            time: 500.0,
            magnitude: 120.0,
        },
        MealImpulse {
            time: at,
            magnitude: second,
        },
    ])
    .unwrap();
    let grid = Grid::settling(&base.params, at, base.grid.dt).unwrap();
    base.with_meals(meals).with_grid(grid)
}

#[test]
fn single_time_reduces_to_dose_solver() {
    let sc = Scenario::example();
    let plan = plan_sequential(&sc, 10.0, 80.0, &[445.0]).unwrap();
    let sol = solve_proper_bolus(&sc, &sc.basal_schedule(), 445.0, 10.0, 80.0).unwrap();
    assert!((plan.pulses[0].magnitude - sol.magnitude).abs() <= 2.0 * sc.tolerances.solver);
    assert!(plan.proper.passed);
    assert!(!plan.partial);
}

#[test]
fn later_pulse_without_rise_is_skipped() {
    let sc = Scenario::example();
    let plan = plan_sequential(&sc, 10.0, 80.0, &[445.0, 1200.0]).unwrap();
    assert!(!plan.pulses[0].skipped());
    assert!(plan.pulses[1].skipped());
    assert_eq!(plan.pulses[1].magnitude, 0.0);
    assert!(plan.pulses[1].reason().unwrap().contains("g(0)"));
    assert_eq!(plan.schedule.pulses().len(), 1);
}

#[test]
fn duplicated_meal_gets_two_pulses() {
    let sc = two_meal(120.0, 1400.0);
    let plan = plan_sequential(&sc, 10.0, 80.0, &[445.0, 1345.0]).unwrap();
    assert!(plan.pulses.iter().all(|p| p.magnitude > 0.0), "{:?}", plan.pulses);
    assert!(plan.proper.passed, "{:?}", plan.proper);
}

#[test]
fn optimal_single_pulse_plan_interlaces() {
    let sc = Scenario::example();
    let plan = plan_sequential(&sc, 10.0, 80.0, &[444.9]).unwrap();
    let cert = check_interlacing(&plan, 1).unwrap();
    let kinds: Vec<bool> = cert.sequence.iter().map(|e| e.0).collect();
    assert_eq!(kinds, [false, true, false]);

    let early = plan_sequential(&sc, 10.0, 80.0, &[400.0]).unwrap();
    assert!(matches!(
        check_interlacing(&early, 1),
        Err(InterlacingRejection::Count { expected: 3, .. })
    ));
}

#[test]
fn crossing_counts() {
    let sc = Scenario::example().with_grid(Grid::new(0.5, 2400.0).unwrap());
    let a = plan_sequential(&sc, 10.0, 80.0, &[430.0]).unwrap();
    let b = plan_sequential(&sc, 10.0, 80.0, &[460.0]).unwrap();
    let report = count_crossings(&a.trace, &b.trace, 1, CROSSING_DEAD_BAND).unwrap();
    assert!(report.count() >= 1 && report.within_bound(), "{report:?}");
    assert!(report.divergence >= 430.0);
    assert_eq!(
        count_crossings(&a.trace, &a.trace, 1, CROSSING_DEAD_BAND).unwrap_err(),
        Error::IdenticalTraces
    );
}

#[test]
fn balanced_second_pulse_certifies_two_meals() {
    let sc = two_meal(90.0, 1400.0);
    let balanced = balance_last_delivery(&sc, 10.0, 80.0, &[444.9], 1350.0, 1400.0).unwrap();
    let cert = check_interlacing(&balanced.plan, 2).unwrap();
    assert_eq!(cert.sequence.len(), 5);
    assert!(balanced.plan.proper.passed);
}

#[test]
fn saturation_of_single_meal_and_no_meal() {
    let sc = Scenario::example().with_grid(Grid::new(0.5, 2400.0).unwrap());
    let s = find_saturating_count(&sc, 10.0, 80.0, 350.0, 1000.0, 25.0, 3).unwrap();
    assert!(s.saturated);
    assert_eq!(s.count, 1, "{:?}", s.steps);

    let flat = Scenario::example().with_meals(MealModel::none());
    let s = find_saturating_count(&flat, 10.0, 100.0, 350.0, 600.0, 50.0, 3).unwrap();
    assert_eq!(s.count, 1);
    assert!((s.steps[0].gamma - 100.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn certified_two_pulse_plan_is_not_beaten(d1 in -40i32..40, d2 in -60i32..60) {
        prop_assume!(d1 != 0 || d2 != 0);
        let sc = two_meal(90.0, 1400.0);
        let value_tol = sc.tolerances.value;
        let certified = plan_sequential(&sc, 10.0, 80.0, &[444.9, 1362.7]).unwrap();
        prop_assert!(check_interlacing(&certified, 2).is_ok());
        let times = [444.9 + d1 as f64, 1362.7 + d2 as f64];
        let other = plan_sequential(&sc, 10.0, 80.0, &times).unwrap();
        if !other.partial && other.proper.passed {
            prop_assert!(
                other.gamma() >= certified.gamma() - 2.0 * value_tol,
                "{times:?}: {} < {}", other.gamma(), certified.gamma()
            );
        }
    }
}

#[test]
fn two_meals_saturate_at_two_pulses() {
    let sc = two_meal(120.0, 1400.0);
    let sc = sc.with_grid(Grid::new(0.5, 3300.0).unwrap());
    let s = find_saturating_count(&sc, 10.0, 80.0, 350.0, 1500.0, 25.0, 3).unwrap();
    assert!(s.saturated);
    assert_eq!(s.count, 2, "{:?}", s.steps);
    assert!(s.steps[1].gamma < s.steps[0].gamma);
    assert!((s.steps[2].gamma - s.steps[1].gamma).abs() < sc.tolerances.gamma);
}
