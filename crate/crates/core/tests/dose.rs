use glucopt_core::dose::{solve_proper_bolus, verify_proper};
use glucopt_core::{BolusPulse, Error, MealModel, Scenario, Tolerances};

#[test]
fn higher_floor_needs_smaller_bolus() {
    let sc = Scenario::example();
    let base = sc.basal_schedule();
    let at = |floor| solve_proper_bolus(&sc, &base, 445.0, 10.0, floor).unwrap();
    let (u80, u85) = (at(80.0), at(85.0));
    assert!(u85.magnitude < u80.magnitude);
    assert!((u85.g_min - 85.0).abs() <= sc.tolerances.value);
}

#[test]
fn inflated_bolus_is_not_proper() {
    let sc = Scenario::example();
    let sol = solve_proper_bolus(&sc, &sc.basal_schedule(), 445.0, 10.0, 80.0).unwrap();
    let schedule = sc
        .basal_schedule()
        .with_pulse(BolusPulse::new(445.0, 1.1 * sol.magnitude, 10.0).unwrap())
        .unwrap();
    let check = verify_proper(&sc.simulate(&schedule).unwrap(), 80.0, sc.tolerances.value);
    assert!(!check.passed);
    assert!(check.violation > sc.tolerances.value);

    let shrunk = sc
        .basal_schedule()
        .with_pulse(BolusPulse::new(445.0, 0.9 * sol.magnitude, 10.0).unwrap())
        .unwrap();
    let check = verify_proper(&sc.simulate(&shrunk).unwrap(), 80.0, sc.tolerances.value);
    assert!(!check.passed);
    assert_eq!(check.violation, 0.0);
}

#[test]
fn constant_trace_at_floor_is_proper() {
    let sc = Scenario::example().with_meals(MealModel::none());
    let trace = sc.simulate(&sc.basal_schedule()).unwrap();
    assert!(verify_proper(&trace, 100.0, sc.tolerances.value).passed);
    assert!(!verify_proper(&trace, 80.0, sc.tolerances.value).passed);
}

#[test]
fn solution_matches_bound_at_realized_minimum() {
    let sc = Scenario::example();
    let sol = solve_proper_bolus(&sc, &sc.basal_schedule(), 445.0, 10.0, 80.0).unwrap();
    assert!(
        (sol.magnitude - sol.bound_check).abs() <= 2.0 * sc.tolerances.solver,
        "{} vs {}",
        sol.magnitude,
        sol.bound_check
    );
    assert!(sol.iterations > 0);
}

#[test]
fn small_cap_fails_to_bracket() {
    let sc = Scenario::example().with_tolerances(Tolerances {
        bolus_cap: 0.5,
        ..Tolerances::default()
    });
    let err = solve_proper_bolus(&sc, &sc.basal_schedule(), 445.0, 10.0, 80.0).unwrap_err();
    assert!(matches!(err, Error::BracketFailure { .. }), "{err:?}");
}

#[test]
fn new_pulse_must_follow_fixed_ones() {
    let sc = Scenario::example();
    let base = sc
        .basal_schedule()
        .with_pulse(BolusPulse::new(500.0, 0.5, 10.0).unwrap())
        .unwrap();
    assert!(solve_proper_bolus(&sc, &base, 445.0, 10.0, 80.0).is_err());
}

#[test]
fn bisection_halves_down_to_tolerance() {
    let sc = Scenario::example();
    let tol = sc.tolerances.solver;
    for t_prime in [380.0, 445.0, 500.0] {
        let sol = solve_proper_bolus(&sc, &sc.basal_schedule(), t_prime, 10.0, 80.0).unwrap();
        assert!(
            sol.bracket_width <= tol && sol.bracket_width > tol / 2.0,
            "{}",
            sol.bracket_width
        );
        // Doubling from the initial guess plus halving to `tol`.
        let bound = (2.0 * sol.magnitude.max(1.0) / tol).log2().ceil() as u32 + 16;
        assert!(sol.iterations <= bound, "{} > {bound}", sol.iterations);
    }
}
