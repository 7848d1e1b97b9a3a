use glucopt::config::{ScenarioConfig, BUNDLED};
use glucopt_core::Scenario;

#[test]
fn empty_config_is_the_reference_example() {
    let empty = ScenarioConfig::parse("").unwrap();
    assert_eq!(empty, ScenarioConfig::default());
    assert_eq!(ScenarioConfig::load("example_sec6").unwrap(), empty);
    assert_eq!(empty.scenario().unwrap(), Scenario::example());
}

#[test]
fn bundled_configs_parse_and_round_trip() {
    for (name, _) in BUNDLED {
        let c = ScenarioConfig::load(name).unwrap();
        c.scenario().unwrap();
        assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c, "{name}");
    }
}

#[test]
fn unknown_and_invalid_values_are_rejected() {
    let err = ScenarioConfig::parse("[model]\nsensitivty = 1.0\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("sensitivty"));

    let c = ScenarioConfig::parse("[model]\nmeal_tau = -1.0\n").unwrap();
    assert_eq!(c.scenario().unwrap_err().exit_code(), 2);
    let c = ScenarioConfig::parse("[grid]\ndt = 0.3\nhorizon = 1000.0\n").unwrap();
    assert_eq!(c.scenario().unwrap_err().exit_code(), 2);
}

#[test]
fn no_meal_config_is_steady() {
    let c = ScenarioConfig::load("no_meal").unwrap();
    let sc = c.scenario().unwrap();
    assert!(sc.meals.is_empty());
    assert_eq!(c.scenario.lambda, c.scenario.g_inf);
}
