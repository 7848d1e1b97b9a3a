use glucopt_core::optimize::{
    evaluate_delivery, find_optimal_time, seesaw_curve, sweep_delivery_times, CertificateKind, Rejection, Side,
};
use glucopt_core::simulate::peak_decomposition;
use glucopt_core::Scenario;

#[test]
fn optimal_time_reproduces_reference_example() {
    let sc = Scenario::example();
    let opt = find_optimal_time(&sc, 10.0, 80.0, 400.0, 490.0).unwrap();
    assert!((440.0..=450.0).contains(&opt.t_prime), "t′ = {}", opt.t_prime);
    assert_eq!(opt.certificate.kind, CertificateKind::MaxBetweenMinima);

    let r = &opt.evaluation.report;
    let minima: Vec<_> = r.minima_touching(80.0, 0.5).collect();
    assert_eq!(minima.len(), 2, "{r:?}");
    assert!((minima[0].time - 500.0).abs() <= 10.0);
    assert!((minima[1].time - 800.0).abs() <= 10.0);
    let maxima: Vec<_> = r.global_maxima().collect();
    assert_eq!(maxima.len(), 1);
    assert!((maxima[0].time - 574.0).abs() <= 10.0);
    let w = &opt.certificate.witness_times;
    assert!(w[0] < w[1] && w[1] < w[2]);
}

#[test]
fn late_and_early_deliveries_are_rejected_on_opposite_sides() {
    let sc = Scenario::example();
    let early = evaluate_delivery(&sc, 400.0, 10.0, 80.0).unwrap();
    let msg = early.certificate.clone().unwrap_err().to_string();
    assert!(msg.starts_with("unbalanced maxima"), "{msg}");
    assert!(matches!(
        early.certificate,
        Err(Rejection::UnbalancedMaxima {
            heavier: Side::Right,
            ..
        })
    ));

    let late = evaluate_delivery(&sc, 505.0, 10.0, 80.0).unwrap();
    assert!(late.balance > 0.0);
    assert!(late.certificate.is_err());
}

#[test]
fn sweep_agrees_with_certified_optimum() {
    let sc = Scenario::example();
    let sweep = sweep_delivery_times(&sc, 10.0, 80.0, 350.0, 520.0, 5.0).unwrap();
    assert_eq!(sweep.entries.len(), 35);
    let opt = find_optimal_time(&sc, 10.0, 80.0, 400.0, 490.0).unwrap();
    let gamma = opt.evaluation.report.gamma;
    let t_opt = sweep.t_opt.unwrap();
    assert!((t_opt - opt.t_prime).abs() <= 5.0, "{t_opt} vs {}", opt.t_prime);
    for (t, p) in sweep.feasible() {
        assert!(
            gamma <= p.gamma + 2.0 * sc.tolerances.value,
            "t′ = {t}: {} < {gamma}",
            p.gamma
        );
    }

    // Balance is monotone over the bracket.
    let balances: Vec<f64> = (0..=18)
        .map(|i| {
            evaluate_delivery(&sc, 400.0 + 5.0 * i as f64, 10.0, 80.0)
                .unwrap()
                .balance
        })
        .collect();
    assert!(balances.windows(2).all(|w| w[1] >= w[0]), "{balances:?}");
    assert!(balances[0] < 0.0 && balances[18] > 0.0);
}

#[test]
fn finer_sweep_near_the_optimum_is_consistent() {
    let sc = Scenario::example();
    let coarse = sweep_delivery_times(&sc, 10.0, 80.0, 430.0, 460.0, 5.0).unwrap();
    let fine = sweep_delivery_times(&sc, 10.0, 80.0, 435.0, 455.0, 1.0).unwrap();
    assert!((coarse.t_opt.unwrap() - fine.t_opt.unwrap()).abs() <= 5.0);
    assert!(fine.gamma_opt.unwrap() <= coarse.gamma_opt.unwrap() + 1e-12);
}

#[test]
fn peak_follows_seesaw_in_floor() {
    let sc = Scenario::example();
    let points = seesaw_curve(&sc, 445.0, 10.0, &[70.0, 75.0, 80.0, 85.0, 90.0]).unwrap();
    assert!(points.windows(2).all(|w| w[1].gamma > w[0].gamma));
    assert!(points.windows(2).all(|w| w[1].magnitude < w[0].magnitude));
}

#[test]
fn optimal_peak_matches_stationary_forms() {
    let sc = Scenario::example();
    let opt = find_optimal_time(&sc, 10.0, 80.0, 400.0, 490.0).unwrap();
    let sol = &opt.evaluation.solution;
    let grid = glucopt_core::Grid::new(opt.dt, sc.grid.horizon).unwrap();
    let sc = sc.with_grid(grid);
    let peak = peak_decomposition(&sol.trace, &opt.evaluation.report, &sc, &sol.schedule).unwrap();
    let tol = 2.0 * sc.tolerances.value;
    assert!((peak.gamma_ratio - peak.gamma_simulated).abs() <= tol, "{peak:?}");
    assert!((peak.gamma_formula - peak.gamma_simulated).abs() <= tol, "{peak:?}");
}
