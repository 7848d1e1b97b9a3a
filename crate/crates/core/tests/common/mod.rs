#![allow(dead_code)]

use glucopt_core::{Grid, MealModel, ModelParams, Scenario};
use proptest::prelude::*;

/// Reference constants with every rate and gain scaled by a factor in
/// `[0.6, 1.6]`.
pub fn params() -> impl Strategy<Value = ModelParams> {
    prop::array::uniform8(0.6f64..1.6).prop_map(|f| {
        let p = ModelParams::example();
        ModelParams {
            insulin_absorption: p.insulin_absorption * f[0],
            insulin_gain: p.insulin_gain * f[1],
            plasma_rate: p.plasma_rate * f[2],
            action_rate: p.action_rate * f[3],
            sensitivity: p.sensitivity * f[4],
            glucose_effectiveness: p.glucose_effectiveness * f[5],
            endogenous_production: p.endogenous_production * f[6],
            meal_tau: p.meal_tau * f[7],
            ..p
        }
    })
}

/// Single-meal scenario on a 0.5 min grid, long enough to settle.
pub fn scenario(params: ModelParams, meal_time: f64, meal: f64, dt: f64) -> Scenario {
    let meals = MealModel::single(meal_time, meal).unwrap();
    let grid = Grid::settling(&params, meal_time, dt).unwrap();
    Scenario::new(params, meals, 100.0, grid).unwrap()
}

/// Classical RK4 on the full `(z, y, x)` chain from rest with a unit input
/// on `[0, duration]`; returns `x(t)`.  Steps are aligned with the input
/// edge.
pub fn chain_oracle(p: &ModelParams, duration: f64, t: f64, steps_per_min: usize) -> f64 {
    let f = |s: [f64; 3], u: f64| {
        [
            -p.insulin_absorption * s[0] + p.insulin_absorption * p.insulin_gain * u,
            -p.plasma_rate * s[1] + p.plasma_rate * s[0],
            -p.action_rate * s[2] + p.action_rate * p.sensitivity * s[1],
        ]
    };
    let mut s = [0.0; 3];
    let run = |s: &mut [f64; 3], span: f64, u: f64| {
        let n = (span * steps_per_min as f64).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let add = |a: [f64; 3], b: [f64; 3], k: f64| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
            let k1 = f(*s, u);
            let k2 = f(add(*s, k1, h / 2.0), u);
            let k3 = f(add(*s, k2, h / 2.0), u);
            let k4 = f(add(*s, k3, h), u);
            for i in 0..3 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    };
    if t <= 0.0 {
        return 0.0;
    }
    run(&mut s, t.min(duration), 1.0);
    if t > duration {
        run(&mut s, t - duration, 0.0);
    }
    s[2]
}
