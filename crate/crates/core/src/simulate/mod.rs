//! Fixed-step simulation of the glucose equation.
//!
//! The insulin chain and the meal compartments are linear, so they advance
//! by their exact propagators; only `ġ = −h·g + w` is integrated, with
//! classical RK4 using the exact `h` and `w` at the stage times.  Pulse
//! edges and meal impulses must sit on the grid, which keeps the input
//! constant over every step.

mod envelope;
mod extrema;
mod peak;
mod trace;

pub use envelope::{envelope_bounds, BoundsEstimate};
pub use extrema::{detect_extrema, ExtremaReport, Extremum};
pub use peak::{peak_decomposition, PeakDecomposition};
pub use trace::GlucoseTrace;

use alloc::vec;

use crate::kernel::{ChainPropagator, MealPropagator};
use crate::math::{ceil, round};
use crate::model::{basal_from_target, basal_response, InputSchedule, MealModel, ModelParams};
use crate::{Error, Result};

/// Event times may miss the grid by at most this much (min, scaled up for
/// large times).
const ALIGN_TOL: f64 = 1e-9;

/// Uniform time grid `0, Δt, 2Δt, …, horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dt: f64,
    pub horizon: f64,
}

impl Grid {
    pub const DEFAULT_DT: f64 = 0.1;

    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", value: dt });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: horizon,
            });
        }
        let grid = Self { dt, horizon };
        grid.index_of(horizon)?;
        Ok(grid)
    }

    /// Horizon long enough for every transient to settle: the last event
    /// plus twenty of the slowest time constants, rounded up to the grid.
    pub fn settling(params: &ModelParams, last_event: f64, dt: f64) -> Result<Self> {
        let raw = last_event + 20.0 * params.slowest_time_constant();
        Self::new(dt, ceil(raw / dt - ALIGN_TOL) * dt)
    }

    /// Number of steps.
    pub fn steps(&self) -> usize {
        round(self.horizon / self.dt) as usize
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Grid index of `t`, or an error when `t` is off the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = round(t / self.dt);
        if k < 0.0 || libm::fabs(k * self.dt - t) > ALIGN_TOL * t.abs().max(1.0) {
            return Err(Error::GridMisalignment { time: t, dt: self.dt });
        }
        Ok(k as usize)
    }

    /// Snaps `t` to the nearest grid point.
    pub fn snap(&self, t: f64) -> f64 {
        round(t / self.dt) * self.dt
    }
}

/// Numerical tolerances shared by extrema detection, solvers and certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Glucose values closer than this are treated as equal (mg/dl).
    pub value: f64,
    /// Slopes below this count as stationary (mg/dl/min).
    pub slope: f64,
    /// Bisection width at which the bolus solver stops (input units).
    pub solver: f64,
    /// Upper limit for the bolus bracket search (input units).
    pub bolus_cap: f64,
    /// Peak difference at which adding pulses stops helping (mg/dl).
    pub gamma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            value: 0.05,
            slope: 1e-4,
            solver: 1e-8,
            bolus_cap: 1e4,
            gamma: 0.5,
        }
    }
}

/// Everything a simulation needs besides the insulin schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub meals: MealModel,
    /// Basal rate `ū`.
    pub basal: f64,
    /// `g(0)`, which is also the steady level the basal rate was set for.
    pub initial_glucose: f64,
    pub grid: Grid,
    pub tolerances: Tolerances,
}

impl Scenario {
    /// Scenario whose basal rate holds glucose at `steady_glucose`, which is
    /// also the starting level.
    pub fn new(params: ModelParams, meals: MealModel, steady_glucose: f64, grid: Grid) -> Result<Self> {
        params.validate()?;
        let basal = basal_from_target(&params, steady_glucose)?;
        Ok(Self {
            params,
            meals,
            basal,
            initial_glucose: steady_glucose,
            grid,
            tolerances: Tolerances::default(),
        })
    }

    /// The reference single-meal example: an impulse of 120 at t = 500,
    /// steady glucose 100 mg/dl, step 0.1 min.
    pub fn example() -> Self {
        let params = ModelParams::example();
        let meals = MealModel::single(500.0, 120.0).expect("valid meal");
        let grid = Grid::settling(&params, meals.last_event(), Grid::DEFAULT_DT).expect("valid grid");
        Self::new(params, meals, 100.0, grid).expect("valid example")
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_meals(mut self, meals: MealModel) -> Self {
        self.meals = meals;
        self
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn basal_schedule(&self) -> InputSchedule {
        InputSchedule::basal_only(self.basal).expect("basal is validated")
    }

    pub fn simulate(&self, schedule: &InputSchedule) -> Result<GlucoseTrace> {
        simulate(&self.params, schedule, &self.meals, self.initial_glucose, self.grid)
    }

    /// `w(t) = E + r(t)` from the closed-form meal response.
    pub fn supply_at(&self, t: f64) -> f64 {
        self.params.endogenous_production + self.meals.appearance(&self.params, t)
    }

    /// `h(t) = G + x(t)` from the closed-form insulin response.
    pub fn clearance_at(&self, schedule: &InputSchedule, t: f64) -> f64 {
        self.params.glucose_effectiveness + schedule.insulin_action(&self.params, t)
    }
}

/// Integrates the model over `grid` from the steady basal state with
/// `g(0) = initial_glucose`.
pub fn simulate(
    params: &ModelParams,
    schedule: &InputSchedule,
    meals: &MealModel,
    initial_glucose: f64,
    grid: Grid,
) -> Result<GlucoseTrace> {
    params.validate()?;
    if !(initial_glucose.is_finite() && initial_glucose > 0.0) {
        return Err(Error::InvalidParameter {
            name: "initial_glucose",
            value: initial_glucose,
        });
    }
    let steps = grid.steps();
    let dt = grid.dt;

    // Input on each step (t_i, t_i+1) and per-node meal jumps.
    let mut step_input = vec![schedule.basal(); steps];
    for pulse in schedule.pulses() {
        let start = grid.index_of(pulse.time)?;
        let end = grid.index_of(pulse.end())?;
        for u in step_input.iter_mut().take(end.min(steps)).skip(start) {
            *u += pulse.magnitude;
        }
    }
    let mut meal_jump = vec![0.0; steps + 1];
    for meal in meals.impulses() {
        let at = grid.index_of(meal.time)?;
        if at <= steps {
            meal_jump[at] += meal.magnitude;
        }
    }

    let half_chain = ChainPropagator::new(params, 0.5 * dt);
    let full_chain = ChainPropagator::new(params, dt);
    let half_meal = MealPropagator::new(params, 0.5 * dt);
    let full_meal = MealPropagator::new(params, dt);
    let g_eff = params.glucose_effectiveness;
    let e = params.endogenous_production;
    let gain = params.meal_gain;

    let u0 = schedule.basal();
    let mut chain = [
        params.insulin_gain * u0,
        params.insulin_gain * u0,
        basal_response(params, u0),
    ];
    let mut meal = [0.0, 0.0];
    let mut g = initial_glucose;

    let mut trace = GlucoseTrace::with_capacity(dt, steps + 1);
    for i in 0..=steps {
        meal[1] += meal_jump[i];
        let t = grid.time(i);
        let h0 = chain[2] + g_eff;
        let w0 = gain * meal[0] + e;
        trace.push(t, g, chain[2], h0, w0, schedule.evaluate(t));
        if i == steps {
            break;
        }

        let u = step_input[i];
        let chain_mid = half_chain.apply(&chain, u);
        let meal_mid = half_meal.apply(&meal);
        let chain_end = full_chain.apply(&chain, u);
        let meal_end = full_meal.apply(&meal);
        let hm = chain_mid[2] + g_eff;
        let wm = gain * meal_mid[0] + e;
        let h1 = chain_end[2] + g_eff;
        let w1 = gain * meal_end[0] + e;

        let k1 = w0 - h0 * g;
        let k2 = wm - hm * (g + 0.5 * dt * k1);
        let k3 = wm - hm * (g + 0.5 * dt * k2);
        let k4 = w1 - h1 * (g + dt * k3);
        g += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !g.is_finite() {
            return Err(Error::NonFinite { time: grid.time(i + 1) });
        }
        chain = chain_end;
        meal = meal_end;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{unit_bolus_response, BolusPulse};

    #[test]
    fn grid_alignment() {
        let grid = Grid::new(0.1, 2000.0).unwrap();
        assert_eq!(grid.steps(), 20000);
        assert_eq!(grid.index_of(445.0).unwrap(), 4450);
        assert!(matches!(grid.index_of(445.03), Err(Error::GridMisalignment { .. })));
        assert!(Grid::new(0.3, 1000.0).is_err());
        let settle = Grid::settling(&ModelParams::example(), 500.0, 0.1).unwrap();
        assert!(settle.horizon >= 500.0 + 20.0 / 0.0106);
    }

    #[test]
    fn steady_state_is_flat() {
        let sc = Scenario::example().with_meals(MealModel::none());
        let trace = sc.simulate(&sc.basal_schedule()).unwrap();
        let worst = trace.glucose().iter().map(|g| (g - 100.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn off_grid_pulse_is_rejected() {
        let sc = Scenario::example();
        let schedule = sc
            .basal_schedule()
            .with_pulse(BolusPulse::new(445.05, 1.0, 10.0).unwrap())
            .unwrap();
        assert!(matches!(sc.simulate(&schedule), Err(Error::GridMisalignment { .. })));
    }

    #[test]
    fn runaway_bolus_is_non_finite() {
        let sc = Scenario::example();
        let schedule = sc
            .basal_schedule()
            .with_pulse(BolusPulse::new(100.0, 1e9, 10.0).unwrap())
            .unwrap();
        assert!(matches!(sc.simulate(&schedule), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn simulated_action_matches_closed_form() {
        let sc = Scenario::example();
        let schedule = sc
            .basal_schedule()
            .with_pulse(BolusPulse::new(445.0, 1.2, 10.0).unwrap())
            .unwrap();
        let trace = sc.simulate(&schedule).unwrap();
        let x_bar = basal_response(&sc.params, sc.basal);
        for (i, &t) in trace.times().iter().enumerate() {
            let closed = x_bar + 1.2 * unit_bolus_response(&sc.params, 10.0, t - 445.0);
            assert!((trace.insulin_action()[i] - closed).abs() < 1e-12, "t = {t}");
            let w = sc.supply_at(t);
            assert!((trace.supply()[i] - w).abs() < 1e-12, "t = {t}");
        }
    }
}
