//! Proper bolus sizing.
//!
//! A bolus delivered at `t′` is *proper* for the floor `λ` when the glucose
//! response reaches `λ` and never drops below it.  Glucose after `t′` is
//! pointwise decreasing in the bolus magnitude, so the proper magnitude is
//! the boundary between magnitudes whose minimum stays above `λ` and those
//! that undershoot; it is found by bracketing and bisection.

use crate::model::{bolus_upper_bound, unit_bolus_response, BolusPulse, InputSchedule};
use crate::simulate::{GlucoseTrace, Scenario};
use crate::{Error, Result};

/// Result of a proper bolus solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseSolution {
    pub delivery: f64,
    pub duration: f64,
    /// Bolus magnitude `û`.
    pub magnitude: f64,
    /// Time of the minimum over `t ≥ t′` on the returned trace.
    pub t_min: f64,
    /// Glucose at `t_min`.
    pub g_min: f64,
    /// `|g(t_min) − λ|`.
    pub residual: f64,
    pub iterations: u32,
    /// Width of the bisection bracket at exit.
    pub bracket_width: f64,
    /// `Û(λ)` evaluated at `t_min`; equals `û` when `t_min` is a stationary
    /// point at the floor.
    pub bound_check: f64,
    /// The base schedule already touches the floor, so `û = 0`.
    pub degenerate: bool,
    /// Base schedule plus the solved pulse.
    pub schedule: InputSchedule,
    pub trace: GlucoseTrace,
}

/// Solves for the proper magnitude of a pulse at `delivery` lasting
/// `duration`, added on top of `base` (the basal rate and any earlier,
/// fixed pulses).
pub fn solve_proper_bolus(
    scenario: &Scenario,
    base: &InputSchedule,
    delivery: f64,
    duration: f64,
    floor: f64,
) -> Result<DoseSolution> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: floor,
        });
    }
    let tol = scenario.tolerances;
    if tol.solver.is_nan() || tol.solver <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "solver_tol",
            value: tol.solver,
        });
    }
    if base.pulses().last().is_some_and(|p| p.time >= delivery) {
        return Err(Error::InvalidSchedule("the new pulse must follow every fixed pulse"));
    }
    let with =
        |magnitude: f64| -> Result<InputSchedule> { base.with_pulse(BolusPulse::new(delivery, magnitude, duration)?) };
    // Validates grid alignment before any real work.
    let zero = with(0.0)?;
    scenario.grid.index_of(delivery + duration)?;

    let base_trace = scenario.simulate(base)?;
    let level = base_trace.glucose_at(delivery);
    if floor > level + tol.value {
        return Err(Error::InfeasibleLambda { floor, level });
    }
    let base_min = base_trace.min_glucose().min(base_trace.refined_min_from(0.0).1);
    if base_min < floor - tol.value {
        return Err(Error::InfeasibleLambda { floor, level: base_min });
    }
    if base_trace.refined_min_from(delivery).1 <= floor + tol.value {
        return finish(
            scenario, base, zero, base_trace, delivery, duration, floor, 0, 0.0, true,
        );
    }

    // Minimum over t ≥ t′, or None when the bolus drove glucose off the
    // finite range (which certainly undershoots).
    let probe = |magnitude: f64| -> Result<Option<(GlucoseTrace, f64)>> {
        match scenario.simulate(&with(magnitude)?) {
            Ok(trace) => {
                let m = trace.refined_min_from(delivery).1;
                Ok(Some((trace, m)))
            }
            Err(Error::NonFinite { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let undershoots = |probe: &Option<(GlucoseTrace, f64)>| probe.as_ref().map_or(true, |p| p.1 < floor);

    let mut lo = 0.0;
    let mut hi = initial_guess(scenario, base, delivery, duration, floor).max(64.0 * tol.solver);
    let mut iterations = 0u32;
    loop {
        if hi > tol.bolus_cap {
            return Err(Error::BracketFailure { cap: tol.bolus_cap });
        }
        iterations += 1;
        if undershoots(&probe(hi)?) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }

    let mut best: Option<GlucoseTrace> = None;
    while hi - lo > tol.solver {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let p = probe(mid)?;
        if undershoots(&p) {
            hi = mid;
        } else {
            lo = mid;
            best = p.map(|p| p.0);
        }
    }
    let trace = match best {
        Some(t) => t,
        None => scenario.simulate(&with(lo)?)?,
    };
    finish(
        scenario,
        base,
        with(lo)?,
        trace,
        delivery,
        duration,
        floor,
        iterations,
        hi - lo,
        false,
    )
}

/// Steady-state estimate of the magnitude: the bolus that would bring an
/// unperturbed trace to the floor at the peak of the unit response.
fn initial_guess(scenario: &Scenario, base: &InputSchedule, delivery: f64, duration: f64, floor: f64) -> f64 {
    let params = &scenario.params;
    let horizon = 20.0 * params.slowest_time_constant();
    let (mut t_peak, mut y_peak) = (duration, 0.0);
    let samples = 400;
    for i in 1..=samples {
        let s = horizon * i as f64 / samples as f64;
        let y = unit_bolus_response(params, duration, s);
        if y > y_peak {
            (t_peak, y_peak) = (s, y);
        }
    }
    let at = delivery + t_peak;
    let needed = params.endogenous_production / floor - scenario.clearance_at(base, at);
    if y_peak > 0.0 && needed > 0.0 {
        needed / y_peak
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scenario: &Scenario,
    base: &InputSchedule,
    schedule: InputSchedule,
    trace: GlucoseTrace,
    delivery: f64,
    duration: f64,
    floor: f64,
    iterations: u32,
    bracket_width: f64,
    degenerate: bool,
) -> Result<DoseSolution> {
    let magnitude = schedule
        .pulses()
        .iter()
        .find(|p| p.time == delivery)
        .map_or(0.0, |p| p.magnitude);
    let (t_min, g_min) = trace.refined_min_from(delivery);
    let bound_check = if t_min > delivery {
        bolus_upper_bound(
            &scenario.params,
            floor,
            t_min,
            delivery,
            duration,
            base.insulin_action(&scenario.params, t_min),
            scenario.supply_at(t_min),
        )
        .unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    Ok(DoseSolution {
        delivery,
        duration,
        magnitude,
        t_min,
        g_min,
        residual: libm::fabs(g_min - floor),
        iterations,
        bracket_width,
        bound_check,
        degenerate,
        schedule,
        trace,
    })
}

/// Outcome of checking a trace against the proper-input definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperCheck {
    /// The trace never drops more than the tolerance below the floor and
    /// its minimum reaches the floor within the tolerance.
    pub passed: bool,
    /// Depth of the worst dip below the floor (zero when none).
    pub violation: f64,
    pub t_min: f64,
    pub g_min: f64,
}

/// Checks that `trace` attains `floor` and stays at or above it, both
/// within `tol`.
pub fn verify_proper(trace: &GlucoseTrace, floor: f64, tol: f64) -> ProperCheck {
    let (t_min, g_min) = trace.refined_min_from(0.0);
    let violation = (floor - g_min).max(0.0);
    ProperCheck {
        passed: violation <= tol && g_min - floor <= tol,
        violation,
        t_min,
        g_min,
    }
}
