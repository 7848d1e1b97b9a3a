use super::{ExtremaReport, GlucoseTrace, Scenario};
use crate::model::{basal_response, unit_bolus_response, InputSchedule};
use crate::{Error, Result};

/// The peak written through the stationarity conditions at `t_max` and
/// `t_min`: `γ = w(t_max)/h(t_max) = α₁λ/(α₂ + α₃λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDecomposition {
    pub t_max: f64,
    pub t_min: f64,
    /// `α₁ = w(t_max)`.
    pub alpha1: f64,
    /// `α₂ = w(t_min)·Y(t_max)/Y(t_min)`.
    pub alpha2: f64,
    /// `α₃ = (G + x(ū, t_max))·(1 − Y(t_max)/Y(t_min) + x(ū, t_max) − x(ū, t_min))`.
    pub alpha3: f64,
    /// Peak from the α-form, evaluated at the attained floor.
    pub gamma_formula: f64,
    /// `w(t_max)/h(t_max)`.
    pub gamma_ratio: f64,
    /// Peak read off the trace.
    pub gamma_simulated: f64,
}

/// Decomposes the peak of a single-pulse trace whose bolus is sized to the
/// floor attained at the report's global minimum.
pub fn peak_decomposition(
    trace: &GlucoseTrace,
    report: &ExtremaReport,
    scenario: &Scenario,
    schedule: &InputSchedule,
) -> Result<PeakDecomposition> {
    let [pulse] = schedule.pulses() else {
        return Err(Error::InvalidSchedule("peak decomposition needs exactly one pulse"));
    };
    if report.is_constant() || report.max_at_boundary() {
        return Err(Error::NoInteriorMaximum);
    }
    let params = &scenario.params;
    let (t_max, t_min) = (report.t_max_global, report.t_min_global);
    let w_max = scenario.supply_at(t_max);
    let h_max = scenario.clearance_at(schedule, t_max);
    let g_max = trace.glucose_at(t_max);
    let slope = w_max - h_max * g_max;
    if libm::fabs(slope) > scenario.tolerances.slope {
        return Err(Error::NotStationary { time: t_max, slope });
    }
    let y_min = unit_bolus_response(params, pulse.duration, t_min - pulse.time);
    if y_min <= 0.0 {
        return Err(Error::DegenerateResponse {
            elapsed: t_min - pulse.time,
        });
    }
    let ratio = unit_bolus_response(params, pulse.duration, t_max - pulse.time) / y_min;
    // Basal action is time-invariant under the steady initial conditions.
    let basal_at_max = basal_response(params, schedule.basal());
    let basal_at_min = basal_at_max;
    let floor = report.lambda_attained;

    let alpha1 = w_max;
    let alpha2 = scenario.supply_at(t_min) * ratio;
    let alpha3 = (params.glucose_effectiveness + basal_at_max) * (1.0 - ratio + basal_at_max - basal_at_min);
    Ok(PeakDecomposition {
        t_max,
        t_min,
        alpha1,
        alpha2,
        alpha3,
        gamma_formula: alpha1 * floor / (alpha2 + alpha3 * floor),
        gamma_ratio: w_max / h_max,
        gamma_simulated: g_max,
    })
}
