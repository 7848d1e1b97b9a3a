//! Model constants, insulin schedules, meals and closed-form responses.
//!
//! The state equations are
//!
//! ```text
//! ż = −d·z + d·k·u        (subcutaneous insulin)
//! ẏ = −c·y + c·z          (plasma insulin)
//! ẋ = −a·x + a·b·y        (insulin action)
//! ġ = −h·g + w,  h = x + G,  w = r + E
//! ```
//!
//! where `u` is the insulin input and `r` the glucose appearance from meals.
//! Insulin input is in abstract model input units; glucose in mg/dl and
//! time in minutes.

use alloc::vec::Vec;

use crate::kernel::{cascade, ChainPropagator};
use crate::{Error, Result};

/// Rate and gain constants of the minimal model and the meal subsystem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// `d`, subcutaneous absorption rate (1/min, the inverse of τ₁).
    pub insulin_absorption: f64,
    /// `k`, input gain (inverse of the clearance C_l).
    pub insulin_gain: f64,
    /// `c`, plasma insulin rate (1/min, the inverse of τ₂).
    pub plasma_rate: f64,
    /// `a`, insulin action rate (1/min, p₂).
    pub action_rate: f64,
    /// `b`, insulin sensitivity S_I.
    pub sensitivity: f64,
    /// `G`, glucose effectiveness (1/min).
    pub glucose_effectiveness: f64,
    /// `E`, endogenous glucose production (mg/dl/min).
    pub endogenous_production: f64,
    /// Scale from the gut compartment `f1` to glucose appearance `r`.
    pub meal_gain: f64,
    /// Time constant of both meal compartments (min).
    pub meal_tau: f64,
    /// Transfer rate from `f2` into `f1` (1/min).
    pub meal_coupling: f64,
}

impl ModelParams {
    /// Constants of the reference single-meal example.
    pub fn example() -> Self {
        Self {
            insulin_absorption: 0.0204,
            insulin_gain: 497.5124,
            plasma_rate: 0.0213,
            action_rate: 0.0106,
            sensitivity: 8.11e-4,
            glucose_effectiveness: 0.0032,
            endogenous_production: 1.3,
            meal_gain: 0.0018,
            meal_tau: 47.0,
            meal_coupling: 1.0,
        }
    }

    /// Checks that every constant is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("insulin_absorption", self.insulin_absorption),
            ("insulin_gain", self.insulin_gain),
            ("plasma_rate", self.plasma_rate),
            ("action_rate", self.action_rate),
            ("sensitivity", self.sensitivity),
            ("glucose_effectiveness", self.glucose_effectiveness),
            ("endogenous_production", self.endogenous_production),
            ("meal_gain", self.meal_gain),
            ("meal_tau", self.meal_tau),
            ("meal_coupling", self.meal_coupling),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// `b·k`, the steady insulin action per unit of constant input.
    pub fn steady_gain(&self) -> f64 {
        self.sensitivity * self.insulin_gain
    }

    /// Slowest time constant among the insulin and meal compartments.
    pub fn slowest_time_constant(&self) -> f64 {
        let insulin = 1.0 / self.insulin_absorption.min(self.plasma_rate).min(self.action_rate);
        insulin.max(self.meal_tau)
    }

    /// Equilibrium ceiling `E/G`: glucose level with no insulin action.
    pub fn glucose_ceiling(&self) -> f64 {
        self.endogenous_production / self.glucose_effectiveness
    }
}

/// A bolus held at constant magnitude over `[time, time + duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BolusPulse {
    pub time: f64,
    pub magnitude: f64,
    pub duration: f64,
}

impl BolusPulse {
    pub fn new(time: f64, magnitude: f64, duration: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "delivery_time",
                value: time,
            });
        }
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "magnitude",
                value: magnitude,
            });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration",
                value: duration,
            });
        }
        Ok(Self {
            time,
            magnitude,
            duration,
        })
    }

    pub fn end(&self) -> f64 {
        self.time + self.duration
    }

    /// Closed interval membership.
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.time && t <= self.end()
    }
}

/// Basal rate plus a finite, time-ordered sequence of bolus pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSchedule {
    basal: f64,
    pulses: Vec<BolusPulse>,
}

impl InputSchedule {
    pub fn new(basal: f64, pulses: Vec<BolusPulse>) -> Result<Self> {
        if !(basal.is_finite() && basal >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "basal",
                value: basal,
            });
        }
        if pulses.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidSchedule("delivery times must be strictly increasing"));
        }
        Ok(Self { basal, pulses })
    }

    /// Constant basal input with no bolus.
    pub fn basal_only(basal: f64) -> Result<Self> {
        Self::new(basal, Vec::new())
    }

    pub fn basal(&self) -> f64 {
        self.basal
    }

    pub fn pulses(&self) -> &[BolusPulse] {
        &self.pulses
    }

    /// Returns a copy with one more pulse, keeping delivery times ordered.
    pub fn with_pulse(&self, pulse: BolusPulse) -> Result<Self> {
        let mut pulses = self.pulses.clone();
        let at = pulses.partition_point(|p| p.time < pulse.time);
        pulses.insert(at, pulse);
        Self::new(self.basal, pulses)
    }

    /// `ū + Σ ûᵢ·χ[t′ᵢ, t′ᵢ+τᵢ](t)`, with both pulse edges included.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.basal
            + self
                .pulses
                .iter()
                .filter(|p| p.is_active(t))
                .map(|p| p.magnitude)
                .sum::<f64>()
    }

    /// Insulin action `x(t) = b·k·ū + Σ ûᵢ·Y(t − t′ᵢ)` from the separable
    /// closed form.
    pub fn insulin_action(&self, params: &ModelParams, t: f64) -> f64 {
        basal_response(params, self.basal)
            + self
                .pulses
                .iter()
                .map(|p| p.magnitude * unit_bolus_response(params, p.duration, t - p.time))
                .sum::<f64>()
    }

    /// Latest time at which any pulse is still active.
    pub fn last_event(&self) -> f64 {
        self.pulses.iter().map(BolusPulse::end).fold(0.0, f64::max)
    }
}

/// An instantaneous carbohydrate load entering the second gut compartment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MealImpulse {
    pub time: f64,
    pub magnitude: f64,
}

/// Meal absorption: impulses into `f2`, which drains into `f1`;
/// glucose appearance is `r = meal_gain · f1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MealModel {
    impulses: Vec<MealImpulse>,
}

impl MealModel {
    pub fn new(mut impulses: Vec<MealImpulse>) -> Result<Self> {
        for m in &impulses {
            if !(m.time.is_finite() && m.time >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "meal_time",
                    value: m.time,
                });
            }
            if !(m.magnitude.is_finite() && m.magnitude >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "meal_magnitude",
                    value: m.magnitude,
                });
            }
        }
        impulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { impulses })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(time: f64, magnitude: f64) -> Result<Self> {
        Self::new(alloc::vec![MealImpulse { time, magnitude }])
    }

    pub fn impulses(&self) -> &[MealImpulse] {
        &self.impulses
    }

    pub fn is_empty(&self) -> bool {
        self.impulses.is_empty()
    }

    pub fn last_event(&self) -> f64 {
        self.impulses.iter().map(|m| m.time).fold(0.0, f64::max)
    }

    /// Closed-form glucose appearance `r(t)`.
    pub fn appearance(&self, params: &ModelParams, t: f64) -> f64 {
        let rate = 1.0 / params.meal_tau;
        self.impulses
            .iter()
            .filter(|m| t >= m.time)
            .map(|m| m.magnitude * params.meal_coupling * cascade(&[rate, rate], t - m.time))
            .sum::<f64>()
            * params.meal_gain
    }
}

/// `Y(t_rel)`: insulin action response to a unit input held on `[0, τ]`,
/// starting from rest.
pub fn unit_bolus_response(params: &ModelParams, duration: f64, elapsed: f64) -> f64 {
    if elapsed <= 0.0 {
        return 0.0;
    }
    if elapsed <= duration {
        return ChainPropagator::new(params, elapsed).unit_step()[2];
    }
    let at_end = ChainPropagator::new(params, duration).unit_step();
    ChainPropagator::new(params, elapsed - duration).apply(&at_end, 0.0)[2]
}

/// `x(ū) = b·k·ū`, the action of a constant basal input held since the start.
pub fn basal_response(params: &ModelParams, basal: f64) -> f64 {
    params.steady_gain() * basal
}

/// Basal rate whose steady glucose level is `target`: `ū = (E/g∞ − G)/(k·b)`.
pub fn basal_from_target(params: &ModelParams, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidParameter {
            name: "g_inf",
            value: target,
        });
    }
    let excess = params.endogenous_production / target - params.glucose_effectiveness;
    if excess < 0.0 {
        return Err(Error::NonPositiveBasal {
            target,
            ceiling: params.glucose_ceiling(),
        });
    }
    Ok(excess / params.steady_gain())
}

/// Largest constant basal rate that keeps glucose above `floor` without
/// meals or boluses: `(E − λ·G)/(λ·b·k)`.
pub fn safe_basal_bound(params: &ModelParams, floor: f64) -> Result<f64> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: floor,
        });
    }
    let margin = params.endogenous_production - floor * params.glucose_effectiveness;
    if margin < 0.0 {
        return Err(Error::InfeasibleFloor {
            floor,
            ceiling: params.glucose_ceiling(),
        });
    }
    Ok(margin / (floor * params.steady_gain()))
}

/// Bolus magnitude that makes `t_min` a stationary point at the floor:
/// `Û(λ) = (w(t_min)/λ − G − x(ū, t_min)) / Y(t_min − t′)`.
///
/// `background_action` is the insulin action at `t_min` from everything but
/// the bolus being sized (the basal rate, plus any earlier pulses).
pub fn bolus_upper_bound(
    params: &ModelParams,
    floor: f64,
    t_min: f64,
    delivery: f64,
    duration: f64,
    background_action: f64,
    appearance_at_min: f64,
) -> Result<f64> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: floor,
        });
    }
    let response = unit_bolus_response(params, duration, t_min - delivery);
    if response <= 0.0 {
        return Err(Error::DegenerateResponse {
            elapsed: t_min - delivery,
        });
    }
    Ok((appearance_at_min / floor - params.glucose_effectiveness - background_action) / response)
}
