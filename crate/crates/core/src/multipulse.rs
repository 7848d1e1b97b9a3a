//! Sequential multi-pulse plans.
//!
//! Pulse magnitudes are fixed one at a time in delivery order: pulse `i` is
//! sized as a proper bolus on top of pulses `0..i`, ignoring later ones.
//! A pulse after the first is only given insulin when glucose still rises
//! above its starting level somewhere after its delivery time.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dose::{solve_proper_bolus, verify_proper, DoseSolution, ProperCheck};
use crate::model::InputSchedule;
use crate::simulate::{detect_extrema, ExtremaReport, GlucoseTrace, Scenario};
use crate::{Error, Result};

/// Glucose differences within this band carry no sign when counting
/// crossings (mg/dl).
pub const CROSSING_DEAD_BAND: f64 = 1e-7;

/// How one delivery time of a plan was resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseOutcome {
    Solved(Box<DoseSolution>),
    /// Left at zero by the sequential rule.
    Skipped(String),
    /// The magnitude solve failed; the pulse is left at zero.
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPulse {
    pub t_prime: f64,
    pub magnitude: f64,
    pub outcome: PulseOutcome,
}

impl PlannedPulse {
    pub fn skipped(&self) -> bool {
        !matches!(self.outcome, PulseOutcome::Solved(_))
    }

    /// Why the pulse carries no insulin, if it does not.
    pub fn reason(&self) -> Option<String> {
        match &self.outcome {
            PulseOutcome::Solved(_) => None,
            PulseOutcome::Skipped(r) => Some(r.clone()),
            PulseOutcome::Failed(e) => Some(alloc::format!("{e}")),
        }
    }
}

/// A simulated sequential plan with its extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPulsePlan {
    pub floor: f64,
    pub duration: f64,
    /// Glucose tolerance used for global extrema and the floor.
    pub value_tol: f64,
    pub pulses: Vec<PlannedPulse>,
    /// Basal rate plus every nonzero pulse.
    pub schedule: InputSchedule,
    pub trace: GlucoseTrace,
    pub extrema: ExtremaReport,
    pub proper: ProperCheck,
    /// Global minima at the floor plus global maxima.
    pub global_count: usize,
    pub interlacing_ok: bool,
    /// Some pulse solve failed.
    pub partial: bool,
}

impl MultiPulsePlan {
    pub fn gamma(&self) -> f64 {
        self.extrema.gamma
    }
}

/// Builds a plan for `times` (strictly increasing).
pub fn plan_sequential(scenario: &Scenario, duration: f64, floor: f64, times: &[f64]) -> Result<MultiPulsePlan> {
    if times.is_empty() {
        return Err(Error::NoDeliveryTimes);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule("delivery times must be strictly increasing"));
    }
    let tol = scenario.tolerances;
    let mut schedule = scenario.basal_schedule();
    let mut pulses = Vec::with_capacity(times.len());
    let mut partial = false;
    for (i, &t_prime) in times.iter().enumerate() {
        let rises = i == 0 || {
            let trace = scenario.simulate(&schedule)?;
            let from = trace.index_at_or_after(t_prime);
            trace.glucose()[from..]
                .iter()
                .any(|&g| g > scenario.initial_glucose + tol.value)
        };
        let outcome = if !rises {
            PulseOutcome::Skipped(String::from("glucose stays at or below g(0) after delivery"))
        } else {
            match solve_proper_bolus(scenario, &schedule, t_prime, duration, floor) {
                Ok(sol) => {
                    schedule = sol.schedule.clone();
                    PulseOutcome::Solved(Box::new(sol))
                }
                Err(e) => {
                    partial = true;
                    PulseOutcome::Failed(e)
                }
            }
        };
        let magnitude = match &outcome {
            PulseOutcome::Solved(s) => s.magnitude,
            _ => 0.0,
        };
        pulses.push(PlannedPulse {
            t_prime,
            magnitude,
            outcome,
        });
    }
    // Zero-magnitude pulses (degenerate solves) stay out of the schedule.
    let nonzero = schedule
        .pulses()
        .iter()
        .copied()
        .filter(|p| p.magnitude > 0.0)
        .collect();
    let schedule = InputSchedule::new(schedule.basal(), nonzero)?;
    let trace = scenario.simulate(&schedule)?;
    let extrema = detect_extrema(&trace, &tol);
    let proper = verify_proper(&trace, floor, tol.value);
    let sequence = global_sequence(&extrema, floor, tol.value);
    Ok(MultiPulsePlan {
        floor,
        duration,
        value_tol: tol.value,
        pulses,
        schedule,
        global_count: sequence.len(),
        interlacing_ok: alternates(&sequence),
        trace,
        extrema,
        proper,
        partial,
    })
}

/// Global maxima and floor-touching minima in time order, tagged `true` for
/// maxima.
fn global_sequence(report: &ExtremaReport, floor: f64, tol: f64) -> Vec<(bool, f64)> {
    if report.is_constant() {
        return Vec::new();
    }
    let mut seq: Vec<(bool, f64)> = report
        .minima_touching(floor, tol)
        .map(|e| (false, e.time))
        .chain(report.global_maxima().map(|e| (true, e.time)))
        .collect();
    seq.sort_by(|a, b| a.1.total_cmp(&b.1));
    seq
}

fn alternates(seq: &[(bool, f64)]) -> bool {
    seq.windows(2).all(|w| w[0].0 != w[1].0 && w[0].1 < w[1].1)
}

/// A plan whose global extrema certify optimality among plans with the
/// same number of pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct InterlacingCertificate {
    /// Global extrema in time order, tagged `true` for maxima.
    pub sequence: Vec<(bool, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterlacingRejection {
    /// The trace is constant or never reaches the floor.
    Degenerate,
    /// Fewer or more than `2N + 1` global extrema.
    Count { found: usize, expected: usize },
    /// The right number, but not strictly alternating.
    Order,
}

impl fmt::Display for InterlacingRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterlacingRejection::Degenerate => f.write_str("degenerate trace: no floor touch or constant glucose"),
            InterlacingRejection::Count { found, expected } => {
                write!(f, "found {found} global extrema, need {expected}")
            }
            InterlacingRejection::Order => f.write_str("global extrema do not alternate"),
        }
    }
}

/// Checks for exactly `2N + 1` strictly alternating global extrema
/// (minima counted only where they touch the floor).
pub fn check_interlacing(
    plan: &MultiPulsePlan,
    pulses: usize,
) -> core::result::Result<InterlacingCertificate, InterlacingRejection> {
    let sequence = global_sequence(&plan.extrema, plan.floor, plan.value_tol);
    if sequence.is_empty() || !sequence.iter().any(|e| !e.0) {
        return Err(InterlacingRejection::Degenerate);
    }
    let expected = 2 * pulses + 1;
    if sequence.len() != expected {
        return Err(InterlacingRejection::Count {
            found: sequence.len(),
            expected,
        });
    }
    if !alternates(&sequence) {
        return Err(InterlacingRejection::Order);
    }
    Ok(InterlacingCertificate { sequence })
}

/// Plan whose last delivery time was tuned so the peak after it matches
/// the peak before it.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedPlan {
    pub plan: MultiPulsePlan,
    pub times: Vec<f64>,
    /// Step of the grid the plan was computed on.
    pub dt: f64,
}

/// Appends one delivery time in `[lo, hi]` to `fixed` and bisects it on the
/// sign of `max_{t>t′} g − max_{t<t′} g` until the plan interlaces with
/// `2N + 1` global extrema.  The grid step is halved up to
/// [`MAX_REFINEMENTS`](crate::optimize::MAX_REFINEMENTS) times when
/// adjacent grid times both fail.
pub fn balance_last_delivery(
    scenario: &Scenario,
    duration: f64,
    floor: f64,
    fixed: &[f64],
    lo: f64,
    hi: f64,
) -> Result<BalancedPlan> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || fixed.last().is_some_and(|&t| t >= lo) {
        return Err(Error::InvalidParameter {
            name: "bracket",
            value: lo,
        });
    }
    let pulses = fixed.len() + 1;
    let mut sc = scenario.clone();
    let mut dt = sc.grid.dt;
    let mut k_lo = libm::ceil(lo / dt - 1e-9) as u64;
    let mut k_hi = libm::floor(hi / dt + 1e-9) as u64;
    if k_lo >= k_hi {
        return Err(Error::NoBracket { lo, hi });
    }
    let eval = |sc: &Scenario, k: u64, dt: f64| -> Result<(Vec<f64>, MultiPulsePlan, f64)> {
        let t = k as f64 * dt;
        let mut times = fixed.to_vec();
        times.push(t);
        let plan = plan_sequential(sc, duration, floor, &times)?;
        let g = plan.trace.glucose();
        let split = plan.trace.index_at_or_after(t);
        let before = g[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let after = g[split..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((times, plan, after - before))
    };
    let accept = |(times, plan, _): (Vec<f64>, MultiPulsePlan, f64), dt: f64| -> Option<BalancedPlan> {
        (!plan.partial && check_interlacing(&plan, pulses).is_ok()).then_some(BalancedPlan { plan, times, dt })
    };

    let a = eval(&sc, k_lo, dt)?;
    let sign_lo = a.2 > 0.0;
    if let Some(done) = accept(a, dt) {
        return Ok(done);
    }
    let b = eval(&sc, k_hi, dt)?;
    if sign_lo == (b.2 > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    if let Some(done) = accept(b, dt) {
        return Ok(done);
    }
    let mut refinements = 0;
    loop {
        while k_hi - k_lo > 1 {
            let k = k_lo + (k_hi - k_lo) / 2;
            let e = eval(&sc, k, dt)?;
            let positive = e.2 > 0.0;
            if let Some(done) = accept(e, dt) {
                return Ok(done);
            }
            if positive == sign_lo {
                k_lo = k;
            } else {
                k_hi = k;
            }
        }
        if refinements == crate::optimize::MAX_REFINEMENTS {
            return Err(Error::Uncertified {
                lo: k_lo as f64 * dt,
                hi: k_hi as f64 * dt,
            });
        }
        refinements += 1;
        dt *= 0.5;
        sc.grid = crate::simulate::Grid::new(dt, sc.grid.horizon)?;
        k_lo *= 2;
        k_hi *= 2;
    }
}

/// Intersections of two glucose traces after they first diverge.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    /// First time the traces differ by more than the dead band.
    pub divergence: f64,
    /// Times at which the difference changes sign or touches zero.
    pub times: Vec<f64>,
    /// `2N`.
    pub bound: usize,
}

impl CrossingReport {
    pub fn count(&self) -> usize {
        self.times.len()
    }

    pub fn within_bound(&self) -> bool {
        self.count() <= self.bound
    }
}

/// Counts intersections of `a` and `b` after their divergence time, for
/// comparison against the bound `2N`.
///
/// Differences within `dead_band` have no sign.  Leaving such a band with
/// the opposite sign is a crossing; leaving it with the same sign is a
/// touch.  Both count once.  A band still open at the end of the trace is
/// not counted.
pub fn count_crossings(a: &GlucoseTrace, b: &GlucoseTrace, pulses: usize, dead_band: f64) -> Result<CrossingReport> {
    if a.len() != b.len() || a.dt() != b.dt() {
        return Err(Error::GridMismatch);
    }
    let diff: Vec<f64> = a.glucose().iter().zip(b.glucose()).map(|(x, y)| x - y).collect();
    let sign = |d: f64| -> i8 {
        if d > dead_band {
            1
        } else if d < -dead_band {
            -1
        } else {
            0
        }
    };
    let start = diff.iter().position(|&d| sign(d) != 0).ok_or(Error::IdenticalTraces)?;
    let times_of = a.times();
    let mut times = Vec::new();
    let mut last = sign(diff[start]);
    let mut band_start: Option<usize> = None;
    for i in start + 1..diff.len() {
        let s = sign(diff[i]);
        if s == 0 {
            band_start.get_or_insert(i);
            continue;
        }
        if let Some(j) = band_start.take() {
            // Report the point of smallest difference within the band.
            let k = (j..i)
                .min_by(|&p, &q| libm::fabs(diff[p]).total_cmp(&libm::fabs(diff[q])))
                .unwrap_or(j);
            times.push(times_of[k]);
        } else if s != last {
            let (d0, d1) = (diff[i - 1], diff[i]);
            times.push(times_of[i - 1] + a.dt() * d0 / (d0 - d1));
        }
        last = s;
    }
    Ok(CrossingReport {
        divergence: times_of[start],
        times,
        bound: 2 * pulses,
    })
}

/// Peak reached with one more pulse than the previous entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationStep {
    pub pulses: usize,
    pub times: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Saturation {
    /// First `N` whose peak is within the tolerance of the `N + 1` peak
    /// (or `N_max` when that never happened).
    pub count: usize,
    pub saturated: bool,
    pub steps: Vec<SaturationStep>,
}

/// Probes how many pulses stop lowering the peak.
///
/// Delivery times are placed greedily: for each `N`, every candidate time
/// on `lo, lo + step, …, hi` is added in turn to the best `N − 1` set, and
/// the best plan is kept; the added time is then refined around the winner
/// with steps shrinking by five down to the grid step.  Plans compare by
/// their local maxima, highest first; global peaks within the peak
/// tolerance tie and lower peaks within the glucose tolerance tie, so a
/// peak that one more pulse cannot lower does not hide progress on the
/// others.  Plans that are partial or not proper are
/// discarded.
pub fn find_saturating_count(
    scenario: &Scenario,
    duration: f64,
    floor: f64,
    lo: f64,
    hi: f64,
    step: f64,
    max_pulses: usize,
) -> Result<Saturation> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter {
            name: "interval",
            value: hi,
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
        });
    }
    if max_pulses == 0 {
        return Err(Error::NoDeliveryTimes);
    }
    let dt = scenario.grid.dt;
    let snap = |t: f64| libm::round(t / dt) * dt;
    let candidates: Vec<f64> = (0..)
        .map(|i| snap(lo + i as f64 * step))
        .take_while(|t| *t <= hi + 1e-9 * step)
        .collect();
    let gamma_tol = scenario.tolerances.gamma;
    let value_tol = scenario.tolerances.value;

    // Peaks of a usable plan, highest first; `None` for plans that failed a
    // pulse or dip below the floor.
    let score = |times: &[f64]| -> Result<Option<Vec<f64>>> {
        match plan_sequential(scenario, duration, floor, times) {
            Ok(p) if !p.partial && p.proper.violation <= value_tol => Ok(Some(peaks(&p))),
            Ok(_) | Err(Error::InfeasibleLambda { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let with_time = |chosen: &[f64], t: f64| -> Option<Vec<f64>> {
        if chosen.iter().any(|&c| libm::fabs(c - t) < 0.5 * dt) {
            return None;
        }
        let mut times = chosen.to_vec();
        let at = times.partition_point(|&c| c < t);
        times.insert(at, t);
        Some(times)
    };

    let mut steps: Vec<SaturationStep> = Vec::new();
    let mut chosen: Vec<f64> = Vec::new();
    for n in 1..=max_pulses + 1 {
        let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        let consider = |t: f64, best: &mut Option<(Vec<f64>, f64, Vec<f64>)>| -> Result<()> {
            let Some(times) = with_time(&chosen, t) else {
                return Ok(());
            };
            if let Some(p) = score(&times)? {
                if best
                    .as_ref()
                    .map_or(true, |b| lower_peaks(&p, &b.0, gamma_tol, value_tol))
                {
                    *best = Some((p, t, times));
                }
            }
            Ok(())
        };
        for &t in &candidates {
            consider(t, &mut best)?;
        }
        // Local refinement of the added time down to the grid step.
        let mut width = step;
        while width > dt * (1.0 + 1e-9) {
            let fine = (snap(width / 5.0)).max(dt);
            let Some(centre) = best.as_ref().map(|b| b.1) else {
                break;
            };
            let reach = libm::ceil(width / fine) as i64;
            for j in -reach..=reach {
                let t = snap(centre + j as f64 * fine);
                if j != 0 && t >= lo && t <= hi {
                    consider(t, &mut best)?;
                }
            }
            width = fine;
        }
        let Some((peaks, _, times)) = best else {
            break;
        };
        chosen = times.clone();
        steps.push(SaturationStep {
            pulses: n,
            times,
            gamma: peaks[0],
        });
        if let [.., prev, last] = steps.as_slice() {
            if libm::fabs(prev.gamma - last.gamma) < gamma_tol {
                return Ok(Saturation {
                    count: prev.pulses,
                    saturated: true,
                    steps,
                });
            }
        }
    }
    Ok(Saturation {
        count: steps.last().map_or(max_pulses, |s| s.pulses.min(max_pulses)),
        saturated: false,
        steps,
    })
}

/// Local maxima of a plan, highest first (the global peak for a trace
/// without interior maxima).
fn peaks(plan: &MultiPulsePlan) -> Vec<f64> {
    let mut v: Vec<f64> = plan.extrema.maxima.iter().map(|e| e.value).collect();
    if v.is_empty() {
        v.push(plan.gamma());
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Lexicographic comparison of peak lists.  Global peaks within
/// `peak_tol` tie, as do lower peaks within `value_tol`.
fn lower_peaks(a: &[f64], b: &[f64], peak_tol: f64, value_tol: f64) -> bool {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let tol = if i == 0 { peak_tol } else { value_tol };
        if libm::fabs(x - y) > tol {
            return x < y;
        }
    }
    a[0] < b[0]
}
