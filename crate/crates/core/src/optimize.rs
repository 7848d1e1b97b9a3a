//! Optimal single-pulse delivery time.
//!
//! For a proper bolus the peak `γ` depends only on the delivery time `t′`.
//! An optimal trace either touches the floor twice with the global maximum
//! between the two touches, or touches it once with equal maxima on either
//! side.  The search brackets the switch of the balance
//! `β(t′) = max_{t<t_min} g − max_{t>t_min} g` and bisects on it, checking
//! both conditions at every evaluation.

use alloc::vec::Vec;
use core::fmt;

use crate::dose::{solve_proper_bolus, DoseSolution};
use crate::math::{ceil, round};
use crate::simulate::{detect_extrema, ExtremaReport, GlucoseTrace, Grid, Scenario, Tolerances};
use crate::{Error, Result};

/// Step halvings the timing search may take after bisection stalls on
/// adjacent grid times.
pub const MAX_REFINEMENTS: u32 = 6;

/// One delivery time of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub t_prime: f64,
    pub outcome: Result<SweepPoint>,
}

/// Proper bolus and resulting peak at one delivery time.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub magnitude: f64,
    pub gamma: f64,
    /// Times of the first and (if any) second minimum touching the floor.
    pub t_min1: f64,
    pub t_min2: Option<f64>,
    /// Time of the global maximum; `None` when the trace is constant.
    pub t_max: Option<f64>,
    pub report: ExtremaReport,
}

/// Peak as a function of delivery time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSweep {
    pub entries: Vec<SweepEntry>,
    /// Delivery time of the lowest peak among feasible entries.
    pub t_opt: Option<f64>,
    pub gamma_opt: Option<f64>,
}

impl TimingSweep {
    pub fn feasible(&self) -> impl Iterator<Item = (f64, &SweepPoint)> {
        self.entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().ok().map(|p| (e.t_prime, p)))
    }
}

/// Solves the proper bolus at every `t′ = lo, lo + step, …, ≤ hi`.
/// Entries whose solve fails carry the error; the sweep continues.
pub fn sweep_delivery_times(
    scenario: &Scenario,
    duration: f64,
    floor: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<TimingSweep> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sweep_step",
            value: step,
        });
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter {
            name: "sweep_range",
            value: hi,
        });
    }
    let count = round((hi - lo) / step * (1.0 + 1e-12)) as usize;
    let count = if lo + count as f64 * step > hi + 1e-9 * step {
        count.saturating_sub(1)
    } else {
        count
    };
    let mut entries = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let t_prime = lo + i as f64 * step;
        let outcome = solve_proper_bolus(scenario, &scenario.basal_schedule(), t_prime, duration, floor).map(|sol| {
            let report = detect_extrema(&sol.trace, &scenario.tolerances);
            point(&sol, &report, floor, &scenario.tolerances)
        });
        entries.push(SweepEntry { t_prime, outcome });
    }
    let best = entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().map(|p| (e.t_prime, p.gamma)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    Ok(TimingSweep {
        entries,
        t_opt: best.map(|b| b.0),
        gamma_opt: best.map(|b| b.1),
    })
}

fn point(sol: &DoseSolution, report: &ExtremaReport, floor: f64, tol: &Tolerances) -> SweepPoint {
    let mut touching = report
        .minima_touching(floor, tol.value)
        .filter(|e| e.time >= sol.delivery)
        .map(|e| e.time);
    let t_min1 = touching.next().unwrap_or(sol.t_min);
    let t_min2 = touching.next();
    SweepPoint {
        magnitude: sol.magnitude,
        gamma: report.gamma,
        t_min1,
        t_min2,
        t_max: (!report.is_constant()).then_some(report.t_max_global),
        report: report.clone(),
    }
}

/// Which certificate an optimal trace satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// A single floor touch with equal maxima before and after it.
    EqualMaxima,
    /// Two floor touches with every global maximum strictly between them.
    MaxBetweenMinima,
    /// Glucose sits at the floor throughout.
    ConstantTrace,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateKind::EqualMaxima => "equal maxima",
            CertificateKind::MaxBetweenMinima => "max between minima",
            CertificateKind::ConstantTrace => "constant trace",
        })
    }
}

/// Evidence that a trace has the lowest peak among proper single pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCertificate {
    pub kind: CertificateKind,
    /// `[t_min1, t_max, t_min2]` for two touches, `[t_max_left, t_min,
    /// t_max_right]` for equal maxima, empty for a constant trace.
    pub witness_times: Vec<f64>,
    /// `|max_left − max_right|` around the global minimum.
    pub balance_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The clause an optimality check failed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    /// Glucose drops more than the tolerance below the floor.
    NotProper { g_min: f64 },
    /// Glucose never comes within the tolerance of the floor.
    FloorNotAttained { g_min: f64 },
    /// One floor touch, and the maxima either side of it differ.
    UnbalancedMaxima { heavier: Side, left: f64, right: f64 },
    /// Several floor touches, but a global maximum lies outside every pair.
    MaxOutsideMinima { t_max: f64 },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::NotProper { g_min } => write!(f, "not proper: minimum {g_min} is below the floor"),
            Rejection::FloorNotAttained { g_min } => {
                write!(f, "floor not attained: minimum {g_min} stays above it")
            }
            Rejection::UnbalancedMaxima { heavier, left, right } => write!(
                f,
                "unbalanced maxima: {} side heavier (left {left}, right {right})",
                match heavier {
                    Side::Left => "left",
                    Side::Right => "right",
                }
            ),
            Rejection::MaxOutsideMinima { t_max } => {
                write!(f, "global maximum at t = {t_max} is not between two floor touches")
            }
        }
    }
}

/// Largest glucose before and after `t_split` (refined between nodes); a
/// side with no samples reports the value at the split.
pub fn side_maxima(trace: &GlucoseTrace, t_split: f64) -> (f64, f64) {
    let at = trace.glucose_at(t_split);
    let left = trace
        .refined_max_between(-trace.dt(), t_split)
        .map_or(at, |m| m.1.max(at));
    let right = trace
        .refined_max_between(t_split, trace.end_time() + trace.dt())
        .map_or(at, |m| m.1.max(at));
    (left, right)
}

/// Checks a trace against the two sufficient-and-necessary optimality
/// conditions for a single proper pulse.  When both hold, the two-touch
/// certificate is reported.
pub fn certify_optimality(
    trace: &GlucoseTrace,
    report: &ExtremaReport,
    floor: f64,
    tol: &Tolerances,
) -> core::result::Result<OptimalityCertificate, Rejection> {
    let g_min = report.lambda_attained;
    if g_min < floor - tol.value {
        return Err(Rejection::NotProper { g_min });
    }
    if g_min > floor + tol.value {
        return Err(Rejection::FloorNotAttained { g_min });
    }
    if report.is_constant() {
        return Ok(OptimalityCertificate {
            kind: CertificateKind::ConstantTrace,
            witness_times: Vec::new(),
            balance_residual: 0.0,
        });
    }
    let (left, right) = side_maxima(trace, report.t_min_global);
    let balance_residual = libm::fabs(left - right);

    let touches: Vec<f64> = report.minima_touching(floor, tol.value).map(|e| e.time).collect();
    let maxima: Vec<f64> = report.global_maxima().map(|e| e.time).collect();
    if touches.len() >= 2 {
        let (first, last) = (maxima[0], maxima[maxima.len() - 1]);
        let before = touches.iter().copied().rev().find(|&t| t < first);
        let after = touches.iter().copied().find(|&t| t > last);
        if let (Some(a), Some(b)) = (before, after) {
            if !touches.iter().any(|&t| t > a && t < b) {
                return Ok(OptimalityCertificate {
                    kind: CertificateKind::MaxBetweenMinima,
                    witness_times: alloc::vec![a, report.t_max_global, b],
                    balance_residual,
                });
            }
        }
        return Err(Rejection::MaxOutsideMinima {
            t_max: report.t_max_global,
        });
    }
    if balance_residual <= tol.value {
        let t_min = report.t_min_global;
        let t_left = trace.refined_max_between(-trace.dt(), t_min).map_or(0.0, |m| m.0);
        let t_right = trace
            .refined_max_between(t_min, trace.end_time() + trace.dt())
            .map_or(trace.end_time(), |m| m.0);
        return Ok(OptimalityCertificate {
            kind: CertificateKind::EqualMaxima,
            witness_times: alloc::vec![t_left, t_min, t_right],
            balance_residual,
        });
    }
    Err(Rejection::UnbalancedMaxima {
        heavier: if left > right { Side::Left } else { Side::Right },
        left,
        right,
    })
}

/// Proper pulse at one delivery time with its extrema and balance.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingEvaluation {
    pub solution: DoseSolution,
    pub report: ExtremaReport,
    /// `β = max_{t<t_min} g − max_{t>t_min} g`.
    pub balance: f64,
    pub certificate: core::result::Result<OptimalityCertificate, Rejection>,
}

pub fn evaluate_delivery(scenario: &Scenario, t_prime: f64, duration: f64, floor: f64) -> Result<TimingEvaluation> {
    let solution = solve_proper_bolus(scenario, &scenario.basal_schedule(), t_prime, duration, floor)?;
    let report = detect_extrema(&solution.trace, &scenario.tolerances);
    let (left, right) = side_maxima(&solution.trace, report.t_min_global);
    let certificate = certify_optimality(&solution.trace, &report, floor, &scenario.tolerances);
    Ok(TimingEvaluation {
        solution,
        report,
        balance: left - right,
        certificate,
    })
}

/// Certified optimal delivery time.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTiming {
    pub t_prime: f64,
    pub evaluation: TimingEvaluation,
    pub certificate: OptimalityCertificate,
    /// Step of the grid the certified trace was computed on.
    pub dt: f64,
    pub evaluations: u32,
}

/// Searches `[lo, hi]` for a delivery time whose trace passes
/// [`certify_optimality`].
///
/// Bisection runs over grid times on the sign of the balance `β`.  Once the
/// bracket shrinks to adjacent grid times without a certificate, the step
/// is halved (up to [`MAX_REFINEMENTS`] times) and bisection continues.
pub fn find_optimal_time(scenario: &Scenario, duration: f64, floor: f64, lo: f64, hi: f64) -> Result<OptimalTiming> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter {
            name: "bracket",
            value: hi,
        });
    }
    let mut sc = scenario.clone();
    let mut dt = sc.grid.dt;
    let mut k_lo = ceil(lo / dt - 1e-9) as u64;
    let mut k_hi = libm::floor(hi / dt + 1e-9) as u64;
    if k_lo >= k_hi {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut evaluations = 0u32;
    let mut eval = |sc: &Scenario, k: u64, dt: f64| -> Result<(f64, TimingEvaluation)> {
        evaluations += 1;
        let t = k as f64 * dt;
        evaluate_delivery(sc, t, duration, floor).map(|e| (t, e))
    };

    let (t_a, at_lo) = eval(&sc, k_lo, dt)?;
    if at_lo.certificate.is_ok() {
        return Ok(done(t_a, at_lo, dt, evaluations));
    }
    let (t_b, at_hi) = eval(&sc, k_hi, dt)?;
    if at_hi.certificate.is_ok() {
        return Ok(done(t_b, at_hi, dt, evaluations));
    }
    let sign_lo = at_lo.balance > 0.0;
    if sign_lo == (at_hi.balance > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }

    let mut refinements = 0;
    loop {
        while k_hi - k_lo > 1 {
            let k = k_lo + (k_hi - k_lo) / 2;
            let (t, e) = eval(&sc, k, dt)?;
            if e.certificate.is_ok() {
                return Ok(done(t, e, dt, evaluations));
            }
            if (e.balance > 0.0) == sign_lo {
                k_lo = k;
            } else {
                k_hi = k;
            }
        }
        if refinements == MAX_REFINEMENTS {
            return Err(Error::Uncertified {
                lo: k_lo as f64 * dt,
                hi: k_hi as f64 * dt,
            });
        }
        refinements += 1;
        dt *= 0.5;
        sc.grid = Grid::new(dt, sc.grid.horizon)?;
        k_lo *= 2;
        k_hi *= 2;
    }
}

fn done(t_prime: f64, evaluation: TimingEvaluation, dt: f64, evaluations: u32) -> OptimalTiming {
    let certificate = evaluation.certificate.clone().expect("certified");
    OptimalTiming {
        t_prime,
        evaluation,
        certificate,
        dt,
        evaluations,
    }
}

/// One point of a seesaw curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeesawPoint {
    pub floor: f64,
    pub magnitude: f64,
    pub gamma: f64,
}

/// Peak against floor at a fixed delivery time.  The peak must strictly
/// increase with the floor; a violation is returned as an error naming the
/// offending pair.
pub fn seesaw_curve(scenario: &Scenario, t_prime: f64, duration: f64, floors: &[f64]) -> Result<Vec<SeesawPoint>> {
    if floors.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "lambda_grid",
            value: floors.windows(2).find(|w| w[1] <= w[0]).map_or(0.0, |w| w[1]),
        });
    }
    let mut points = Vec::with_capacity(floors.len());
    for &floor in floors {
        let sol = solve_proper_bolus(scenario, &scenario.basal_schedule(), t_prime, duration, floor)?;
        let report = detect_extrema(&sol.trace, &scenario.tolerances);
        points.push(SeesawPoint {
            floor,
            magnitude: sol.magnitude,
            gamma: report.gamma,
        });
    }
    if let Some(w) = points.windows(2).find(|w| w[1].gamma <= w[0].gamma) {
        return Err(Error::SeesawViolation {
            lower: (w[0].floor, w[0].gamma),
            upper: (w[1].floor, w[1].gamma),
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MealModel;

    #[test]
    fn early_delivery_is_unbalanced_to_the_right() {
        let sc = Scenario::example();
        let e = evaluate_delivery(&sc, 400.0, 10.0, 80.0).unwrap();
        match e.certificate {
            Err(Rejection::UnbalancedMaxima { heavier, left, right }) => {
                assert_eq!(heavier, Side::Right);
                assert!(right > left);
            }
            other => panic!("{other:?}"),
        }
        assert!(e.balance < 0.0);
    }

    #[test]
    fn no_meal_is_constant_and_optimal_anywhere() {
        let sc = Scenario::example().with_meals(MealModel::none());
        let opt = find_optimal_time(&sc, 10.0, 100.0, 300.0, 600.0).unwrap();
        assert_eq!(opt.certificate.kind, CertificateKind::ConstantTrace);
        assert_eq!(opt.evaluation.solution.magnitude, 0.0);
    }

    #[test]
    fn sweep_range_is_inclusive() {
        let sc = Scenario::example().with_meals(MealModel::none());
        let sweep = sweep_delivery_times(&sc, 10.0, 100.0, 350.0, 370.0, 5.0).unwrap();
        let times: Vec<f64> = sweep.entries.iter().map(|e| e.t_prime).collect();
        assert_eq!(times, [350.0, 355.0, 360.0, 365.0, 370.0]);
    }

    #[test]
    fn decreasing_floor_grid_is_rejected() {
        let sc = Scenario::example();
        assert!(seesaw_curve(&sc, 445.0, 10.0, &[80.0, 75.0]).is_err());
    }
}
