use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Sampled model response on a uniform grid.
///
/// Besides glucose the trace keeps insulin action `x`, clearance
/// `h = x + G`, supply `w = r + E` and the input `u`, so the model slope
/// `ġ = w − h·g` is available at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct GlucoseTrace {
    dt: f64,
    times: Vec<f64>,
    glucose: Vec<f64>,
    action: Vec<f64>,
    clearance: Vec<f64>,
    supply: Vec<f64>,
    input: Vec<f64>,
}

impl GlucoseTrace {
    pub(crate) fn with_capacity(dt: f64, n: usize) -> Self {
        Self {
            dt,
            times: Vec::with_capacity(n),
            glucose: Vec::with_capacity(n),
            action: Vec::with_capacity(n),
            clearance: Vec::with_capacity(n),
            supply: Vec::with_capacity(n),
            input: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, t: f64, g: f64, x: f64, h: f64, w: f64, u: f64) {
        self.times.push(t);
        self.glucose.push(g);
        self.action.push(x);
        self.clearance.push(h);
        self.supply.push(w);
        self.input.push(u);
    }

    /// Builds a trace from columns sampled at `i·dt`.
    pub fn from_columns(
        dt: f64,
        glucose: Vec<f64>,
        action: Vec<f64>,
        clearance: Vec<f64>,
        supply: Vec<f64>,
        input: Vec<f64>,
    ) -> Result<Self> {
        let n = glucose.len();
        if n == 0 {
            return Err(Error::EmptyTrace);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", value: dt });
        }
        if [action.len(), clearance.len(), supply.len(), input.len()]
            .iter()
            .any(|&len| len != n)
        {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            dt,
            times: (0..n).map(|i| i as f64 * dt).collect(),
            glucose,
            action,
            clearance,
            supply,
            input,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn glucose(&self) -> &[f64] {
        &self.glucose
    }

    pub fn insulin_action(&self) -> &[f64] {
        &self.action
    }

    pub fn clearance(&self) -> &[f64] {
        &self.clearance
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Model slope `ġ = w − h·g` at node `i`.
    #[inline]
    pub fn slope(&self, i: usize) -> f64 {
        self.supply[i] - self.clearance[i] * self.glucose[i]
    }

    /// First node at or after `t`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let k = libm::ceil(t / self.dt - 1e-9);
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.len().saturating_sub(1))
        }
    }

    pub fn max_glucose(&self) -> f64 {
        self.glucose.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_glucose(&self) -> f64 {
        self.glucose.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Glucose at `t` by cubic Hermite interpolation with the model slopes.
    pub fn glucose_at(&self, t: f64) -> f64 {
        let n = self.len();
        if n == 1 || t <= 0.0 {
            return self.glucose[0];
        }
        let i = libm::floor(t / self.dt) as usize;
        if i >= n - 1 {
            return self.glucose[n - 1];
        }
        let theta = (t - self.times[i]) / self.dt;
        self.cell(i).value(theta)
    }

    /// Model slope at `t`, linearly interpolated between nodes.
    pub fn slope_at(&self, t: f64) -> f64 {
        let n = self.len();
        if n == 1 || t <= 0.0 {
            return self.slope(0);
        }
        let i = libm::floor(t / self.dt) as usize;
        if i >= n - 1 {
            return self.slope(n - 1);
        }
        let theta = (t - self.times[i]) / self.dt;
        (1.0 - theta) * self.slope(i) + theta * self.slope(i + 1)
    }

    fn cell(&self, i: usize) -> Hermite {
        Hermite {
            g0: self.glucose[i],
            g1: self.glucose[i + 1],
            m0: self.slope(i) * self.dt,
            m1: self.slope(i + 1) * self.dt,
        }
    }

    /// Refines the extremum nearest node `i` using the Hermite cubics of the
    /// two adjacent cells. Returns `(time, value)`.
    pub(crate) fn refine_extremum(&self, i: usize, maximum: bool) -> (f64, f64) {
        let better = |a: f64, b: f64| if maximum { a > b } else { a < b };
        let mut best = (self.times[i], self.glucose[i]);
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.len() - 1);
        for cell in lo..hi {
            let h = self.cell(cell);
            for theta in h.stationary_points() {
                let v = h.value(theta);
                if better(v, best.1) {
                    best = (self.times[cell] + theta * self.dt, v);
                }
            }
        }
        best
    }

    /// Lowest value over `t ≥ from` including refinement between nodes.
    /// Returns `(time, value)`.
    pub fn refined_min_from(&self, from: f64) -> (f64, f64) {
        let start = self.index_at_or_after(from);
        let (i, _) = self.glucose[start..]
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &g)| if g < acc.1 { (k, g) } else { acc });
        let i = start + i;
        let (t, v) = self.refine_extremum(i, false);
        if t < self.times[start] {
            (self.times[i], self.glucose[i])
        } else {
            (t, v)
        }
    }

    /// Highest value over nodes with `lo < t < hi`, refined. `None` when no
    /// node lies in the open interval.
    pub fn refined_max_between(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let start = self.index_at_or_after(lo);
        let mut best: Option<usize> = None;
        for i in start..self.len() {
            let t = self.times[i];
            if t <= lo {
                continue;
            }
            if t >= hi {
                break;
            }
            if best.map_or(true, |b| self.glucose[i] > self.glucose[b]) {
                best = Some(i);
            }
        }
        let i = best?;
        let (t, v) = self.refine_extremum(i, true);
        if t > lo && t < hi {
            Some((t, v))
        } else {
            Some((self.times[i], self.glucose[i]))
        }
    }
}

/// Cubic Hermite segment on θ ∈ [0, 1].
#[derive(Debug, Clone, Copy)]
struct Hermite {
    g0: f64,
    g1: f64,
    m0: f64,
    m1: f64,
}

impl Hermite {
    fn value(&self, t: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.g0
            + (t3 - 2.0 * t2 + t) * self.m0
            + (-2.0 * t3 + 3.0 * t2) * self.g1
            + (t3 - t2) * self.m1
    }

    /// Roots of the derivative inside [0, 1].
    fn stationary_points(&self) -> impl Iterator<Item = f64> {
        // p'(θ) = A θ² + B θ + C
        let a = 6.0 * self.g0 + 3.0 * self.m0 - 6.0 * self.g1 + 3.0 * self.m1;
        let b = -6.0 * self.g0 - 4.0 * self.m0 + 6.0 * self.g1 - 2.0 * self.m1;
        let c = self.m0;
        let mut roots = [f64::NAN; 2];
        let scale = libm::fabs(a).max(libm::fabs(b)).max(libm::fabs(c));
        if scale > 0.0 {
            if libm::fabs(a) <= 1e-12 * scale {
                if b != 0.0 {
                    roots[0] = -c / b;
                }
            } else {
                let disc = b * b - 4.0 * a * c;
                if disc >= 0.0 {
                    let q = -0.5 * (b + libm::copysign(sqrt(disc), b));
                    roots[0] = q / a;
                    if q != 0.0 {
                        roots[1] = c / q;
                    }
                }
            }
        }
        roots.into_iter().filter(|r| (0.0..=1.0).contains(r))
    }
}
