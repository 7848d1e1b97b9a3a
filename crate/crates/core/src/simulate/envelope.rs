use alloc::vec::Vec;

use super::GlucoseTrace;
use crate::math::exp;
use crate::{Error, Result};

/// Slack allowed in the pointwise containment check (mg/dl); covers the
/// quadrature of `∫h` and sampling `w/h` only at the nodes.
pub const CONTAINMENT_TOL: f64 = 1e-6;

/// Two-sided exponential envelope of glucose over one partition cell.
///
/// With `c₃ = g(t_start)`, `H(t) = ∫ h` from the cell start,
/// `Λ ≤ w/h ≤ Γ` on the cell:
/// `(c₃ − Λ)·e^{−H} + Λ ≤ g(t) ≤ (c₃ − Γ)·e^{−H} + Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsEstimate {
    pub start: f64,
    pub end: f64,
    /// `Γ = max w/h` over the cell.
    pub upper_level: f64,
    /// `Λ = min w/h` over the cell.
    pub lower_level: f64,
    /// `c₁ = c₃ − Λ`.
    pub c1: f64,
    /// `c₂ = c₃ − Γ`.
    pub c2: f64,
    /// `c₃`, glucose at the cell start.
    pub c3: f64,
    /// Smallest distance from the trace to either bound (negative when the
    /// trace leaves the envelope).
    pub margin: f64,
}

impl BoundsEstimate {
    pub fn contains_trace(&self) -> bool {
        self.margin >= -CONTAINMENT_TOL
    }
}

/// Envelope per cell of the partition of `[0, end]` given by `breakpoints`
/// (grid times, strictly inside the trace; may be empty).
pub fn envelope_bounds(trace: &GlucoseTrace, breakpoints: &[f64]) -> Result<Vec<BoundsEstimate>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let last = trace.len() - 1;
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(0usize);
    for &t in breakpoints {
        let k = libm::round(t / trace.dt());
        if libm::fabs(k * trace.dt() - t) > 1e-9 * t.max(1.0) {
            return Err(Error::GridMisalignment {
                time: t,
                dt: trace.dt(),
            });
        }
        let k = k as usize;
        if k == 0 || k >= last || k <= *edges.last().unwrap() {
            return Err(Error::InvalidParameter {
                name: "breakpoint",
                value: t,
            });
        }
        edges.push(k);
    }
    edges.push(last);

    let g = trace.glucose();
    let h = trace.clearance();
    let w = trace.supply();
    let dt = trace.dt();
    let cells = edges
        .windows(2)
        .map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            let (mut upper, mut lower) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in a..=b {
                let ratio = w[i] / h[i];
                upper = upper.max(ratio);
                lower = lower.min(ratio);
            }
            let c3 = g[a];
            let (c1, c2) = (c3 - lower, c3 - upper);
            let mut integral = 0.0;
            let mut margin = f64::INFINITY;
            for i in a..=b {
                if i > a {
                    integral += 0.5 * dt * (h[i - 1] + h[i]);
                }
                let decay = exp(-integral);
                let lo = c1 * decay + lower;
                let hi = c2 * decay + upper;
                margin = margin.min(g[i] - lo).min(hi - g[i]);
            }
            BoundsEstimate {
                start: trace.times()[a],
                end: trace.times()[b],
                upper_level: upper,
                lower_level: lower,
                c1,
                c2,
                c3,
                margin,
            }
        })
        .collect();
    Ok(cells)
}
