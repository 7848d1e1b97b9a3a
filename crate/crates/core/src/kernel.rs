//! Exact propagators for the linear parts of the model.
//!
//! Every linear state in the model is a cascade of first-order decays.  The
//! response of such a cascade is a convolution of decaying exponentials,
//! which equals a divided difference of `r ↦ exp(−r·s)` over the decay rates
//! (with a zero rate for a constant input).  Coinciding rates turn into
//! derivatives, which gives the polynomial-times-exponential terms without a
//! separate code path per case.

use crate::math::exp;
use crate::model::ModelParams;

/// Most nodes any cascade here needs: three insulin rates plus the input.
const MAX_NODES: usize = 4;

/// Rates closer than this (relative to the largest) are treated as equal.
const CONFLUENT_RTOL: f64 = 1e-9;

/// Series terms used when the rate spread is small relative to `1/s`.
const SERIES_TERMS: usize = 32;

/// Divided difference `f[r_0, …, r_m]` of `f(r) = exp(−r·s)`.
pub(crate) fn exp_divided_difference(rates: &[f64], s: f64) -> f64 {
    let n = rates.len();
    assert!((1..=MAX_NODES).contains(&n), "unsupported node count {n}");
    let mut nodes = [0.0; MAX_NODES];
    nodes[..n].copy_from_slice(rates);
    let nodes = &mut nodes[..n];
    nodes.sort_by(f64::total_cmp);
    let m = n - 1;
    let (lo, hi) = (nodes[0], nodes[m]);

    if (hi - lo) * s <= 1.0 {
        // Taylor series about the midpoint: f[y] = Σ_k (−s)^k/k! · h_{k−m}(y),
        // with h_j the complete homogeneous symmetric polynomials.
        let centre = 0.5 * (lo + hi);
        let mut h = [0.0; SERIES_TERMS + 1];
        h[0] = 1.0;
        for &r in nodes.iter() {
            let y = r - centre;
            for j in 1..=SERIES_TERMS {
                h[j] += y * h[j - 1];
            }
        }
        let mut coeff = 1.0; // (−s)^k / k!
        for k in 1..=m {
            coeff *= -s / k as f64;
        }
        let mut sum = 0.0;
        for (j, hj) in h.iter().enumerate() {
            sum += coeff * hj;
            coeff *= -s / (m + j + 1) as f64;
        }
        return exp(-centre * s) * sum;
    }

    // Merge near-coincident rates so the recurrence never divides by a
    // vanishing gap; merged groups use derivatives instead.
    let scale = libm::fabs(lo).max(libm::fabs(hi));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && nodes[end] - nodes[start] <= CONFLUENT_RTOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let mean = nodes[start..end].iter().sum::<f64>() / (end - start) as f64;
            nodes[start..end].iter_mut().for_each(|r| *r = mean);
        }
        start = end;
    }

    let mut table = [0.0; MAX_NODES];
    for (slot, &r) in table.iter_mut().zip(nodes.iter()) {
        *slot = exp(-r * s);
    }
    let mut inv_fact = 1.0;
    for level in 1..=m {
        inv_fact /= level as f64;
        for i in 0..=(m - level) {
            let (a, b) = (nodes[i], nodes[i + level]);
            table[i] = if a == b {
                libm::pow(-s, level as f64) * inv_fact * exp(-a * s)
            } else {
                (table[i + 1] - table[i]) / (b - a)
            };
        }
    }
    table[0]
}

/// Convolution of `exp(−r_i·t)` over all rates, evaluated at `s ≥ 0`.
///
/// Always positive for positive `s`; equals `s^(n−1)/(n−1)!` to leading order.
pub(crate) fn cascade(rates: &[f64], s: f64) -> f64 {
    let dd = exp_divided_difference(rates, s);
    if (rates.len() - 1) % 2 == 0 {
        dd
    } else {
        -dd
    }
}

/// Insulin chain state `(z, y, x)`.
pub(crate) type ChainState = [f64; 3];

/// Exact affine map of the insulin chain over a fixed step with a constant
/// input: `state' = transition · state + forcing · u`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChainPropagator {
    transition: [[f64; 3]; 3],
    forcing: [f64; 3],
}

impl ChainPropagator {
    pub(crate) fn new(p: &ModelParams, s: f64) -> Self {
        let (d, c, a) = (p.insulin_absorption, p.plasma_rate, p.action_rate);
        let dk = d * p.insulin_gain;
        let ab = a * p.sensitivity;
        let transition = [
            [exp(-d * s), 0.0, 0.0],
            [c * cascade(&[c, d], s), exp(-c * s), 0.0],
            [ab * c * cascade(&[a, c, d], s), ab * cascade(&[a, c], s), exp(-a * s)],
        ];
        let forcing = [
            dk * cascade(&[d, 0.0], s),
            c * dk * cascade(&[c, d, 0.0], s),
            ab * c * dk * cascade(&[a, c, d, 0.0], s),
        ];
        Self { transition, forcing }
    }

    #[inline]
    pub(crate) fn apply(&self, state: &ChainState, input: f64) -> ChainState {
        let t = &self.transition;
        [
            t[0][0] * state[0] + self.forcing[0] * input,
            t[1][0] * state[0] + t[1][1] * state[1] + self.forcing[1] * input,
            t[2][0] * state[0] + t[2][1] * state[1] + t[2][2] * state[2] + self.forcing[2] * input,
        ]
    }

    /// State reached from rest after holding a unit input for `s`.
    pub(crate) fn unit_step(&self) -> ChainState {
        self.forcing
    }
}

/// Meal compartments `(f1, f2)` with `ḟ2 = −f2/τ`, `ḟ1 = −f1/τ + κ·f2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MealPropagator {
    decay: f64,
    transfer: f64,
}

impl MealPropagator {
    pub(crate) fn new(p: &ModelParams, s: f64) -> Self {
        let rate = 1.0 / p.meal_tau;
        Self {
            decay: exp(-rate * s),
            transfer: p.meal_coupling * cascade(&[rate, rate], s),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, state: &[f64; 2]) -> [f64; 2] {
        [self.decay * state[0] + self.transfer * state[1], self.decay * state[1]]
    }
}
