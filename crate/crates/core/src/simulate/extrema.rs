use alloc::vec::Vec;

use super::{GlucoseTrace, Tolerances};

/// A stationary point (or a boundary sample) of a glucose trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub time: f64,
    pub value: f64,
    /// Within the value tolerance of the global extreme of its kind.
    pub is_global: bool,
    /// Sample at the start or end of the trace rather than a stationary point.
    pub at_boundary: bool,
}

/// Local and global extrema of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaReport {
    pub minima: Vec<Extremum>,
    pub maxima: Vec<Extremum>,
    pub t_min_global: f64,
    pub t_max_global: f64,
    /// Global maximum `γ`.
    pub gamma: f64,
    /// Global minimum actually attained.
    pub lambda_attained: f64,
    /// Global minima and maxima strictly alternate in time.
    pub interlaced: bool,
}

impl ExtremaReport {
    pub fn global_minima(&self) -> impl Iterator<Item = &Extremum> {
        self.minima.iter().filter(|e| e.is_global)
    }

    pub fn global_maxima(&self) -> impl Iterator<Item = &Extremum> {
        self.maxima.iter().filter(|e| e.is_global)
    }

    /// Global extrema sorted by time, tagged `true` for maxima.
    pub fn global_sequence(&self) -> Vec<(bool, Extremum)> {
        let mut seq: Vec<(bool, Extremum)> = self
            .global_minima()
            .map(|e| (false, *e))
            .chain(self.global_maxima().map(|e| (true, *e)))
            .collect();
        seq.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
        seq
    }

    /// The global maximum is a boundary sample (a plateau at the start, or a
    /// trace still rising at the horizon).
    pub fn max_at_boundary(&self) -> bool {
        self.global_maxima().any(|e| e.at_boundary)
    }

    pub fn is_constant(&self) -> bool {
        self.minima.is_empty() && self.maxima.is_empty()
    }

    /// Minima within `tol` of `floor`.
    pub fn minima_touching(&self, floor: f64, tol: f64) -> impl Iterator<Item = &Extremum> {
        self.minima.iter().filter(move |e| libm::fabs(e.value - floor) <= tol)
    }
}

/// Locates stationary points from sign changes of the model slope, refines
/// them with the Hermite interpolant and flags global ones.
///
/// Slopes within `slope` tolerance of zero carry no sign, so flat stretches
/// (the basal plateau, the settled tail) produce no extrema.  A trace whose
/// range is within the value tolerance is treated as constant.
pub fn detect_extrema(trace: &GlucoseTrace, tol: &Tolerances) -> ExtremaReport {
    let n = trace.len();
    let g = trace.glucose();
    let mut minima = Vec::new();
    let mut maxima = Vec::new();

    let mut last: Option<(i8, usize)> = None;
    for i in 0..n {
        let s = trace.slope(i);
        let sign = if s > tol.slope {
            1
        } else if s < -tol.slope {
            -1
        } else {
            continue;
        };
        if let Some((prev, at)) = last {
            if prev != sign {
                let maximum = prev > 0;
                // Extreme sample between the two definite slopes.
                let mut j = at;
                for k in at..=i {
                    if (maximum && g[k] > g[j]) || (!maximum && g[k] < g[j]) {
                        j = k;
                    }
                }
                let (time, value) = trace.refine_extremum(j, maximum);
                let e = Extremum {
                    time,
                    value,
                    is_global: false,
                    at_boundary: false,
                };
                if maximum {
                    maxima.push(e);
                } else {
                    minima.push(e);
                }
            }
        }
        last = Some((sign, i));
    }

    let (mut gamma, mut t_max) = (g[0], trace.times()[0]);
    let (mut lambda, mut t_min) = (g[0], trace.times()[0]);
    for (i, &v) in g.iter().enumerate() {
        if v > gamma {
            gamma = v;
            t_max = trace.times()[i];
        }
        if v < lambda {
            lambda = v;
            t_min = trace.times()[i];
        }
    }
    for e in &maxima {
        if e.value > gamma {
            gamma = e.value;
            t_max = e.time;
        }
    }
    for e in &minima {
        if e.value < lambda {
            lambda = e.value;
            t_min = e.time;
        }
    }

    if gamma - lambda <= tol.value {
        return ExtremaReport {
            minima: Vec::new(),
            maxima: Vec::new(),
            t_min_global: t_min,
            t_max_global: t_max,
            gamma,
            lambda_attained: lambda,
            interlaced: true,
        };
    }

    for e in &mut maxima {
        e.is_global = gamma - e.value <= tol.value;
    }
    for e in &mut minima {
        e.is_global = e.value - lambda <= tol.value;
    }

    // Boundary samples count only when they are global and no stationary
    // point of the same kind already represents that level nearby.
    let ends = [0, n - 1];
    for &i in &ends {
        let (t, v) = (trace.times()[i], g[i]);
        if gamma - v <= tol.value && !maxima.iter().any(|e| e.is_global && e.value >= v) {
            maxima.push(Extremum {
                time: t,
                value: v,
                is_global: true,
                at_boundary: true,
            });
        }
        if v - lambda <= tol.value && !minima.iter().any(|e| e.is_global && e.value <= v) {
            minima.push(Extremum {
                time: t,
                value: v,
                is_global: true,
                at_boundary: true,
            });
        }
    }
    minima.sort_by(|a, b| a.time.total_cmp(&b.time));
    maxima.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut report = ExtremaReport {
        minima,
        maxima,
        t_min_global: t_min,
        t_max_global: t_max,
        gamma,
        lambda_attained: lambda,
        interlaced: false,
    };
    let seq = report.global_sequence();
    report.interlaced = seq.windows(2).all(|w| w[0].0 != w[1].0 && w[0].1.time < w[1].1.time);
    report
}
