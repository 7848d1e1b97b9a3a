//! CSV and text artifacts.
//!
//! Numbers are written with `{:.16e}` so reruns are byte-identical and no
//! precision is lost.  Every file starts with `#` lines holding the command
//! and the resolved config.

use std::fmt::Write as _;
use std::path::Path;

use glucopt_core::multipulse::MultiPulsePlan;
use glucopt_core::optimize::{SeesawPoint, TimingSweep};
use glucopt_core::simulate::ExtremaReport;
use glucopt_core::{GlucoseTrace, InputSchedule};

use crate::config::ScenarioConfig;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `#` comment block naming the command and echoing the resolved config.
pub fn header(command: &str, config: &ScenarioConfig) -> String {
    let mut s = format!("# glucopt {command}\n# resolved config:\n");
    for line in config.to_toml().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            let _ = writeln!(s, "# {line}");
        }
    }
    s
}

pub fn trace_csv(header: &str, trace: &GlucoseTrace, schedule: &InputSchedule) -> String {
    let mut s = String::with_capacity(header.len() + trace.len() * 140);
    s.push_str(header);
    s.push_str("t,g,x,h,w,u\n");
    for i in 0..trace.len() {
        let t = trace.times()[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(t),
            num(trace.glucose()[i]),
            num(trace.insulin_action()[i]),
            num(trace.clearance()[i]),
            num(trace.supply()[i]),
            num(schedule.evaluate(t)),
        );
    }
    s
}

pub fn sweep_csv(header: &str, sweep: &TimingSweep) -> String {
    let mut s = String::from(header);
    s.push_str("t_prime,u_hat,gamma,t_min1,t_min2,t_max\n");
    for e in &sweep.entries {
        match &e.outcome {
            Ok(p) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    num(e.t_prime),
                    num(p.magnitude),
                    num(p.gamma),
                    num(p.t_min1),
                    opt(p.t_min2),
                    opt(p.t_max),
                );
            }
            Err(_) => {
                let _ = writeln!(s, "{},,,,,", num(e.t_prime));
            }
        }
    }
    s
}

pub fn plan_csv(header: &str, plan: &MultiPulsePlan) -> String {
    let mut s = String::from(header);
    s.push_str("i,t_prime,u_hat,skipped,reason\n");
    for (i, p) in plan.pulses.iter().enumerate() {
        let reason = p.reason().unwrap_or_default().replace(['"', ','], ";");
        let _ = writeln!(
            s,
            "{i},{},{},{},{reason}",
            num(p.t_prime),
            num(p.magnitude),
            p.skipped()
        );
    }
    s
}

pub fn seesaw_csv(header: &str, points: &[SeesawPoint]) -> String {
    let mut s = String::from(header);
    s.push_str("lambda,u_hat,gamma\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", num(p.floor), num(p.magnitude), num(p.gamma));
    }
    s
}

/// Human-readable list of local extrema.
pub fn extrema_text(report: &ExtremaReport) -> String {
    let mut s = String::new();
    if report.is_constant() {
        s.push_str("trace is constant within tolerance\n");
    }
    let _ = writeln!(s, "global max: t = {:.3}, g = {:.6}", report.t_max_global, report.gamma);
    let _ = writeln!(
        s,
        "global min: t = {:.3}, g = {:.6}",
        report.t_min_global, report.lambda_attained
    );
    let mut all: Vec<(&str, f64, f64, bool)> = report
        .minima
        .iter()
        .map(|e| ("min", e.time, e.value, e.is_global))
        .chain(report.maxima.iter().map(|e| ("max", e.time, e.value, e.is_global)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (kind, t, g, global) in all {
        let _ = writeln!(
            s,
            "  {kind} t = {t:.3} g = {g:.6}{}",
            if global { " (global)" } else { "" }
        );
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(name), contents)
}
