//! Command line driver for `glucopt-core`.
//!
//! Each subcommand reads a [`ScenarioConfig`], applies flag overrides,
//! runs one computation and writes CSV/text artifacts into the output
//! directory.  See [`Command`] for the list.

pub mod config;
pub mod error;
pub mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use glucopt_core::dose::{solve_proper_bolus, verify_proper};
use glucopt_core::multipulse::{balance_last_delivery, check_interlacing, find_saturating_count, plan_sequential};
use glucopt_core::optimize::{find_optimal_time, seesaw_curve, sweep_delivery_times};
use glucopt_core::simulate::detect_extrema;
use glucopt_core::{BolusPulse, InputSchedule};

pub use config::ScenarioConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "glucopt",
    version,
    about = "Proper bolus sizing and peak-optimal timing for the minimal glucose model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Config file, or the name of a bundled config (example_sec6, two_meal, no_meal).
    #[arg(long, default_value = "example_sec6")]
    pub config: String,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Do not print the summary.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the basal schedule plus the configured pulses.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Extra pulse as `time:magnitude`; repeatable.
        #[arg(long = "pulse", value_parser = parse_pulse)]
        pulses: Vec<(f64, f64)>,
    },
    /// Proper bolus magnitude at one delivery time.
    SolveBolus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_prime: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Sweep delivery times and certify the optimal one.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Sweep range as `lo:hi:step`.
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<(f64, f64, f64)>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Peak against floor at a fixed delivery time.
    Seesaw {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_prime: Option<f64>,
        /// Floors as `l1,l2,...` (strictly increasing).
        #[arg(long, value_parser = parse_list)]
        lambda: Option<FloatList>,
    },
    /// Sequential multi-pulse plan and interlacing check.
    Multipulse {
        #[command(flatten)]
        common: Common,
        /// Delivery times as `t1,t2,...`.
        #[arg(long, value_parser = parse_list)]
        times: Option<FloatList>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Append one delivery time in `lo:hi`, bisected until the peaks
        /// either side of it balance.
        #[arg(long, value_parser = parse_pair)]
        balance: Option<(f64, f64)>,
    },
    /// Number of pulses after which the peak stops improving.
    Saturate {
        #[command(flatten)]
        common: Common,
        /// Candidate delivery times as `lo:hi:step`.
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<(f64, f64, f64)>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_pulses: Option<usize>,
    },
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_list(s: &str) -> Result<FloatList, String> {
    if s.trim().is_empty() {
        return Ok(FloatList(Vec::new()));
    }
    s.split(',').map(parse_f64).collect::<Result<_, _>>().map(FloatList)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match s.split(':').collect::<Vec<_>>()[..] {
        [a, b] => Ok((parse_f64(a)?, parse_f64(b)?)),
        _ => Err(format!("expected `a:b`, got `{s}`")),
    }
}

fn parse_pulse(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn parse_sweep(s: &str) -> Result<(f64, f64, f64), String> {
    match s.split(':').collect::<Vec<_>>()[..] {
        [a, b, c] => Ok((parse_f64(a)?, parse_f64(b)?, parse_f64(c)?)),
        _ => Err(format!("expected `lo:hi:step`, got `{s}`")),
    }
}

/// Runs a parsed command line and returns the summary text.
pub fn run(cli: Cli) -> Result<(String, bool), CliError> {
    let (common, name) = match &cli.command {
        Command::Simulate { common, .. } => (common, "simulate"),
        Command::SolveBolus { common, .. } => (common, "solve-bolus"),
        Command::Optimize { common, .. } => (common, "optimize"),
        Command::Seesaw { common, .. } => (common, "seesaw"),
        Command::Multipulse { common, .. } => (common, "multipulse"),
        Command::Saturate { common, .. } => (common, "saturate"),
    };
    let mut config = ScenarioConfig::load(&common.config)?;
    let out = common.out.clone();
    let quiet = common.quiet;
    apply_overrides(&mut config, &cli.command);
    std::fs::create_dir_all(&out)?;
    let header = output::header(name, &config);
    let summary = match cli.command {
        Command::Simulate { .. } => simulate(&config, &out, &header)?,
        Command::SolveBolus { .. } => solve_bolus(&config, &out, &header)?,
        Command::Optimize { .. } => optimize(&config, &out, &header)?,
        Command::Seesaw { .. } => seesaw(&config, &out, &header)?,
        Command::Multipulse { .. } => multipulse(&config, &out, &header)?,
        Command::Saturate { .. } => saturate(&config, &out, &header)?,
    };
    Ok((summary, quiet))
}

fn apply_overrides(config: &mut ScenarioConfig, command: &Command) {
    match command {
        Command::Simulate { pulses, .. } => {
            config.simulate.pulses.extend(
                pulses
                    .iter()
                    .map(|&(time, magnitude)| config::PulseEntry { time, magnitude }),
            );
        }
        Command::SolveBolus { t_prime, lambda, .. } => {
            if let Some(t) = t_prime {
                config.bolus.t_prime = *t;
            }
            if let Some(l) = lambda {
                config.scenario.lambda = *l;
            }
        }
        Command::Optimize { sweep, lambda, .. } => {
            if let Some((lo, hi, step)) = *sweep {
                config.sweep = config::SweepSection { lo, hi, step };
            }
            if let Some(l) = lambda {
                config.scenario.lambda = *l;
            }
        }
        Command::Seesaw { t_prime, lambda, .. } => {
            if let Some(t) = t_prime {
                config.seesaw.t_prime = *t;
            }
            if let Some(l) = lambda {
                config.seesaw.lambdas = l.0.clone();
            }
        }
        Command::Multipulse {
            times, lambda, balance, ..
        } => {
            if let Some(t) = times {
                config.plan.times = t.0.clone();
            }
            if let Some(l) = lambda {
                config.scenario.lambda = *l;
            }
            if let Some((lo, hi)) = *balance {
                config.plan.balance = Some([lo, hi]);
            }
        }
        Command::Saturate {
            sweep,
            lambda,
            max_pulses,
            ..
        } => {
            if let Some((lo, hi, step)) = *sweep {
                config.saturation.lo = lo;
                config.saturation.hi = hi;
                config.saturation.step = step;
            }
            if let Some(l) = lambda {
                config.scenario.lambda = *l;
            }
            if let Some(n) = max_pulses {
                config.saturation.max_pulses = *n;
            }
        }
    }
}

fn simulate(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let mut pulses = Vec::new();
    for p in &config.simulate.pulses {
        pulses.push(BolusPulse::new(p.time, p.magnitude, config.scenario.tau)?);
    }
    pulses.sort_by(|a, b| a.time.total_cmp(&b.time));
    let schedule = InputSchedule::new(sc.basal, pulses)?;
    let trace = sc.simulate(&schedule)?;
    let report = detect_extrema(&trace, &sc.tolerances);
    let mut summary = format!("basal rate: {}\n", output::num(sc.basal));
    summary.push_str(&output::extrema_text(&report));
    output::write(out, "trace.csv", &output::trace_csv(header, &trace, &schedule))?;
    output::write(out, "extrema.txt", &format!("{header}{summary}"))?;
    Ok(summary)
}

fn solve_bolus(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let floor = config.scenario.lambda;
    let sol = solve_proper_bolus(
        &sc,
        &sc.basal_schedule(),
        config.bolus.t_prime,
        config.scenario.tau,
        floor,
    )?;
    let check = verify_proper(&sol.trace, floor, sc.tolerances.value);
    let report = detect_extrema(&sol.trace, &sc.tolerances);
    let mut s = String::new();
    let _ = writeln!(s, "t_prime: {}", output::num(sol.delivery));
    let _ = writeln!(s, "u_hat: {}", output::num(sol.magnitude));
    let _ = writeln!(s, "t_min: {}", output::num(sol.t_min));
    let _ = writeln!(s, "g_min: {}", output::num(sol.g_min));
    let _ = writeln!(s, "residual: {}", output::num(sol.residual));
    let _ = writeln!(s, "bound_check: {}", output::num(sol.bound_check));
    let _ = writeln!(s, "iterations: {}", sol.iterations);
    let _ = writeln!(s, "bracket_width: {}", output::num(sol.bracket_width));
    let _ = writeln!(s, "degenerate: {}", sol.degenerate);
    let _ = writeln!(s, "proper: {}", check.passed);
    s.push_str(&output::extrema_text(&report));
    output::write(out, "trace.csv", &output::trace_csv(header, &sol.trace, &sol.schedule))?;
    output::write(out, "solution.txt", &format!("{header}{s}"))?;
    Ok(s)
}

fn optimize(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let (floor, tau) = (config.scenario.lambda, config.scenario.tau);
    let sw = config.sweep;
    let sweep = sweep_delivery_times(&sc, tau, floor, sw.lo, sw.hi, sw.step)?;
    output::write(out, "sweep.csv", &output::sweep_csv(header, &sweep))?;
    let Some(t_best) = sweep.t_opt else {
        return Err(CliError::NoBracket(format!(
            "no delivery time in [{}, {}] admits a proper bolus",
            sw.lo, sw.hi
        )));
    };
    let lo = (t_best - sw.step).max(sw.lo);
    let hi = (t_best + sw.step).min(sw.hi);
    let opt = find_optimal_time(&sc, tau, floor, lo, hi)?;
    let e = &opt.evaluation;
    let mut s = String::new();
    let _ = writeln!(s, "sweep argmin: {}", output::num(t_best));
    let _ = writeln!(s, "t_prime_opt: {}", output::num(opt.t_prime));
    let _ = writeln!(s, "u_hat: {}", output::num(e.solution.magnitude));
    let _ = writeln!(s, "gamma: {}", output::num(e.report.gamma));
    let _ = writeln!(s, "grid step: {}", output::num(opt.dt));
    let _ = writeln!(s, "evaluations: {}", opt.evaluations);
    let _ = writeln!(s, "certificate: {}", opt.certificate.kind);
    let witnesses: Vec<String> = opt.certificate.witness_times.iter().map(|&t| output::num(t)).collect();
    let _ = writeln!(s, "witness times: {}", witnesses.join(", "));
    let _ = writeln!(s, "balance residual: {}", output::num(opt.certificate.balance_residual));
    s.push_str(&output::extrema_text(&e.report));
    output::write(
        out,
        "optimal_trace.csv",
        &output::trace_csv(header, &e.solution.trace, &e.solution.schedule),
    )?;
    output::write(out, "certificate.txt", &format!("{header}{s}"))?;
    Ok(s)
}

fn seesaw(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let points = seesaw_curve(&sc, config.seesaw.t_prime, config.scenario.tau, &config.seesaw.lambdas)?;
    output::write(out, "seesaw.csv", &output::seesaw_csv(header, &points))?;
    let mut s = String::new();
    for p in &points {
        let _ = writeln!(
            s,
            "lambda {:>8.3}  u_hat {:.10}  gamma {:.6}",
            p.floor, p.magnitude, p.gamma
        );
    }
    Ok(s)
}

fn multipulse(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let (floor, tau) = (config.scenario.lambda, config.scenario.tau);
    let times = &config.plan.times;
    if times.is_empty() && config.plan.balance.is_none() {
        return Err(CliError::Config("no delivery times given".into()));
    }
    let plan = match config.plan.balance {
        Some([lo, hi]) => balance_last_delivery(&sc, tau, floor, times, lo, hi)?.plan,
        None => plan_sequential(&sc, tau, floor, times)?,
    };
    let n = plan.pulses.len();
    output::write(out, "plan.csv", &output::plan_csv(header, &plan))?;
    output::write(
        out,
        "trace.csv",
        &output::trace_csv(header, &plan.trace, &plan.schedule),
    )?;
    let mut s = String::new();
    for (i, p) in plan.pulses.iter().enumerate() {
        let _ = write!(
            s,
            "pulse {i}: t_prime {} u_hat {}",
            output::num(p.t_prime),
            output::num(p.magnitude)
        );
        match p.reason() {
            Some(r) => {
                let _ = writeln!(s, " (zero: {r})");
            }
            None => s.push('\n'),
        }
    }
    let _ = writeln!(s, "gamma: {}", output::num(plan.gamma()));
    let _ = writeln!(s, "proper: {}", plan.proper.passed);
    let _ = writeln!(s, "global extrema: {}", plan.global_count);
    match check_interlacing(&plan, n) {
        Ok(cert) => {
            let seq: Vec<String> = cert
                .sequence
                .iter()
                .map(|&(max, t)| format!("{} {t:.3}", if max { "max" } else { "min" }))
                .collect();
            let _ = writeln!(s, "interlacing: certified ({} extrema: {})", seq.len(), seq.join(", "));
        }
        Err(r) => {
            let _ = writeln!(s, "interlacing: rejected ({r})");
        }
    }
    output::write(out, "interlacing.txt", &format!("{header}{s}"))?;
    if plan.partial {
        return Err(CliError::PartialPlan(s));
    }
    Ok(s)
}

fn saturate(config: &ScenarioConfig, out: &Path, header: &str) -> Result<String, CliError> {
    let sc = config.scenario()?;
    let sat = config.saturation;
    let result = find_saturating_count(
        &sc,
        config.scenario.tau,
        config.scenario.lambda,
        sat.lo,
        sat.hi,
        sat.step,
        sat.max_pulses,
    )?;
    let mut csv = String::from(header);
    csv.push_str("n,gamma,times\n");
    let mut s = String::new();
    for step in &result.steps {
        let times: Vec<String> = step.times.iter().map(|&t| output::num(t)).collect();
        let _ = writeln!(csv, "{},{},{}", step.pulses, output::num(step.gamma), times.join(";"));
        let _ = writeln!(s, "N = {}: gamma {:.6} at {:?}", step.pulses, step.gamma, step.times);
    }
    output::write(out, "saturation.csv", &csv)?;
    let _ = writeln!(
        s,
        "M = {}{}",
        result.count,
        if result.saturated { "" } else { " (not saturated)" }
    );
    Ok(s)
}
