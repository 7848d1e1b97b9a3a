use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn glucopt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glucopt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// Data rows of a CSV with `#` header lines, split on commas, without the
/// column row.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(path: &Path, i: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[i].parse().unwrap()).collect()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            l.strip_prefix(key)
                .map(|v| v.trim_start_matches(':').trim().to_string())
        })
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn malformed_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[scenario]\nlambda = \n").unwrap();
    let out = glucopt(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    fs::write(&bad, "[scenario]\nlamda = 80.0\n").unwrap();
    let out = glucopt(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));

    let out = glucopt(&["simulate", "--config", "no/such/file.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn steady_config_gives_constant_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["simulate", "--config", "no_meal", "--quiet"], dir.path());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let g = column(&dir.path().join("trace.csv"), 1);
    assert_eq!(g.len(), 20001);
    assert!(g.iter().all(|g| (g - 100.0).abs() < 1e-6));
}

#[test]
fn unbolused_meal_rises_above_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["simulate", "--config", "example_sec6"], dir.path());
    assert!(out.status.success());
    let g = column(&dir.path().join("trace.csv"), 1);
    assert!(g.iter().all(|&g| g >= 100.0 - 1e-9));
    assert!(g.iter().copied().fold(0.0, f64::max) > 250.0);

    let out = glucopt(&["simulate", "--pulse", "445:1.2061278308"], dir.path());
    assert!(out.status.success());
    let g = column(&dir.path().join("trace.csv"), 1);
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((min - 80.0).abs() < 0.05, "{min}");
}

#[test]
fn outputs_are_deterministic_and_carry_the_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = glucopt(&["solve-bolus", "--t-prime", "450", "--lambda", "85"], dir.path());
        assert!(out.status.success());
    }
    for name in ["trace.csv", "solution.txt"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let text = fs::read_to_string(a.path().join("trace.csv")).unwrap();
    assert!(text.starts_with("# glucopt solve-bolus\n"));
    assert!(text.contains("# [model]"));
    assert!(text.contains("# lambda = 85.0"));
    assert!(text.contains("# t_prime = 450.0"));
    assert!(text.contains("\nt,g,x,h,w,u\n"));
}

#[test]
fn seesaw_flag_gives_increasing_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["seesaw", "--lambda", "70,80,90"], dir.path());
    assert!(out.status.success());
    let gamma = column(&dir.path().join("seesaw.csv"), 2);
    assert_eq!(gamma.len(), 3);
    assert!(gamma.windows(2).all(|w| w[1] > w[0]));

    let out = glucopt(&["seesaw", "--lambda", "80,70"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_matches_single_pulse_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["optimize"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = String::from_utf8(out.stdout).unwrap();
    let t_opt = value(&cert, "t_prime_opt");
    let u_opt = value(&cert, "u_hat");
    assert!((440.0..=450.0).contains(&t_opt));
    assert!(cert.contains("certificate: max between minima"));
    let sweep = rows(&dir.path().join("sweep.csv"));
    assert_eq!(sweep.len(), 35);
    assert!(sweep.iter().all(|r| r.len() == 6));

    let t = format!("{t_opt}");
    let out = glucopt(&["multipulse", "--times", &t], dir.path());
    assert!(out.status.success());
    let plan = rows(&dir.path().join("plan.csv"));
    let u: f64 = plan[0][2].parse().unwrap();
    assert!((u - u_opt).abs() <= 2e-8, "{u} vs {u_opt}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("interlacing: certified (3 extrema"), "{text}");
}

#[test]
fn optimize_without_meals_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(
        &["optimize", "--config", "no_meal", "--sweep", "400:500:50"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(value(&text, "u_hat"), 0.0);
    assert!(text.contains("certificate: constant trace"));
    let g = column(&dir.path().join("optimal_trace.csv"), 1);
    assert!(g.iter().all(|g| (g - 100.0).abs() < 1e-6));
}

#[test]
fn sweep_missing_the_optimum_has_no_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["optimize", "--sweep", "350:370:10"], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn two_meal_plan_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["multipulse", "--config", "two_meal"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("interlacing: certified (5 extrema"), "{text}");
    let plan = rows(&dir.path().join("plan.csv"));
    assert_eq!(plan.len(), 2);
    assert!(plan.iter().all(|r| r[3] == "false"));
}

#[test]
fn multipulse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["multipulse", "--times", ""], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = glucopt(&["multipulse", "--times", "500,400"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let capped = dir.path().join("capped.toml");
    fs::write(&capped, "[tolerances]\nbolus_cap = 0.5\n").unwrap();
    let out = glucopt(
        &["multipulse", "--config", capped.to_str().unwrap(), "--times", "445"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = rows(&dir.path().join("plan.csv"));
    assert_eq!(plan[0][3], "true");
}

#[test]
fn later_pulse_after_single_meal_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let out = glucopt(&["multipulse", "--times", "444.9,1200"], dir.path());
    assert!(out.status.success());
    let plan = rows(&dir.path().join("plan.csv"));
    assert_eq!(plan[1][3], "true");
    assert!(plan[1][4].contains("g(0)"));
}
