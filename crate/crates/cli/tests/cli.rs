use std::process::{Command, Output};

use bec_core::ideal_gas::{GapSpec, ThermoState};
use bec_core::meanfield_gas::{mf_condensation_threshold, mf_solve, CouplingParams};
use serde_json::Value;

const GAUSS: [&str; 6] = ["--model", "gaussian", "--v0", "1", "--sigma", "1"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bec-kit")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bec-kit"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn with_gauss<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&GAUSS);
    v
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn gaussian_potential_passes() {
    let o = run(&with_gauss(&["potential-check", "--no-meta"]));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["pass"], true);
    let a = v["A"].as_f64().unwrap();
    assert!((a - (2.0 * std::f64::consts::PI).powf(1.5)).abs() < 1e-12);
    assert_eq!(v["B"].as_f64().unwrap(), 0.5);
    assert_eq!(v["units"], "reduced: hbar^2/2m=1, kB=1");
    assert!(v.get("meta").is_none());
}

#[test]
fn missing_table_is_an_error() {
    let o = run(&["potential-check", "--model", "table", "--table", "/nonexistent/table.dat"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn square_well_table_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("well.dat");
    std::fs::write(&p, "# r v(r)\n0 1\n1 1\n1.001 0\n").unwrap();
    let o = run(&["potential-check", "--model", "table", "--table", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["pass"], false);
    assert!(v["offending_q"].as_f64().unwrap() > 0.0);
}

#[test]
fn bound_eval_reports_terms() {
    let o = run(&with_gauss(&[
        "bound", "eval", "--beta", "1", "--mu", "10", "--g", "1", "--delta", "50", "--rho-gapless", "rigorous",
    ]));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let terms = v["terms"].as_object().unwrap();
    let names: Vec<&str> = terms.keys().map(String::as_str).collect();
    assert_eq!(
        names,
        ["mu_term", "quadratic_pbg_term", "linear_pbg_term", "v0_term", "critical_term"]
    );
    let sum: f64 = terms.values().map(|t| t.as_f64().unwrap()).sum();
    let lb = v["lower_bound"].as_f64().unwrap();
    assert!((sum - lb).abs() < 1e-14);
    assert_eq!(v["valid"], true);
    assert!(v["rho_gapless_used"].as_f64().unwrap() > 0.0);
}

#[test]
fn bound_eval_user_density_and_reference_gap() {
    let o = run(&with_gauss(&[
        "bound", "eval", "--beta", "1", "--mu", "5", "--g", "1", "--delta", "20", "--delta0", "0.1", "--dim", "1",
        "--rho-gapless", "0.3", "--no-meta",
    ]));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["form"], "reference_gap");
    assert_eq!(v["rho_gapless_used"].as_f64().unwrap(), 0.3);
    assert!(v["lower_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn zero_gap_is_a_domain_error() {
    let o = run(&with_gauss(&["bound", "eval", "--beta", "1", "--mu", "10", "--g", "1", "--delta", "0"]));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn delta_min_precondition_and_success() {
    let o = run(&with_gauss(&["bound", "delta-min", "--beta", "1", "--mu", "0.5", "--g", "1", "--eta", "0.01"]));
    assert_eq!(code(&o), 2);
    let o = run(&with_gauss(&["bound", "delta-min", "--beta", "1", "--mu", "10", "--g", "1", "--eta", "0.01"]));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["bound_at_delta_min"].as_f64().unwrap() >= 0.01);
    assert!(v["delta_min"].as_f64().unwrap() > 0.0);
    assert_eq!(v["sample_based"], true);
}

fn sweep_args(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v = vec![
        "bound", "sweep", "--beta", "1", "--g", "1", "--sweep", "mu=2:12:6", "--sweep", "delta=1:40:4",
        "--rho-gapless", "0.5", "--no-meta",
    ];
    v.extend_from_slice(&GAUSS);
    v.extend_from_slice(extra);
    v
}

#[test]
fn bound_sweep_csv_layout_and_determinism() {
    let a = run_env(&sweep_args(&[]), "BEC_KIT_THREADS", "1");
    let b = run_env(&sweep_args(&[]), "BEC_KIT_THREADS", "4");
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# units: reduced: hbar^2/2m=1, kB=1");
    assert_eq!(lines.next().unwrap(), "beta,mu,g,delta,lower_bound,valid,rho_gapless_used");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24);
    // mu varies slower than delta
    assert!(rows[0].starts_with("1,2,1,1,"));
    assert!(rows[1].starts_with("1,2,1,14,"));
    assert!(rows[4].starts_with("1,4,1,1,"));
}

#[test]
fn bound_sweep_writes_file_with_meta() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sweep.csv");
    let mut args: Vec<&str> = sweep_args(&[]).into_iter().filter(|a| *a != "--no-meta").collect();
    args.extend(["--output", p.to_str().unwrap()]);
    let o = run(&args);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# meta:"));
}

#[test]
fn meanfield_matches_library() {
    let o = run(&["meanfield", "--beta", "1", "--mu", "2", "--g", "1", "--lambda", "1", "--delta", "1", "--no-meta"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let s = mf_solve(
        ThermoState::new(1.0, 2.0, 3).unwrap(),
        CouplingParams::new(1.0, 1.0).unwrap(),
        GapSpec::new(1.0).unwrap(),
    )
    .unwrap();
    assert_eq!(v["rho_condensate"].as_f64().unwrap(), s.rho_condensate);
    assert_eq!(v["pressure"].as_f64().unwrap(), s.pressure);
    assert_eq!(v["condensed"], true);
}

#[test]
fn meanfield_at_threshold_is_normal() {
    let c = CouplingParams::new(1.0, 1.0).unwrap();
    let mu = mf_condensation_threshold(1.0, c, GapSpec::new(1.0).unwrap(), 3).unwrap();
    let mu_s = format!("{mu}");
    let o = run(&["meanfield", "--beta", "1", "--mu", &mu_s, "--g", "1", "--delta", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["condensed"], false);
    assert_eq!(v["rho_condensate"].as_f64().unwrap(), 0.0);
}

#[test]
fn meanfield_sweep_is_continuous() {
    let o = run(&["meanfield", "--beta", "1", "--g", "1", "--delta", "1", "--sweep", "mu=-2:0:201", "--no-meta"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "mu,rho_total,rho_condensate,mu_eff,pressure,condensed");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 201);
    let dens: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let jump = dens.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    assert!(jump < 0.02, "largest density step {jump}");
    assert!(rows.iter().any(|r| r[5] == "true") && rows.iter().any(|r| r[5] == "false"));
}

#[test]
fn infinite_threshold_is_a_token() {
    let o = run(&["meanfield", "--beta", "1", "--mu", "0.5", "--g", "1", "--delta", "0", "--dim", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["threshold_mu"], "inf");
}

#[test]
fn verify_default_suite_passes() {
    let o = run(&["verify", "--no-meta"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["pass"] == true));
    for p in checks[1]["pairs"].as_array().unwrap() {
        assert!(p["lower_margin"].as_f64().unwrap() >= -1e-12);
        assert!(p["upper_margin"].as_f64().unwrap() >= -1e-12);
    }
}

#[test]
fn verify_capacity_overflow_exits_one() {
    let o = run(&["verify", "--sides", "6,200"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("capacity"), "{err}");
    assert!(err.contains("sides"), "{err}");
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.conf");
    std::fs::write(&p, "beta = 1\nmu = 7\ng = 1\ndelta = 1\nlambda = 1\nno_meta = true\n").unwrap();
    let conf = p.to_str().unwrap();
    let from_file = json(&run(&["meanfield", "--config", conf]));
    assert_eq!(from_file["parameters"]["mu"].as_f64().unwrap(), 7.0);
    assert!(from_file.get("meta").is_none());
    let overridden = json(&run(&["meanfield", "--config", conf, "--mu", "3"]));
    assert_eq!(overridden["parameters"]["mu"].as_f64().unwrap(), 3.0);
}

#[test]
fn bad_thread_count_and_usage_exit_one() {
    let o = run_env(&["meanfield", "--beta", "1", "--mu", "1", "--g", "1"], "BEC_KIT_THREADS", "zero");
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["bound", "eval", "--beta", "1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn csv_only_for_sweeps() {
    let o = run(&with_gauss(&["potential-check", "--format", "csv"]));
    assert_eq!(code(&o), 1);
}
