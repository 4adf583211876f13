use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn critnls(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critnls"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let no_solution = critnls(&["solve", "--dim", "3", "--q", "3", "--lambda", "1e-3"], d);
    assert_eq!(code(&no_solution), 13);
    assert!(String::from_utf8_lossy(&no_solution.stderr).contains("NoDecayingSolution"));
    assert_eq!(code(&critnls(&["solve", "--dim", "5", "--q", "3"], d)), 2);
    assert_eq!(code(&critnls(&["solve", "--dim", "5", "--q", "7/2", "--lambda", "1"], d)), 11);
    assert_eq!(code(&critnls(&["talenti", "--dim", "2"], d)), 10);
    assert_eq!(code(&critnls(&["solve", "--dim", "5", "--q", "3", "--lambda=-1"], d)), 12);
    assert_eq!(code(&critnls(&["solve", "--bogus"], d)), 2);
    assert_eq!(code(&critnls(&["check", "missing.csv"], d)), 24);
}

#[test]
fn solve_is_certified_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["solve", "--dim", "5", "--q", "3", "--lambda", "1e-3", "--out", "a.json"];
    let out = critnls(&args, d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    let rep = &summary["residual_report"];
    for key in ["nehari", "pohozaev"] {
        assert!(rep[key].as_f64().unwrap().abs() <= 1e-8);
    }
    let first = fs::read(d.join("a.json")).unwrap();
    assert_eq!(code(&critnls(&args, d)), 0);
    assert_eq!(fs::read(d.join("a.json")).unwrap(), first);
    let profile: Value = serde_json::from_slice(&first).unwrap();
    assert!(profile["profile"]["grid"].as_array().unwrap().len() > 100);
}

#[test]
fn fractional_exponent_and_config_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.cfg"), "# solver run\ndim=3\nq=9/2\nlambda=1e-3\n").unwrap();
    let out = critnls(&["solve", "--config", "run.cfg", "--lambda", "1e-2"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["q"], "9/2");
    assert_eq!(v["lambda"].as_f64().unwrap(), 1e-2);

    fs::write(d.join("bad.cfg"), "dim=3\nq=nine\n").unwrap();
    let out = critnls(&["solve", "--config", "bad.cfg"], d);
    assert_eq!(code(&out), 23);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["--dim", "5", "--q", "3", "--lambda-window", "1e-2:1e-1", "--points-per-decade", "2"];
    let sweep = critnls(&[&["sweep"][..], &args].concat(), d);
    assert_eq!(code(&sweep), 0);
    let text = String::from_utf8(sweep.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# dim=5"));
    assert_eq!(lines.next(), Some("# q=3.0"));
    assert_eq!(
        lines.next(),
        Some("lambda,mu0,grad_sq,l2_sq,lq,lcrit,m_lambda,delta,tau,xi,status")
    );
    assert_eq!(lines.count(), 3);

    let mass = critnls(&[&["mass"][..], &args].concat(), d);
    assert_eq!(code(&mass), 0);
    let text = String::from_utf8(mass.stdout).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "rho,omega,m_rho,lambda,lambda_model");
}

#[test]
fn failed_points_are_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "sweep", "--dim", "3", "--q", "3", "--lambda-window", "1e-3:1e-2",
        "--points-per-decade", "3", "--out", "s.csv",
    ];
    assert_eq!(code(&critnls(&args, d)), 0);
    let text = fs::read_to_string(d.join("s.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(3).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",NoDecayingSolution")));
}

#[test]
fn talenti_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = critnls(&["talenti", "--dim", "5", "--q", "3"], dir.path());
    assert_eq!(code(&out), 0);
    let v = json(&out);
    // S = π N(N-2) (Γ(N/2)/Γ(N))^{2/N} with Γ(5/2) = 3√π/4 and Γ(5) = 24
    let gamma_ratio = 0.75 * std::f64::consts::PI.sqrt() / 24.0;
    let s = std::f64::consts::PI * 15.0 * gamma_ratio.powf(0.4);
    let m0 = s.powf(2.5) / 5.0;
    assert!((v["m0"].as_f64().unwrap() - m0).abs() < 1e-10 * m0);
    assert!(v["rho0"].as_f64().unwrap() > 0.0);

    let out = critnls(&["talenti", "--dim", "4", "--q", "3"], dir.path());
    assert_eq!(json(&out)["norms"]["l2_sq"], "infinite");
}

#[test]
fn check_passes_then_fails_on_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "sweep", "--dim", "5", "--q", "3", "--lambda-window", "1e-3:1e-1",
        "--points-per-decade", "6", "--out", "s.csv",
    ];
    assert_eq!(code(&critnls(&args, d)), 0);
    let out = critnls(&["check", "s.csv", "--checks", "theorem1", "--report", "r.json"], d);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&fs::read(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);

    // scale the l2_sq column by λ^{1/2}, shifting its exponent by one half
    let text = fs::read_to_string(d.join("s.csv")).unwrap();
    let mut out_text = String::new();
    for (i, line) in text.lines().enumerate() {
        if i < 3 {
            out_text.push_str(line);
        } else {
            let mut f: Vec<String> = line.split(',').map(String::from).collect();
            let lambda: f64 = f[0].parse().unwrap();
            let l2: f64 = f[3].parse().unwrap();
            f[3] = format!("{:.16e}", l2 * lambda.sqrt());
            out_text.push_str(&f.join(","));
        }
        out_text.push('\n');
    }
    fs::write(d.join("bad.csv"), out_text).unwrap();
    let out = critnls(&["check", "bad.csv", "--checks", "theorem1"], d);
    assert_eq!(code(&out), 30);
    let failing = json(&out)["failing"].clone();
    assert!(failing.as_array().unwrap().iter().any(|f| f == "theorem1:l2_sq"), "{failing}");

    let broken = text.replacen(",ok", ",ok,extra", 1);
    fs::write(d.join("broken.csv"), broken).unwrap();
    let out = critnls(&["check", "broken.csv"], d);
    assert_eq!(code(&out), 23);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}
