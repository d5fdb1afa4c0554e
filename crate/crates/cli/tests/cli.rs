use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_compatkit"));
    cmd.env_remove("COMPATKIT_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn hl_interval_boundary() {
    let v = json(&run(&["interval", "--mean", "1", "--sigma", "1", "--n", "1", "--lo", "-1", "--hi", "1", "--method", "hl"]));
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["command"], "interval");
    let p = v["result"]["p"].as_f64().unwrap();
    assert!((p - 0.5228).abs() < 5e-5, "{p}");
    assert_eq!(v["inputs"]["method"], "hl");
}

#[test]
fn tost_minimum() {
    let v = json(&run(&["equivalence", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-1", "--hi", "1", "--method", "tost"]));
    assert!((v["result"]["p"].as_f64().unwrap() - 0.158_655_3).abs() < 1e-7);
    let v = json(&run(&["equivalence", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-1", "--hi", "1", "--method", "divergence"]));
    assert!((v["result"]["p"].as_f64().unwrap() - 0.317_310_5).abs() < 1e-7);
}

#[test]
fn svalue_and_bound() {
    let v = json(&run(&["svalue", "--p", "1"]));
    assert_eq!(v["result"]["s"].as_f64().unwrap(), 0.0);
    let v = json(&run(&["svalue", "--p", "0.0625"]));
    assert!((v["result"]["s"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(v["result"]["coin_tosses"], 4);
    let v = json(&run(&["svalue", "--p", "0"]));
    assert_eq!(v["result"]["s"], "inf");
    let v = json(&run(&["bfbound", "--p", "0.05"]));
    assert!((v["result"]["bf_lower_bound"].as_f64().unwrap() - 0.4072).abs() < 1e-3);
}

#[test]
fn numbers_carry_full_precision() {
    let out = run(&["point", "--mean", "1", "--sigma", "1", "--n", "1", "--m", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // 3.1731050786291404e-1
    assert!(text.contains("\"p\":3.17310507862914"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    let mut floats = Vec::new();
    collect_float_literals(&text, &mut floats);
    assert!(!floats.is_empty());
    for f in floats {
        let mantissa = f.split(['e', 'E']).next().unwrap().replace(['-', '.'], "");
        assert!(mantissa.len() >= 10, "{f}");
    }
    assert!(v["result"]["p"].is_f64());
}

fn collect_float_literals(text: &str, out: &mut Vec<String>) {
    let mut cur = String::new();
    let mut in_string = false;
    for c in text.chars() {
        if c == '"' {
            in_string = !in_string;
        }
        if !in_string && (c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')) {
            cur.push(c);
        } else {
            if cur.contains('.') {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
}

#[test]
fn quiet_drops_inputs_only() {
    let loud = json(&run(&["point", "--mean", "0.3", "--sigma", "1", "--n", "4", "--m", "0"]));
    let quiet = json(&run(&["--quiet", "point", "--mean", "0.3", "--sigma", "1", "--n", "4", "--m", "0"]));
    assert!(quiet.get("inputs").is_none());
    assert_eq!(loud["result"], quiet["result"]);
}

#[test]
fn from_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["interval", "--mean", "0.4", "--sigma", "2", "--n", "9", "--lo", "-inf", "--hi", "0", "--method", "divergence"],
        vec!["equivalence", "--mean", "0.1", "--sigma", "1", "--n", "3", "--lo", "-1", "--hi", "1"],
        vec!["svalue", "--p", "0.2", "--base", "10"],
        vec!["curve", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-2", "--hi", "2", "--steps", "5", "--pi", "0.1", "--format", "json"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let first = run(args);
        assert!(first.status.success());
        let saved = write(dir.path(), &format!("out{i}.json"), std::str::from_utf8(&first.stdout).unwrap());
        let again = run(&["--from-json", s(&saved)]);
        assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
        assert_eq!(first.stdout, again.stdout, "case {i}");
    }
}

#[test]
fn from_json_needs_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--quiet", "svalue", "--p", "0.5"]);
    let saved = write(dir.path(), "q.json", std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(run(&["--from-json", s(&saved)]).status.code(), Some(2));
}

#[test]
fn curve_csv() {
    let out = run(&["curve", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-3", "--hi", "3", "--steps", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,p,s2"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert_eq!(rows[3][1], 1.0);
    assert!((rows[2][1] - 0.317_310_5).abs() < 1e-7);
}

#[test]
fn curve_with_interval() {
    let v = json(&run(&[
        "curve", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-3", "--hi", "3", "--steps", "7", "--pi", "0.05",
        "--format", "json",
    ]));
    let ci = &v["result"]["interval"];
    assert!((ci["hi"].as_f64().unwrap() - 1.959_964).abs() < 1e-6);
    assert!((ci["lo"].as_f64().unwrap() + 1.959_964).abs() < 1e-6);
    let out = run(&["curve", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "-3", "--hi", "3", "--steps", "7", "--pi", "0.05"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\npi,lo,hi,empty\n"));
}

#[test]
fn invalid_inputs_exit_2() {
    assert_eq!(run(&["interval", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "2", "--hi", "1"]).status.code(), Some(2));
    assert_eq!(run(&["point", "--mean", "0", "--sigma", "-1", "--n", "1", "--m", "0"]).status.code(), Some(2));
    assert_eq!(run(&["interval", "--mean", "0", "--sigma", "1", "--n", "1", "--lo", "0", "--hi", "1", "--method", "tost"]).status.code(), Some(2));
    assert_eq!(run(&["svalue", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    let out = run(&["glm", "fit", "--family", "poisson", "--design", "/nonexistent.csv", "--response", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

fn glm_files(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        write(dir, "xa.csv", "1,0\n1,1\n1,2\n1,3\n"),
        write(dir, "xm.csv", "1\n1\n1\n1\n"),
        write(dir, "y.csv", "2\n3\n6\n7\n"),
    )
}

#[test]
fn glm_fit_poisson() {
    let dir = tempfile::tempdir().unwrap();
    let (xa, _, y) = glm_files(dir.path());
    for principle in ["ml", "pearson", "gls"] {
        let v = json(&run(&["glm", "fit", "--family", "poisson", "--design", s(&xa), "--response", s(&y), "--principle", principle]));
        assert_eq!(v["result"]["fit"]["principle"], principle);
        assert_eq!(v["result"]["statistics"]["df"], 2);
        let mu: Vec<f64> = serde_json::from_value(v["result"]["fit"]["mu"].clone()).unwrap();
        if principle == "ml" {
            // ML with an intercept reproduces the total.
            assert!((mu.iter().sum::<f64>() - 18.0).abs() < 1e-9);
        }
    }
}

#[test]
fn glm_compare_all_methods() {
    let dir = tempfile::tempdir().unwrap();
    let (xa, xm, y) = glm_files(dir.path());
    let mut stats = Vec::new();
    for method in ["lr", "score", "wald"] {
        let v = json(&run(&[
            "glm", "compare", "--family", "poisson", "--design-a", s(&xa), "--design-m", s(&xm), "--response", s(&y),
            "--method", method,
        ]));
        let cmp = &v["result"]["comparison"];
        assert_eq!(cmp["df"], 1);
        stats.push(cmp["statistic"].as_f64().unwrap());
    }
    assert!(stats.iter().all(|t| *t > 2.0 && *t < 6.0), "{stats:?}");
    let not_nested = run(&[
        "glm", "compare", "--family", "poisson", "--design-a", s(&xm), "--design-m", s(&xa), "--response", s(&y),
    ]);
    assert_eq!(not_nested.status.code(), Some(2));
}

#[test]
fn glm_gaussian_and_binomial() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,0\n1,1\n1,2\n");
    let y = write(dir.path(), "y.csv", "0.1\n1.2\n1.9\n");
    let cov = write(dir.path(), "cov.csv", "1,0,0\n0,2,0\n0,0,1\n");
    let v = json(&run(&["glm", "fit", "--family", "gaussian", "--design", s(&x), "--response", s(&y), "--cov", s(&cov)]));
    let st = &v["result"]["statistics"];
    assert!((st["pearson"].as_f64().unwrap() - st["deviance"].as_f64().unwrap()).abs() < 1e-10);
    assert_eq!(run(&["glm", "fit", "--family", "gaussian", "--design", s(&x), "--response", s(&y)]).status.code(), Some(2));

    let yb = write(dir.path(), "yb.csv", "1\n4\n8\n");
    let t = write(dir.path(), "t.csv", "10\n10\n10\n");
    let v = json(&run(&["glm", "fit", "--family", "binomial", "--design", s(&x), "--response", s(&yb), "--trials", s(&t)]));
    assert_eq!(v["result"]["fit"]["converged"], true);
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,0\n1,1\n1,2\n1,3\n");
    let y = write(dir.path(), "y.csv", "0\n0\n1\n1\n");
    let t = write(dir.path(), "t.csv", "1\n1\n1\n1\n");
    let out = run(&["glm", "fit", "--family", "binomial", "--design", s(&x), "--response", s(&y), "--trials", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    let xr = write(dir.path(), "xr.csv", "1,1\n1,1\n1,1\n1,1\n");
    let yr = write(dir.path(), "yr.csv", "1\n2\n3\n4\n");
    let out = run(&["glm", "fit", "--family", "poisson", "--design", s(&xr), "--response", s(&yr)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scheffe_command() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = write(dir.path(), "s.csv", "1,0\n0,1\n");
    let v = json(&run(&["scheffe", "--ybar", "0.3,-0.2", "--sigma", s(&sigma), "--n", "20"]));
    let r = &v["result"];
    assert_eq!(r["df"], 2);
    assert!((r["statistic"].as_f64().unwrap() - 2.6).abs() < 1e-12);
}

#[test]
fn simulate_seed_precedence_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mu_true":0,"sigma":1,"n":10,"hypothesis":{"kind":"at_most","m":0},"reps":3000,"seed":5}"#,
    );
    let a = json(&run(&["simulate", "pdist", "--config", s(&cfg)]));
    let b = json(&run(&["simulate", "pdist", "--config", s(&cfg)]));
    assert_eq!(a, b);
    assert_eq!(a["inputs"]["seed"], 5);
    let flag = json(&run(&["simulate", "pdist", "--config", s(&cfg), "--seed", "6"]));
    assert_eq!(flag["result"]["config"]["seed"], 6);
    let env = json(&bin().args(["simulate", "pdist", "--config", s(&cfg)]).env("COMPATKIT_SEED", "6").output().unwrap());
    assert_eq!(env["result"], flag["result"]);
    assert_ne!(a["result"], flag["result"]);
    let both = json(&bin().args(["simulate", "pdist", "--config", s(&cfg), "--seed", "7"]).env("COMPATKIT_SEED", "6").output().unwrap());
    assert_eq!(both["result"]["config"]["seed"], 7);
    let mass = a["result"]["report"]["mass_at_one"].as_f64().unwrap();
    assert!((mass - 0.5).abs() < 0.05);
}

#[test]
fn simulate_size_and_power() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        dir.path(),
        "g.json",
        r#"{"base":{"mu_true":0,"sigma":1,"n":4,"hypothesis":{"kind":"interval","lo":-1,"hi":1},"reps":2000,"seed":3,"thresholds":[0.05]},"n":[4,16,64]}"#,
    );
    let v = json(&run(&["simulate", "size", "--config", s(&grid)]));
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let rates: Vec<f64> = rows.iter().map(|r| r["rejection_rates"][0]["rate"].as_f64().unwrap()).collect();
    assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "{rates:?}");

    let power = write(
        dir.path(),
        "p.json",
        r#"{"alt":0,"interval":{"kind":"interval","lo":-50,"hi":0},"sigma":1,"n":1,"reps":4000,"seed":1}"#,
    );
    let v = json(&run(&["simulate", "power", "--config", s(&power), "--target-power", "0.8"]));
    let r = &v["result"];
    assert!((r["config"]["alt"].as_f64().unwrap() - 2.486_474_86).abs() < 1e-6);
    assert!(r["report"]["power_hl"].as_f64().unwrap() >= r["report"]["power_divergence"].as_f64().unwrap());
    let bad = write(dir.path(), "bad.json", "{not json");
    assert_eq!(run(&["simulate", "pdist", "--config", s(&bad)]).status.code(), Some(2));
}
