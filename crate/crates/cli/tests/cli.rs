use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const ROUND: &str = r#"{"base": "sphere", "K": 1}"#;
const ROUND_RP2: &str = r#"{"base": "rp2", "K": 1}"#;
const SLACK_BUMP: &str = r#"{"base": "sphere", "K": 1, "conformal": [
    {"type": "constant", "value": -0.04},
    {"type": "bump", "center": [1.2, 0.5], "width": 1.0, "height": 0.002}
]}"#;
const DIPPING: &str = r#"{"base": "sphere", "K": 1, "conformal": [
    {"type": "bump", "center": [1.0, 0.3], "width": 0.5, "height": 0.05}
]}"#;

fn spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn lglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lglab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.split("\r\n")
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

#[test]
fn profile_tables_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, range, model) in [
        (
            "s.json",
            ROUND,
            "0.1:0.9:0.1",
            (|v: f64| (v * (1.0 - v)).sqrt()) as fn(f64) -> f64,
        ),
        ("p.json", ROUND_RP2, "0.1:0.5:0.1", |v: f64| (v * (2.0 - v)).sqrt()),
    ] {
        let s = spec(dir.path(), name, text);
        let out = dir.path().join(format!("{name}.csv"));
        let o = lglab(&[
            "profile",
            "--spec",
            s.to_str().unwrap(),
            "--volumes",
            range,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("v,area,normalized,model_value,margin,witness_kind,refined\r\n"));
        let rows = csv_rows(&text);
        assert_eq!(rows.len(), if name == "s.json" { 9 } else { 5 });
        for r in rows {
            let v: f64 = r[0].parse().unwrap();
            let normalized: f64 = r[2].parse().unwrap();
            assert!((normalized - model(v)).abs() < 1e-3, "{name} {v} {normalized}");
        }
    }
}

#[test]
fn malformed_spec_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(dir.path(), "bad.json", "{\n  \"base\": \"sphere\",\n  \"K\": ,\n}");
    let out = dir.path().join("out.csv");
    let o = lglab(&["profile", "--spec", s.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!out.exists());

    let odd = spec(
        dir.path(),
        "odd.json",
        r#"{"base": "rp2", "K": 1, "conformal": [{"type": "harmonic", "l": 3, "m": 1, "coeff": 0.01}]}"#,
    );
    let o = lglab(&["rp2", "--spec", odd.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = lglab(&["profile", "--spec", s.to_str().unwrap(), "--volumes", "0:1:0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_lg_verdicts_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let round = spec(dir.path(), "s.json", ROUND);
    let o = lglab(&[
        "check-lg",
        "--spec",
        round.to_str().unwrap(),
        "--volumes",
        "0.2:0.8:0.3",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(r["verdict"], "PASS");
    for e in r["results"]["entries"].as_array().unwrap() {
        assert!(e["margin"].as_f64().unwrap().abs() <= 1e-3);
    }

    let rp2 = spec(dir.path(), "p.json", ROUND_RP2);
    let o = lglab(&[
        "check-lg",
        "--spec",
        rp2.to_str().unwrap(),
        "--volumes",
        "0.2:0.8:0.3",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    for e in r["results"]["entries"].as_array().unwrap() {
        assert!(e["margin"].as_f64().unwrap() > 0.0);
    }

    let dip = spec(dir.path(), "d.json", DIPPING);
    let o = lglab(&["check-lg", "--spec", dip.to_str().unwrap(), "--volumes", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn variation_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let round = spec(dir.path(), "s.json", ROUND);
    let o = lglab(&["variation", "--spec", round.to_str().unwrap(), "--v", "0.5", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let bound = r["results"]["bound"].as_f64().unwrap();
    assert!((bound + 0.07958).abs() < 1e-5);
    assert!(r["results"]["measured_slope"].as_f64().unwrap() <= -0.0716);
}

#[test]
fn rigidity_conclusions_and_witness_file() {
    let dir = tempfile::tempdir().unwrap();
    let round = spec(dir.path(), "s.json", ROUND);
    let o = lglab(&[
        "rigidity",
        "--spec",
        round.to_str().unwrap(),
        "--volumes",
        "0.3",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&o)["verdict"], "NoAdmissibleDescentFound");

    let bump = spec(dir.path(), "b.json", SLACK_BUMP);
    let w = dir.path().join("witness.json");
    let o = lglab(&[
        "rigidity",
        "--spec",
        bump.to_str().unwrap(),
        "--volumes",
        "0.3",
        "--points",
        "4",
        "--witness",
        w.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let witness: Value = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    assert_eq!(witness["certificate"]["verdict"], "Admissible");
    assert!(witness["slope"].as_f64().unwrap() < 0.0);
    assert_eq!(witness["revalidated"]["valid"], true);
}

#[test]
fn rp2_identities() {
    let dir = tempfile::tempdir().unwrap();
    let rp2 = spec(dir.path(), "p.json", ROUND_RP2);
    let o = lglab(&["rp2", "--spec", rp2.to_str().unwrap(), "--volumes", "0.25:0.5:0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let ratio: f64 = rows[1][3].parse().unwrap();
    assert!((ratio - 0.5).abs() < 1e-6);
    let up: f64 = rows[1][1].parse().unwrap();
    assert!((up - 0.4330).abs() < 1e-3);

    let round = spec(dir.path(), "s.json", ROUND);
    let o = lglab(&["rp2", "--spec", round.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let rp2 = spec(dir.path(), "p.json", ROUND_RP2);
    let bump = spec(dir.path(), "b.json", SLACK_BUMP);
    let runs: [&[&str]; 5] = [
        &["profile", "--spec", bump.to_str().unwrap(), "--volumes", "0.2:0.4:0.2"],
        &["check-lg", "--spec", bump.to_str().unwrap(), "--volumes", "0.3"],
        &["variation", "--spec", bump.to_str().unwrap(), "--v", "0.3"],
        &[
            "rigidity",
            "--spec",
            bump.to_str().unwrap(),
            "--volumes",
            "0.3",
            "--points",
            "2",
        ],
        &["rp2", "--spec", rp2.to_str().unwrap(), "--volumes", "0.3"],
    ];
    for args in runs {
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["--grid", "64x128", "--json"]);
        let first = lglab(&a);
        let second = lglab(&a);
        assert!(first.status.code().is_some_and(|c| c != 2), "{args:?}");
        assert!(!first.stdout.is_empty());
        assert_eq!(first.stdout, second.stdout, "{args:?}");
        let r = report(&first);
        assert_eq!(r["spec_digest"].as_str().unwrap().len(), 64);
        assert!(r.get("timings_ms").is_none());
        assert!(r["tolerances"]["aperture_tol"].is_f64());
    }
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let round = spec(dir.path(), "s.json", ROUND);
    let o = Command::new(env!("CARGO_BIN_EXE_lglab"))
        .args(["profile", "--spec", round.to_str().unwrap(), "--volumes", "0.5"])
        .env("LGLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_lglab"))
        .args([
            "profile",
            "--spec",
            round.to_str().unwrap(),
            "--volumes",
            "0.5",
            "--grid",
            "32x64",
        ])
        .env("LGLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
