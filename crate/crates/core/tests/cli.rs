mod support;

use std::path::Path;
use std::process::{Command, Output};

fn dmlab(args: &[&str], scenario: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dmlab"));
    cmd.args(args);
    if let Some(s) = scenario {
        cmd.arg("--scenario").arg(s);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

#[test]
fn shipped_ex_first_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = dmlab(&["run"], Some(&support::scenario_dir().join("verify_ex_first.scn")), Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "#schema=1");
    // header plus one row per battery member
    assert_eq!(lines.len(), 2 + 12);
}

#[test]
fn variant_triple_fails() {
    let o = dmlab(&["run"], Some(&support::scenario_dir().join("variant_mismatch.scn")), None);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().skip(2).any(|l| l.ends_with(",false")));
}

#[test]
fn unknown_family_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    std::fs::write(
        &path,
        r#"{"scenarios": [{"name": "typo", "pipeline": "verify", "family": "exfirst", "triple": "ex_first"}]}"#,
    )
    .unwrap();
    let o = dmlab(&["run"], Some(&path), None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scenarios[0].family"), "{err}");
    assert!(err.contains("exfirst"), "{err}");
}

#[test]
fn syntax_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    std::fs::write(&path, "{\n  \"scenarios\": [\n    {\"name\": }\n  ]\n}\n").unwrap();
    let o = dmlab(&["run"], Some(&path), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn envelope_subcommand() {
    let o = dmlab(&["envelope", "--psi", "square", "--s0", "1", "--s0", "-0.5", "-N", "8", "-M", "2"], None, None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "s0,N,M,value");
    assert_eq!(lines[2], "1.0,8,2,1.0");
    assert_eq!(lines[3], "-0.5,8,2,0.25");
}

#[test]
fn lsc_subcommand() {
    let o = dmlab(
        &["lsc", "--family", "sawtooth", "--triple", "sawtooth", "--integrand", "s_sq", "--k-max", "10"],
        None,
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("scenario,integrand,gap,condition_value,verdict"));
    assert_eq!(text.lines().nth(2), Some("sawtooth,s_sq,1.0,0.0,satisfied"));
}

#[test]
fn seed_override_is_deterministic() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_dmlab"))
            .args(["envelope", "--s0", "0.3", "-N", "16", "-M", "6"])
            .env("LAB_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("0x1234"), run("4660"));
}

#[test]
fn bad_quadrature_order() {
    let o = dmlab(&["catalog", "--quad-order", "0"], None, None);
    assert_eq!(o.status.code(), Some(2));
}
