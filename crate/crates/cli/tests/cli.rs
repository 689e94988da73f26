use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phaseless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phaseless")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn frame_gen_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let p = path.to_str().unwrap();
    let out = phaseless(&["frame", "gen", "--n", "2", "--m", "8", "--seed", "4", "--out", p]);
    assert!(out.status.success());
    let frame: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(frame["m"], 8);

    let again = phaseless(&["frame", "gen", "--n", "2", "--m", "8", "--seed", "4"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap().trim(), std::fs::read_to_string(&path).unwrap());

    let check = json(&phaseless(&["frame", "check", p]));
    assert_eq!(check["full_spark"], true);
    assert_eq!(check["certificate"]["verdict"], "Retrievable");
}

#[test]
fn real_frame_check_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "f.json",
        r#"{"n":2,"m":2,"field":"real","vectors":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    let check = json(&phaseless(&["frame", "check", &f]));
    assert_eq!(check["certificate"]["verdict"], "NotRetrievable");
    assert!(check["certificate"]["witness"].is_object());
}

#[test]
fn recon_from_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
            "schema": "phaseless-experiment/1",
            "frame": {"source": "ensemble", "n": 2, "m": 8, "ensemble": "gaussian", "seed": 1, "per_trial": true},
            "task": "reconstruct",
            "algorithms": ["lifted"],
            "trials": 3,
            "seed": 7
        }"#,
    );
    let a = json(&phaseless(&["recon", "--config", &cfg, "--algorithms", "lifted,wirtinger-flow"]));
    assert_eq!(a["records"].as_array().unwrap().len(), 6);
    assert_eq!(a["aggregates"][0]["success_rate"], 1.0);

    let b = json(&phaseless(&["recon", "--config", &cfg, "--algorithms", "lifted,wirtinger-flow"]));
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(a), strip(b));

    let csv = phaseless(&["recon", "--config", &cfg, "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("algorithm,level,count"));
}

#[test]
fn report_recomputes_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = out.to_str().unwrap();
    let run = phaseless(&[
        "sweep", "--n", "2", "--m", "6", "--trials", "4", "--seed", "3", "--algorithms", "lifted", "--levels", "0,0.05",
        "--out", o,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let agg = json(&phaseless(&["report", o]));
    assert_eq!(agg["aggregates"], saved["aggregates"]);
    let csv = phaseless(&["report", o, "--format", "csv", "--records"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 1 + 8 + 1);
}

#[test]
fn crlb_and_bounds_verbs() {
    let crlb = phaseless(&[
        "crlb", "--n", "2", "--m", "5", "--trials", "20", "--algorithms", "lifted", "--levels", "0.01,0.02", "--format",
        "csv",
    ]);
    assert!(crlb.status.success(), "{}", String::from_utf8_lossy(&crlb.stderr));
    let text = String::from_utf8(crlb.stdout).unwrap();
    assert!(text.starts_with("level,trace_crlb,mse_lifted,trials"));

    let bounds = json(&phaseless(&["bounds", "--n", "2", "--m", "8", "--seed", "2", "--budget", "500000"]));
    let rec = &bounds["records"][0];
    assert!(rec["a0_lower"].as_f64().unwrap() > 0.0);
    assert!(rec["bounds"]["B0"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let missing = phaseless(&["recon", "--frame", "/nonexistent/f.json", "--algorithms", "lifted"]);
    assert_eq!(missing.status.code(), Some(2));
    let no_frame = phaseless(&["recon", "--algorithms", "lifted"]);
    assert_eq!(no_frame.status.code(), Some(2));
    let bad_flag = phaseless(&["recon", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "f.json", r#"{"n":2,"m":2,"field":"complex","vectors":[[[1,0],[0,0]],[[2,0],[0,0]]]}"#);
    assert_eq!(phaseless(&["frame", "check", &bad]).status.code(), Some(3));

    let f = dir.path().join("big.json");
    let gen = phaseless(&["frame", "gen", "--n", "6", "--m", "30", "--out", f.to_str().unwrap()]);
    assert!(gen.status.success());
    let capped = phaseless(&["frame", "check", f.to_str().unwrap(), "--spark-cap", "10"]);
    assert_eq!(capped.status.code(), Some(4));
}
