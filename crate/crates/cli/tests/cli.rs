// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn nscache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nscache")).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let o = nscache(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn config(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.cfg"));
    p.to_str().unwrap().to_string()
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn model_schema() {
    let v = ok_json(&["model", "--config", &config("gc2t128mb_7nm")]);
    assert_eq!(keys(&v), ["kind", "model", "schema_version"]);
    assert_eq!((v["schema_version"].as_str(), v["kind"].as_str()), (Some("1.0"), Some("model")));
    assert_eq!(keys(&v["model"]), ["design", "mat", "objective", "ppa"]);
    let ppa = &v["model"]["ppa"];
    for k in ["area_mm2", "t_hit_s", "t_write_s", "e_hit_j", "leakage_w", "tiers", "refresh", "components"] {
        assert!(ppa.get(k).is_some(), "ppa lacks {k}");
    }
    assert_eq!(ppa["tiers"], 2);
}

#[test]
fn optimize_writes_csv_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, log) = (dir.path().join("r.csv"), dir.path().join("log.csv"));
    let v = ok_json(&["optimize", "--config", &config("edram128mb_7nm"), "--top-k", "3", "--csv", s(&csv), "--log", s(&log)]);
    let ranked = v["optimize"]["ranked"].as_array().unwrap();
    assert_eq!(ranked.len(), 3);
    let vals: Vec<f64> = ranked.iter().map(|r| r["objective_value"].as_f64().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
    let evaluated = v["optimize"]["evaluated"].as_u64().unwrap() as usize;
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), evaluated + 1);
}

#[test]
fn trace_round_trip_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, cdf) = (dir.path().join("t.trace"), dir.path().join("cdf.csv"));
    let o = nscache(&["gen-trace", "--kind", "read_write_mix", "--events", "500", "--seed", "7", "--write-fraction", "0.25", "--out", s(&trace)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 500);
    let v = ok_json(&["simulate", "--config", &config("edram128mb_7nm"), "--trace", s(&trace), "--cdf", s(&cdf)]);
    let st = &v["simulate"]["stats"];
    let n = |k: &str| st[k].as_u64().unwrap();
    assert_eq!(n("n_hits") + n("n_misses"), n("n_reads"));
    assert_eq!(n("n_reads") + n("n_write_requests"), 500);
    assert!(v["simulate"]["refresh_share"].as_f64().unwrap() > 0.0);
    assert!(std::fs::read_to_string(&cdf).unwrap().lines().count() > 1);
}

#[test]
fn compare_configs() {
    let o = nscache(&["compare", &config("sram128mb_3nm"), &config("caa128mb_3nm")]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("area") && table.contains("leakage"), "{table}");
}

#[test]
fn bad_value_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "-TechnologyInputFile: 7nm\n// note\n-Capacity (MB): banana\n").unwrap();
    let o = nscache(&["model", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "value");
    let msg = v["error"]["message"].as_str().unwrap();
    assert!(msg.contains(":3:") && msg.contains("Capacity"), "{msg}");
}

#[test]
fn usage_and_io_errors() {
    let o = nscache(&["model"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
    let o = nscache(&["model", "--config", "/definitely/not/here.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let cfg = config("stt128mb_7nm");
    let stdout = nscache(&["model", "--config", &cfg]).stdout;
    assert!(nscache(&["model", "--config", &cfg, "--out", s(&out)]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), stdout);
}
