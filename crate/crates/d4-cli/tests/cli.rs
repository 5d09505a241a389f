use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn d4sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d4sim")).args(args).output().expect("run d4sim")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn error_json(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().last().expect("error line");
    serde_json::from_str(line).expect("error json")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("d4sim-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn dry_run_reports_costs() {
    let v = json(&d4sim(&["prepare", "--size", "3x3", "--variant", "compiled", "--dry-run"]));
    assert_eq!(v["two_qubit_gates"], 78);
    assert_eq!(v["peak_register"], 30);
    let v = json(&d4sim(&["prepare", "--variant", "naive", "--dry-run"]));
    assert_eq!(v["two_qubit_gates"], 108);
    assert_eq!(v["peak_register"], 36);
}

#[test]
fn sector_list_has_22_admissible() {
    let v = json(&d4sim(&["sectors", "--list"]));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 64);
    assert_eq!(rows.iter().filter(|r| r["admissible"] == true).count(), 22);
    assert_eq!(rows.iter().filter(|r| r["admissible"] == false).count(), 42);
}

#[test]
fn exact_prepare_is_a_ground_state() {
    let v = json(&d4sim(&["prepare", "--mode", "exact"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["scalars"]["energy_density"], -1.0);
    assert_eq!(v["scalars"]["pinning"], 1.0);
    for e in v["stars"].as_array().unwrap().iter().chain(v["triangles"].as_array().unwrap()) {
        assert!((e["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(e["sem"], 0.0);
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["prepare", "--mode", "sampled", "--noisy", "--shots", "40", "--seed", "12"];
    let a = d4sim(&args);
    let b = d4sim(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = d4sim(&["prepare", "--mode", "sampled", "--noisy", "--shots", "40", "--seed", "13"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn unsupported_size_is_a_usage_error() {
    let out = d4sim(&["borromean", "--size", "2x2", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "usage");
    assert_eq!(e["error"]["exit_code"], 2);
}

#[test]
fn bad_flags_exit_2_with_json() {
    for args in [&["prepare", "--sector", "12"][..], &["nonsense"], &["prepare", "--size", "3by3"], &["fidelity-bound", "--expectations", "0.9,0.8"]] {
        let out = d4sim(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&out)["error"]["kind"], "usage");
    }
}

#[test]
fn memory_limit_is_a_resource_error() {
    let out = d4sim(&["prepare", "--max-memory-mb", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "resource");
}

#[test]
fn out_of_range_expectation_is_rejected() {
    let out = d4sim(&["fidelity-bound", "--expectations", "1.2,0.5,0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fidelity_bound_from_values() {
    let v = json(&d4sim(&["fidelity-bound", "--expectations", "0.94,0.89,0.93", "--sites", "27"]));
    assert!((v["bounds"]["lower"].as_f64().unwrap() - 0.76).abs() < 1e-9);
    assert!((v["bounds"]["per_site_lower"].as_f64().unwrap() - 0.990).abs() < 1e-3);
}

#[test]
fn borromean_exact_phase_is_pi() {
    let v = json(&d4sim(&["borromean", "--mode", "exact"]));
    assert!((v["scalars"]["phase"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    let v = json(&d4sim(&["borromean", "--rings", "rb"]));
    assert!(v["scalars"]["phase"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn single_anyon_and_stabilizers_agree() {
    let a = json(&d4sim(&["single-anyon"]));
    let b = json(&d4sim(&["stabilizers", "--apply", "RH,GV"]));
    assert_eq!(a["stars"], b["stars"]);
    assert_eq!(a["scalars"]["negative_stars"], 1.0);
}

#[test]
fn config_file_sits_under_flags() {
    let cfg = tmp("config.json");
    std::fs::write(&cfg, r#"{"sector": "100100", "seed": 4}"#).unwrap();
    let v = json(&d4sim(&["prepare", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["seed"], 4);
    assert_eq!(v["sector"]["signs"], serde_json::json!([-1, 1, 1, -1, 1, 1]));
    let v = json(&d4sim(&["prepare", "--config", cfg.to_str().unwrap(), "--sector", "000000"]));
    assert_eq!(v["sector"]["signs"], serde_json::json!([1, 1, 1, 1, 1, 1]));
    std::fs::write(&cfg, r#"{"sectr": "100100"}"#).unwrap();
    assert_eq!(d4sim(&["prepare", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn noise_file_is_read_and_validated() {
    let f = tmp("noise.json");
    std::fs::write(&f, r#"{"p_depol2": 0.0, "p_read_0given1": 0.0, "p_read_1given0": 0.0, "depol_enabled": true, "readout_enabled": true}"#).unwrap();
    let v = json(&d4sim(&["prepare", "--mode", "sampled", "--shots", "20", "--noise", f.to_str().unwrap()]));
    assert_eq!(v["scalars"]["energy_density"], -1.0);
    assert_eq!(v["noise"]["p_depol2"], 0.0);
    std::fs::write(&f, r#"{"p_depol2": 1.5, "p_read_0given1": 0.0, "p_read_1given0": 0.0, "depol_enabled": true, "readout_enabled": true}"#).unwrap();
    assert_eq!(d4sim(&["prepare", "--noise", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn forced_outcomes() {
    let v = json(&d4sim(&["prepare", "--force-ancilla-outcomes", "1=1,5=1"]));
    assert_eq!(v["scalars"]["energy_density"], -1.0);
    let out = d4sim(&["prepare", "--force-ancilla-outcomes", "1=1,5=0,6=0"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sectors_csv_has_one_row_per_ground_state() {
    let csv = tmp("sectors.csv");
    let v = json(&d4sim(&["sectors", "--csv", csv.to_str().unwrap(), "--threads", "1"]));
    assert_eq!(v.as_array().unwrap().len(), 22);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + 9 + 18 + 6 + 2);
    assert_eq!(lines.count(), 22);
}

#[test]
fn braid_subcommand() {
    let v = json(&d4sim(&["braid", "--named", "green-around-blue"]));
    assert_eq!(v["cross_check"]["agree"], true);
    let spec = tmp("braid.json");
    let named = json(&d4sim(&["braid", "--named", "create-move-fuse", "--dry-run"]));
    std::fs::write(&spec, named.to_string()).unwrap();
    let v = json(&d4sim(&["braid", "--spec", spec.to_str().unwrap()]));
    let last = v["segments"].as_array().unwrap().last().unwrap().clone();
    assert!((last["scalars"]["return_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn degeneracy_scan_subcommand() {
    let v = json(&d4sim(&["degeneracy-scan", "--trials", "44", "--seed", "2"]));
    assert_eq!(v["forbidden_count"], 0);
    assert_eq!(v["histogram"].as_array().unwrap().len(), 64);
    let total: u64 = v["histogram"].as_array().unwrap().iter().map(|h| h["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 44);
}

#[test]
fn anyon_table_fusion() {
    let v = json(&d4sim(&["anyon-table", "--fuse", "m_B,m_B"]));
    let names: Vec<&str> = v["fusion"].as_array().unwrap().iter().map(|p| p[0].as_str().unwrap()).collect();
    assert_eq!(names, ["1", "e_R", "e_G", "e_RG"]);
    assert_eq!(v["total_dim_sq"], 64);
    assert_eq!(v["reference_mismatches"], 0);
    assert_eq!(d4sim(&["anyon-table", "--fuse", "m_B,q"]).status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let v = json(&d4sim(&["selftest"]));
    assert_eq!(v["passed"], true);
}

#[test]
fn threads_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_d4sim")).args(["sectors", "--list"]).env("D4SIM_THREADS", "2").output().unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_d4sim")).args(["prepare", "--dry-run"]).env("D4SIM_THREADS", "x").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
