use std::process::{Command, Output};

use serde_json::Value;

fn fedosov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedosov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn tensors_for_the_magnetic_form() {
    let out = fedosov(&["tensors", "--model", "form7", "--point", "0.3,-0.7,1.1,0.2,0.5,-0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["nonzero"]["connection_lower"], 18);
    assert_eq!(v["nonzero"]["curvature_upper"], 54);
    assert_eq!(v["nonzero"]["ricci"], 0);
    assert!(v["scalar_curvature"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn tensors_for_the_standard_form_vanish() {
    let v = json(&fedosov(&["tensors", "--model", "standard", "--point", "1,2,-3,4"]));
    for key in ["d_omega", "connection_lower", "curvature_upper", "ricci"] {
        assert_eq!(v["nonzero"][key], 0, "{key}");
    }
    assert_eq!(v["omega"][0][2], -1.0);
}

#[test]
fn tensors_on_the_slice_print_references() {
    let v = json(&fedosov(&["tensors", "--model", "form6", "--point", "0,1,0,0,2,0"]));
    let r = &v["reference"];
    assert!(r["ricci_11"].is_f64());
    assert!(r["ricci_11_slice_reference"].is_f64());
    assert!((r["ricci_11_closed_form"].as_f64().unwrap() - r["ricci_11"].as_f64().unwrap()).abs() < 1e-8);
}

#[test]
fn domain_violation_exits_2_with_report() {
    let out = fedosov(&["tensors", "--model", "form7", "--point", "0,0,0,1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("singularity_report") && err.contains("near_q_origin"));
}

#[test]
fn free_particle_endpoint() {
    let out = fedosov(&["simulate", "--model", "standard", "--state", "0,0,0,1,0,0", "--step", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let end: Vec<f64> = serde_json::from_value(json(&out)["final_state"].clone()).unwrap();
    let want = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    assert!(end.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-10));
}

#[test]
fn monopole_run_writes_csv_with_drifts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = fedosov(&[
        "simulate", "--model", "form7", "--state", "1,0,0,0,1,0", "--method", "rk45", "--tol", "1e-10", "--t-end", "5",
        "--out", path.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_energy_drift"].as_f64().unwrap() < 1e-9);
    assert!(v["max_speed_drift"].as_f64().unwrap() < 1e-8);
    assert!(v["max_poincare_drift"].as_f64().unwrap() < 1e-7);
    let traj = fedosov::export::read_trajectory(&path, fedosov::export::Format::Csv).unwrap();
    assert_eq!(traj.final_time(), Some(5.0));
    assert!(traj.diagnostics[0].contains_key("poincare_drift"));
}

#[test]
fn malformed_state_exits_1() {
    let out = fedosov(&["simulate", "--model", "form7", "--state", "1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("usage"));
    let out = fedosov(&["simulate", "--model", "form7", "--state", "1,x,0,0,1,0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = fedosov(&["tensors", "--model", "form9", "--point", "1,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn singular_encounter_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.jsonl");
    let out = fedosov(&[
        "simulate", "--model", "form7", "--state", "0.05,0,0,-1,0,0", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let traj = fedosov::export::read_trajectory(&path, fedosov::export::Format::Jsonl).unwrap();
    assert!(traj.len() > 1);
    assert!(traj.final_time().unwrap() < 1.0);
}

#[test]
fn verify_report_is_deterministic() {
    let a = fedosov(&["verify", "--only", "c02", "--seed", "9"]);
    let b = fedosov(&["verify", "--only", "c02", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    let (mut a, mut b) = (json(&a), json(&b));
    assert!(a.get("timestamp").is_some());
    a.as_object_mut().unwrap().remove("timestamp");
    b.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(a, b);
    assert_eq!(a["seed"], 9);
    let ids: Vec<&str> = a["results"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(ids, sorted);
    for r in a["results"].as_array().unwrap() {
        for key in ["id", "tolerance", "observed", "pass", "informational"] {
            assert!(r.get(key).is_some());
        }
    }
}

#[test]
fn informational_mismatches_do_not_fail_verify() {
    let out = fedosov(&["verify", "--only", "ref."]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let results = v["results"].as_array().unwrap();
    assert!(results.iter().all(|r| r["informational"] == true));
    assert!(results.iter().any(|r| r["pass"] == false));
}

#[test]
fn compare_reports_each_branch() {
    let out = fedosov(&["compare", "--state", "1,0.2,-0.3,0.1,0.6,0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["comparisons"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["variant"], "A");
    assert!(rows[0]["max_divergence"].as_f64().unwrap() < 1e-6);
    assert_eq!(rows[2]["branch"], "mirror");

    let free = json(&fedosov(&["compare", "--alpha", "0", "--state", "1,0.2,-0.3,0.1,0.6,0.2"]));
    assert!(free["comparisons"][0]["max_divergence"].as_f64().unwrap() < 1e-14);
}

#[test]
fn compare_near_origin_exits_3() {
    let out = fedosov(&["compare", "--state", "0.05,0,0,-1,0,0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "standard", "state": [0, 0, 1, 0], "step": 0.5, "t_end": 3.0}"#).unwrap();
    let out = fedosov(&["simulate", "--config", cfg.to_str().unwrap(), "--t-end", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["final_time"], 2.0);
    assert_eq!(v["final_state"][0], 2.0);

    std::fs::write(&cfg, r#"{"modle": "standard"}"#).unwrap();
    let out = fedosov(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
