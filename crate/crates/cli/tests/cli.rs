use std::path::Path;
use std::process::{Command, Output};

use nlsfem_cli::field_io::read_field;
use serde_json::Value;

fn nlsfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL_RITZ: &str = r#"{
    "mesh_level": 3,
    "tau_rel": 0.25,
    "init": {"kind": "ritz", "function": {"kind": "gaussian", "center": [0.5, 0], "width": 1.2, "momentum": [1, 0]}},
    "outputs": {"snapshot_times": [0.0, 0.5]}
}"#;

#[test]
fn groundstate_writes_field_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gs.json", r#"{"mesh_level": 3}"#);
    let out = dir.path().join("gs.field");
    let o = nlsfem(&["groundstate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "NLSFIELD v1");
    assert_eq!(lines[1], "level 3 domain -6.0 -6.0 6.0 6.0");
    assert_eq!(lines.len(), 2 + 81);
    assert_eq!(lines[2], "0.0 0.0");

    let (mesh, field) = read_field(&out).unwrap();
    assert_eq!(mesh.level(), 3);
    assert!(field.coeffs().iter().all(|c| c.im == 0.0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("gs.field.json")).unwrap()).unwrap();
    assert!((report["result"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(report["result"]["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn evolve_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SMALL_RITZ);
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = nlsfem(&["evolve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let read = |f: &str| std::fs::read_to_string(out.join(f)).unwrap();
        texts.push([read("conservation.csv"), read("snapshot_0.field"), read("snapshot_1.field"), read("final.field")]);
    }
    assert_eq!(texts[0], texts[1]);

    let csv = &texts[0][0];
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("step,time,mass,energy,fp_iters,residual"));
    // tau = (2/3) 0.25 gives N = 6
    assert_eq!(rows.count(), 7);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a").join("report.json")).unwrap()).unwrap();
    assert_eq!(report["stats"]["steps"], 6);
    assert!(report["stats"]["mass_drift"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["snapshots"][1]["step"], 3);
}

#[test]
fn evolve_from_a_coarser_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let gs_cfg = write(dir.path(), "gs.json", r#"{"mesh_level": 2}"#);
    let field = dir.path().join("gs.field");
    assert_eq!(code(&nlsfem(&["groundstate", "--config", &gs_cfg, "--out", field.to_str().unwrap()])), 0);

    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{"mesh_level": 3, "tau_rel": 0.5, "init": {{"kind": "field_file", "path": {:?}}}}}"#, field),
    );
    let out = dir.path().join("out");
    let o = nlsfem(&["evolve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(out.join("conservation.csv")).unwrap();
    let mass: f64 = first.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    // prolongation is exact, so the normalized mass carries over
    assert!((mass - 1.0).abs() < 1e-12);

    let finer = write(
        dir.path(),
        "coarse.json",
        &format!(r#"{{"mesh_level": 1, "init": {{"kind": "field_file", "path": {:?}}}}}"#, field),
    );
    assert_eq!(code(&nlsfem(&["evolve", "--config", &finer, "--out-dir", out.to_str().unwrap()])), 2);
}

#[test]
fn convergence_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "study.json",
        r#"{
            "model": {"horizon": 0.25},
            "init": {"kind": "ritz", "function": {"kind": "gaussian", "center": [0, 0], "width": 1.5}},
            "study": {"levels": [2, 3], "reference_level": 4, "reference_tau": 0.02, "threads": 2}
        }"#,
    );
    let out = dir.path().join("coupled.csv");
    let o = nlsfem(&["convergence", "--mode", "coupled", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h_rel,tau_rel,err_re_l2,err_im_l2,err_re_h1,err_im_h1");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.25,0.25,"));

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("coupled.csv.json")).unwrap()).unwrap();
    assert_eq!(manifest["mode"], "coupled");
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["runs"][0]["status"], "ok");
    assert_eq!(manifest["reference"]["level"], 4);
    assert_eq!(manifest["config"]["study"]["reference_tau"], 0.02);
    // the table is reproducible from the manifest
    let e0 = manifest["runs"][0]["errors"][0].as_f64().unwrap();
    assert_eq!(lines[1].split(',').nth(2).unwrap(), format!("{e0:?}"));

    let bad = write(dir.path(), "bad.json", r#"{"study": {"levels": [2, 6], "reference_level": 6}}"#);
    assert_eq!(code(&nlsfem(&["convergence", "--mode", "space", "--config", &bad, "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&nlsfem(&["evolve", "--config", missing.to_str().unwrap(), "--out-dir", out])), 2);
    let malformed = write(dir.path(), "m.json", "{ not json");
    assert_eq!(code(&nlsfem(&["evolve", "--config", &malformed, "--out-dir", out])), 2);
    let invalid = write(dir.path(), "i.json", r#"{"tau_rel": -1}"#);
    assert_eq!(code(&nlsfem(&["groundstate", "--config", &invalid, "--out", out])), 2);
    assert_eq!(code(&nlsfem(&["check", "--suite", "everything"])), 2);

    // one Picard iteration cannot meet the tolerance on a nonlinear problem
    let starved = write(
        dir.path(),
        "s.json",
        r#"{"mesh_level": 2, "tau_rel": 0.5, "solver": {"fp_max_iter": 1},
            "init": {"kind": "ritz", "function": {"kind": "gaussian", "center": [0, 0], "width": 1, "amplitude": 2}}}"#,
    );
    let o = nlsfem(&["evolve", "--config", &starved, "--out-dir", out]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 1"));

    let o = nlsfem(&["check", "--suite", "oracles"]);
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
}
