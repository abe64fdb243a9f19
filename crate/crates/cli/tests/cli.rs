use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-dg-lab"))
        .args(args)
        .env("STOKES_DG_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn convergence_study_writes_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("reports/space");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4,8],
                "temporal_levels":[1],"coupling":"coupled_tau_h2","output":{:?}}}"#,
            base.to_str().unwrap()
        ),
    );
    let out = lab(&["study", "convergence", "--config", &config, "--norm", "l2l2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).trim_end().ends_with("PASS"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/space.json")).unwrap()).unwrap();
    assert_eq!(json["kind"], "convergence");
    assert_eq!(json["config"]["norms"], serde_json::json!(["l2l2"]));
    assert_eq!(json["environment"]["threads"], 2);
    assert_eq!(json["passed"], true);

    let csv = std::fs::read_to_string(dir.path().join("reports/space.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("kind,family,n,M,h,tau,status,message,l2l2,"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"problem":"heat_mode","equation":"heat","w":0,"spatial_levels":[16],
            "temporal_levels":[1,2,4],"coupling":"refine_time_only"}"#,
    );
    let base = dir.path().join("dg1");
    let out = lab(&[
        "study",
        "convergence",
        "--config",
        &config,
        "--w",
        "1",
        "--norm",
        "l2l2",
        "--output",
        base.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dg1.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["w"], 1);
    assert_eq!(json["orders"][0]["expected"], 2.0);
}

#[test]
fn failing_criteria_give_exit_code_one() {
    // Space refinement against a single time interval stalls on the
    // temporal error, so the expected spatial order is not observed.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"problem":"heat_mode","equation":"heat","w":0,"spatial_levels":[4,8,16],
            "temporal_levels":[1],"coupling":"refine_space_only","norms":["l2l2"]}"#,
    );
    let out = lab(&["study", "convergence", "--config", &config]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("below expected"));
    assert!(stdout(&out).trim_end().ends_with("FAIL"));
}

#[test]
fn probe_runs_and_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4,8],
            "temporal_levels":[1],"coupling":"refine_space_only"}"#,
    );
    let out = lab(&["study", "probe", "--kind", "infsup", "--config", &config]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("check infsup_spread"));
}

#[test]
fn invalid_inputs_give_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4],
            "temporal_levels":[1],"coupling":"refine_space_only"}"#,
    );
    let wrong_equation = lab(&["study", "convergence", "--config", &config, "--equation", "heat"]);
    assert_eq!(wrong_equation.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&wrong_equation.stderr).contains("not a Heat problem"));

    let leray_lshape = write_config(
        dir.path(),
        r#"{"problem":"stokes_vortex_lshape","equation":"stokes","domain":"l_shape","w":0,
            "spatial_levels":[2,4],"temporal_levels":[1],"coupling":"refine_space_only"}"#,
    );
    assert_eq!(lab(&["study", "probe", "--kind", "leray_h1", "--config", &leray_lshape]).status.code(), Some(2));

    assert_eq!(lab(&["study", "probe", "--kind", "nope", "--config", &config]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(lab(&["study", "convergence", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let unknown_field = write_config(dir.path(), r#"{"problem":"heat_mode","equation":"heat","bogus":1}"#);
    assert_eq!(lab(&["study", "convergence", "--config", &unknown_field]).status.code(), Some(2));
}

#[test]
fn mesh_dump_writes_json_arrays() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("mesh.json");
    let out = lab(&["mesh", "dump", "--domain", "l_shape", "--n", "2", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["vertices"].as_array().unwrap().len(), 21);
    assert_eq!(json["triangles"].as_array().unwrap().len(), 24);

    let bad = lab(&["mesh", "dump", "--domain", "unit_square", "--n", "0", "--out", out_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
