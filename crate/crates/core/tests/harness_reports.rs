use stokes_dg::harness::{
    read_json, run_convergence_study, run_probe, write_csv, write_report, CellStatus, ProbeKind, ReportKind,
    StudyConfig,
};

fn config(json: &str) -> StudyConfig {
    StudyConfig::from_json(json).unwrap()
}

fn small_space_study() -> StudyConfig {
    config(
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4],
            "temporal_levels":[4],"coupling":"refine_space_only"}"#,
    )
}

#[test]
fn json_round_trip_compares_equal() {
    let report = run_convergence_study(&small_space_study()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = write_report(&report, &dir.path().join("nested/study")).unwrap();
    assert!(csv.ends_with("study.csv") && json.ends_with("study.json"));
    assert_eq!(read_json(&json).unwrap(), report);
}

#[test]
fn reports_are_byte_deterministic() {
    let cfg = small_space_study();
    let dir = tempfile::tempdir().unwrap();
    let (a_csv, a_json) = write_report(&run_convergence_study(&cfg).unwrap(), &dir.path().join("a")).unwrap();
    let (b_csv, b_json) = write_report(&run_convergence_study(&cfg).unwrap(), &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(a_csv).unwrap(), std::fs::read(b_csv).unwrap());
    assert_eq!(std::fs::read(a_json).unwrap(), std::fs::read(b_json).unwrap());
}

#[test]
fn empty_study_writes_header_only_csv() {
    let mut report = run_probe(
        ProbeKind::Infsup,
        &config(
            r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2],
                "temporal_levels":[1],"coupling":"refine_space_only"}"#,
        ),
    )
    .unwrap();
    report.rows.clear();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_csv(&report, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "kind,family,n,M,h,tau,status,message,beta\n");
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let report = run_convergence_study(&small_space_study()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    write_csv(&report, &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header = reader.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "l2l2").unwrap();
    for (rec, row) in reader.records().zip(&report.rows) {
        let rec = rec.unwrap();
        let field = &rec[col];
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
        assert_eq!(field.parse::<f64>().unwrap(), row.value("l2l2").unwrap());
        assert_eq!(&rec[0], "convergence");
    }
}

#[test]
fn failed_cells_are_recorded_and_the_study_continues() {
    let cfg = config(
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4],
            "temporal_levels":[2],"coupling":"refine_space_only",
            "tolerances":{"solver_rel_tol":1e-300,"order_slack":0.2,"bound_factor":1.5,"infsup_spread":0.1}}"#,
    );
    let report = run_convergence_study(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert_eq!(row.status, CellStatus::Failed);
        assert!(row.message.as_deref().unwrap().contains("did not converge"), "{:?}", row.message);
        assert!(row.values.is_empty());
    }
    assert!(!report.passed);
    assert!(report.orders.iter().all(|o| o.passed == Some(false)));
}

#[test]
fn heat_studies_reject_stokes_only_probes() {
    let heat = config(
        r#"{"problem":"heat_mode","equation":"heat","w":0,"spatial_levels":[2,4],
            "temporal_levels":[2],"coupling":"refine_space_only"}"#,
    );
    assert!(run_probe(ProbeKind::Stability, &heat).is_err());
    assert!(run_probe(ProbeKind::Infsup, &heat).is_err());
    assert!(run_probe(ProbeKind::LerayH1, &heat).is_err());
    let report = run_probe(ProbeKind::Bestapprox, &heat).unwrap();
    assert_eq!(report.kind, ReportKind::Bestapprox);
    assert!(report.rows.iter().all(|r| r.status == CellStatus::Ok));
}

#[test]
fn stability_rows_carry_lhs_over_rhs() {
    let cfg = config(
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":0,"spatial_levels":[2,4],
            "temporal_levels":[2,4],"coupling":"tensor"}"#,
    );
    let report = run_probe(ProbeKind::Stability, &cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        let (lhs, rhs) = (row.value("lhs").unwrap(), row.value("rhs").unwrap());
        assert!((row.value("ratio").unwrap() - lhs / rhs).abs() <= 1e-15 * (lhs / rhs));
    }
    assert!(report.checks.iter().all(|c| c.passed), "{:?}", report.checks);
}
