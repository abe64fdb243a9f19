//! Kept in its own binary: it mutates the thread-count environment variable.

use stokes_dg::harness::{run_convergence_study, StudyConfig, StudyReport, THREADS_ENV};

#[test]
fn thread_count_does_not_change_results() {
    let cfg = StudyConfig::from_json(
        r#"{"problem":"stokes_vortex_exp","equation":"stokes","w":1,"spatial_levels":[2,4],
            "temporal_levels":[1,2],"coupling":"coupled_tau_h2"}"#,
    )
    .unwrap();
    let run = |threads: &str| -> StudyReport {
        std::env::set_var(THREADS_ENV, threads);
        let r = run_convergence_study(&cfg).unwrap();
        std::env::remove_var(THREADS_ENV);
        r
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.environment.threads, 1);
    assert_eq!(four.environment.threads, 4);
    assert_eq!(one.rows, four.rows);
    assert_eq!(one.orders, four.orders);
    assert_eq!(one.passed, four.passed);
}
