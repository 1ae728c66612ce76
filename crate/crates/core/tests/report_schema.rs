//! Files, headers and JSON round trip of the report writer.

use std::fs;

use fraclimit::config::{ExperimentConfig, ExperimentId};
use fraclimit::harness::run_experiment;
use fraclimit::fractional::import_operator;
use fraclimit::report::{emit_report, Summary, AGGREGATE_FILE, OPERATOR_FILE, SUMMARY_FILE};

fn small(id: ExperimentId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(id);
    cfg.resolution.n_x = 16;
    cfg.resolution.n_v = 32;
    cfg.experiment.final_time = 0.05;
    cfg.experiment.epsilons = vec![0.2, 0.1, 0.05];
    cfg
}

fn header(path: &std::path::Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn leps_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(ExperimentId::LepsConvergenceThm1)).unwrap();
    let summary = emit_report(&[result], dir.path()).unwrap();
    let sub = dir.path().join("leps_convergence_thm1");
    assert_eq!(header(&sub.join("convergence.csv")), "epsilon,k,sup_error,l2_error");
    assert_eq!(header(&dir.path().join(AGGREGATE_FILE)), "experiment,table,epsilon,error");
    let aggregate = fs::read_to_string(dir.path().join(AGGREGATE_FILE)).unwrap();
    assert!(aggregate.lines().count() > 3);
    let read = Summary::read(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(read, summary);
    for f in &read.experiments[0].files {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn hydro_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(ExperimentId::HydroLimitThm1)).unwrap();
    emit_report(&[result], dir.path()).unwrap();
    let sub = dir.path().join("hydro_limit_thm1");
    assert_eq!(
        header(&sub.join("convergence.csv")),
        "epsilon,sup_error,l2_error,relative_l2_error,mass_gap"
    );
    assert_eq!(
        header(&sub.join("modes.csv")),
        "epsilon,k,re_kinetic,im_kinetic,re_limit,im_limit"
    );
    let mut names: Vec<String> = fs::read_dir(&sub)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for prefix in ["kinetic_modes_", "monitors_", "snapshots_"] {
        let matching: Vec<&String> = names.iter().filter(|n| n.starts_with(prefix)).collect();
        assert_eq!(matching.len(), 3, "{prefix}: {names:?}");
        assert!(matching.iter().any(|n| n.contains("0.05")));
    }
    let monitors = names.iter().find(|n| n.starts_with("monitors_")).unwrap();
    assert_eq!(header(&sub.join(monitors)), "t,mass,f_norm,g_norm_accum");
    let snaps = names.iter().find(|n| n.starts_with("snapshots_")).unwrap();
    assert_eq!(header(&sub.join(snaps)), "t,x,rho_eps,rho_limit");
}

#[test]
fn summary_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(SUMMARY_FILE);
    fs::write(&path, "{ not json").unwrap();
    assert!(Summary::read(&path).is_err());
}


#[test]
fn operator_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(ExperimentId::LepsConvergenceThm2)).unwrap();
    let op = result.operator.clone().expect("thm2 assembles the operator");
    let summary = emit_report(&[result], dir.path()).unwrap();
    let path = dir.path().join("leps_convergence_thm2").join(OPERATOR_FILE);
    assert!(summary.experiments[0].files.iter().any(|f| f.ends_with(OPERATOR_FILE)));
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"FLOP");
    assert_eq!(bytes.len(), 16 + 8 * 16 * 16);
    let (matrix, alpha) = import_operator(&path).unwrap();
    assert_eq!(alpha, op.alpha);
    assert_eq!(matrix, op.matrix);
}
