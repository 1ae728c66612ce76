//! Acceptance suite: one test per criterion, sharing a single run of the
//! acceptance experiments. The `criterion N: PASS|FAIL` lines are written to
//! stderr directly so they show up even when test output is captured.

use std::io::Write;
use std::sync::OnceLock;

use fraclimit::acceptance::{evaluate, run_acceptance, CriterionOutcome};
use fraclimit::harness::ExperimentResult;

fn outcomes() -> &'static [CriterionOutcome] {
    static RUN: OnceLock<(Vec<ExperimentResult>, Vec<CriterionOutcome>)> = OnceLock::new();
    &RUN.get_or_init(|| {
        let (results, outcomes) = run_acceptance().expect("acceptance experiments run");
        assert_eq!(evaluate(&results), outcomes);
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err);
        for o in &outcomes {
            let _ = writeln!(err, "{o}");
        }
        (results, outcomes)
    })
    .1
}

fn criterion(number: u8) {
    let outcome = outcomes()
        .iter()
        .find(|o| o.number == number)
        .expect("criterion is defined");
    println!("{outcome}");
    for c in &outcome.checks {
        println!("    [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_1_kappa_consistency() {
    criterion(1);
}

#[test]
fn criterion_2_singular_integral_matches_multiplier() {
    criterion(2);
}

#[test]
fn criterion_3_rescaled_operator_constant_frequency() {
    criterion(3);
}

#[test]
fn criterion_4_rescaled_operator_space_dependent_frequency() {
    criterion(4);
}

#[test]
fn criterion_5_a_priori_estimates() {
    criterion(5);
}

#[test]
fn criterion_6_hydrodynamic_limit_simple_operator() {
    criterion(6);
}

#[test]
fn criterion_7_hydrodynamic_limit_space_dependent_operator() {
    criterion(7);
}

#[test]
fn criterion_8_structural_identities() {
    criterion(8);
}
