//! The acceptance suite: fixed experiment configs and the criteria they gate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::Result;
use crate::harness::{run_experiment, Check, ExperimentResult};

/// Criterion number, short title.
pub const CRITERIA: [(u8, &str); 8] = [
    (1, "kappa consistency"),
    (2, "singular integral vs Fourier multiplier"),
    (3, "rescaled operator convergence, constant frequency"),
    (4, "rescaled operator convergence, space-dependent frequency"),
    (5, "a priori estimates"),
    (6, "hydrodynamic limit, simple operator"),
    (7, "hydrodynamic limit, space-dependent operator"),
    (8, "structural identities"),
];

/// Configs of the acceptance runs.
pub fn acceptance_configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();

    let mut c = ExperimentConfig::new(ExperimentId::OperatorConsistency);
    c.resolution.n_x = 256;
    c.resolution.images = 64;
    c.experiment.modes = vec![1, 2, 3];
    out.push(c);

    let c = ExperimentConfig::new(ExperimentId::LepsConvergenceThm1);
    out.push(c);

    let mut c = ExperimentConfig::new(ExperimentId::LepsConvergenceThm2);
    c.resolution.n_x = 32;
    c.resolution.n_v = 256;
    out.push(c);

    let c = ExperimentConfig::new(ExperimentId::AprioriEstimates);
    out.push(c);

    let c = ExperimentConfig::new(ExperimentId::HydroLimitThm1);
    out.push(c);

    let mut c = ExperimentConfig::new(ExperimentId::HydroLimitThm2);
    c.resolution.n_v = 256;
    c.resolution.dt_factor = 0.05;
    out.push(c);

    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub number: u8,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        write!(
            f,
            "criterion {}: {} ({}) [{} checks",
            self.number,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len()
        )?;
        if failed.is_empty() {
            write!(f, "]")
        } else {
            write!(f, "; failed:")?;
            for c in failed {
                write!(f, " {} ({});", c.name, c.detail)?;
            }
            write!(f, "]")
        }
    }
}

/// Groups the checks of `results` by criterion. A criterion without any
/// check counts as failed.
pub fn evaluate(results: &[ExperimentResult]) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|&(number, title)| {
            let checks: Vec<Check> = results
                .iter()
                .flat_map(|r| r.checks.iter())
                .filter(|c| c.criterion == Some(number))
                .cloned()
                .collect();
            CriterionOutcome {
                number,
                title: title.into(),
                passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
                checks,
            }
        })
        .collect()
}

/// Runs every acceptance experiment.
pub fn run_acceptance() -> Result<(Vec<ExperimentResult>, Vec<CriterionOutcome>)> {
    let results = acceptance_configs()
        .iter()
        .map(run_experiment)
        .collect::<Result<Vec<_>>>()?;
    let outcomes = evaluate(&results);
    Ok((results, outcomes))
}
