//! Experiment configuration files (TOML).
//!
//! ```toml
//! [experiment]
//! id = "hydro_limit_thm1"
//! alpha = 1.0
//! epsilons = [0.2, 0.1, 0.05, 0.025]
//! final_time = 1.0
//! output = "out/hydro_thm1"
//!
//! [resolution]
//! n_x = 64
//! n_v = 128
//!
//! [model]
//! kind = "smooth"
//! amplitude = 0.5
//! nu1 = 0.5
//! nu2 = 1.5
//!
//! [thresholds]
//! endpoint_max = 0.1
//! ```
//!
//! Every section except `[experiment]` is optional; omitted thresholds take
//! the acceptance values of the selected experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibria::CollisionProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    LepsConvergenceThm1,
    LepsConvergenceThm2,
    HydroLimitThm1,
    HydroLimitThm2,
    AprioriEstimates,
    OperatorConsistency,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::LepsConvergenceThm1,
        ExperimentId::LepsConvergenceThm2,
        ExperimentId::HydroLimitThm1,
        ExperimentId::HydroLimitThm2,
        ExperimentId::AprioriEstimates,
        ExperimentId::OperatorConsistency,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::LepsConvergenceThm1 => "leps_convergence_thm1",
            ExperimentId::LepsConvergenceThm2 => "leps_convergence_thm2",
            ExperimentId::HydroLimitThm1 => "hydro_limit_thm1",
            ExperimentId::HydroLimitThm2 => "hydro_limit_thm2",
            ExperimentId::AprioriEstimates => "apriori_estimates",
            ExperimentId::OperatorConsistency => "operator_consistency",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentId::LepsConvergenceThm1 => {
                "rescaled operator with the simple collision operator vs -kappa (-Lap)^(alpha/2)"
            }
            ExperimentId::LepsConvergenceThm2 => {
                "rescaled operator with space-dependent frequency vs -kappa0 L (gamma kernel)"
            }
            ExperimentId::HydroLimitThm1 => {
                "kinetic density (simple operator) vs fractional heat equation"
            }
            ExperimentId::HydroLimitThm2 => {
                "kinetic density (general operator) vs kernel limit equation"
            }
            ExperimentId::AprioriEstimates => {
                "mass, L2(1/F) monotonicity, density bound and g-norm rate over an epsilon sweep"
            }
            ExperimentId::OperatorConsistency => {
                "kappa and c_{N,alpha}, singular integral vs multiplier, structural identities"
            }
        }
    }

    /// Whether the experiment builds a collision model by default.
    pub fn uses_model(&self) -> bool {
        matches!(
            self,
            ExperimentId::LepsConvergenceThm2 | ExperimentId::HydroLimitThm2
        )
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment id `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: ExperimentId,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    /// Output directory; relative paths resolve against the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Wavenumbers of the cosine test functions / initial perturbation.
    #[serde(default = "default_modes")]
    pub modes: Vec<u32>,
    /// Seed for randomized checks.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    #[serde(default = "default_nx")]
    pub n_x: usize,
    #[serde(default = "default_nv")]
    pub n_v: usize,
    /// Band limit `K`; defaults to `n_x / 2`.
    #[serde(default)]
    pub band_limit: Option<usize>,
    /// Time step cap.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Step `min(dt_max, dt_factor · ε^α)`.
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    /// Periodic kernel images `M`.
    #[serde(default = "default_images")]
    pub images: usize,
    /// Density snapshots written per run (besides `t = 0`).
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_x: default_nx(),
            n_v: default_nv(),
            band_limit: None,
            dt_max: default_dt_max(),
            dt_factor: default_dt_factor(),
            images: default_images(),
            snapshots: default_snapshots(),
        }
    }
}

impl Resolution {
    pub fn band_limit(&self) -> usize {
        self.band_limit.unwrap_or(self.n_x / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    #[serde(flatten)]
    pub profile: CollisionProfile,
    pub nu1: f64,
    pub nu2: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            profile: CollisionProfile::Smooth { amplitude: 0.5 },
            nu1: 0.5,
            nu2: 1.5,
        }
    }
}

/// Pass/fail thresholds; `None` means "use the experiment's default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub require_monotone: Option<bool>,
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    /// Largest accepted last/first error ratio.
    pub final_ratio_max: Option<f64>,
    /// Largest accepted relative error at the smallest ε.
    pub endpoint_max: Option<f64>,
    pub mass_drift_max: Option<f64>,
    /// The g-norm slope must reach `α/2 - g_slope_margin`.
    pub g_slope_margin: Option<f64>,
    pub operator_tolerance: Option<f64>,
    pub kappa_tolerance: Option<f64>,
    pub moment_tolerance: Option<f64>,
    pub identity_tolerance: Option<f64>,
    pub reduction_tolerance: Option<f64>,
}

/// Thresholds with every field resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedThresholds {
    pub require_monotone: bool,
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    pub final_ratio_max: Option<f64>,
    pub endpoint_max: Option<f64>,
    pub mass_drift_max: f64,
    pub g_slope_margin: f64,
    pub operator_tolerance: f64,
    pub kappa_tolerance: f64,
    pub moment_tolerance: f64,
    pub identity_tolerance: f64,
    pub reduction_tolerance: f64,
}

impl Thresholds {
    pub fn resolve(&self, id: ExperimentId) -> ResolvedThresholds {
        use ExperimentId::*;
        let (slope_min, slope_max, final_ratio, endpoint) = match id {
            LepsConvergenceThm1 => (Some(0.7), Some(1.3), None, None),
            LepsConvergenceThm2 => (None, None, Some(0.25), None),
            HydroLimitThm1 => (None, None, None, Some(0.1)),
            HydroLimitThm2 => (None, None, None, Some(0.15)),
            AprioriEstimates | OperatorConsistency => (None, None, None, None),
        };
        ResolvedThresholds {
            require_monotone: self.require_monotone.unwrap_or(true),
            slope_min: self.slope_min.or(slope_min),
            slope_max: self.slope_max.or(slope_max),
            final_ratio_max: self.final_ratio_max.or(final_ratio),
            endpoint_max: self.endpoint_max.or(endpoint),
            mass_drift_max: self.mass_drift_max.unwrap_or(1e-12),
            g_slope_margin: self.g_slope_margin.unwrap_or(0.15),
            operator_tolerance: self.operator_tolerance.unwrap_or(1e-3),
            kappa_tolerance: self.kappa_tolerance.unwrap_or(1e-6),
            moment_tolerance: self.moment_tolerance.unwrap_or(1e-8),
            identity_tolerance: self.identity_tolerance.unwrap_or(1e-8),
            reduction_tolerance: self.reduction_tolerance.unwrap_or(1e-10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub resolution: Resolution,
    /// Collision model; experiments that need one fall back to
    /// `ν₀(x) = 1 + 0.5 cos x` on `[0.5, 1.5]`.
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_final_time() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    PathBuf::from("fraclimit-out")
}
fn default_modes() -> Vec<u32> {
    vec![1]
}
fn default_nx() -> usize {
    64
}
fn default_nv() -> usize {
    128
}
fn default_dt_max() -> f64 {
    0.01
}
fn default_dt_factor() -> f64 {
    1.0
}
fn default_images() -> usize {
    64
}
fn default_snapshots() -> usize {
    4
}

impl ExperimentConfig {
    /// Config with all defaults for `id`.
    pub fn new(id: ExperimentId) -> Self {
        Self {
            experiment: ExperimentSection {
                id,
                alpha: default_alpha(),
                epsilons: default_epsilons(),
                final_time: default_final_time(),
                output: default_output(),
                modes: default_modes(),
                seed: 0,
            },
            resolution: Resolution::default(),
            model: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn id(&self) -> ExperimentId {
        self.experiment.id
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; a relative output directory is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Format {
                path: path.into(),
                message: msg,
            },
            other => other,
        })?;
        if cfg.experiment.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.experiment.output = dir.join(&cfg.experiment.output);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn thresholds(&self) -> ResolvedThresholds {
        self.thresholds.resolve(self.id())
    }

    /// Configured model, or the default smooth profile when the experiment
    /// needs one.
    pub fn model_section(&self) -> Option<ModelSection> {
        self.model
            .or_else(|| self.id().uses_model().then(ModelSection::default))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let fail = |msg: String| Err(Error::Config(msg));
        if !(e.alpha > 0.0 && e.alpha < 2.0) {
            return fail(format!("alpha must lie in (0, 2), got {}", e.alpha));
        }
        if e.id != ExperimentId::OperatorConsistency {
            if e.epsilons.len() < 3 {
                return fail(format!(
                    "need at least 3 epsilon values for order estimation, got {}",
                    e.epsilons.len()
                ));
            }
            if let Some(bad) = e.epsilons.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                return fail(format!("epsilon values must lie in (0, 1), got {bad}"));
            }
            if e.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                return fail("epsilon list must be strictly decreasing".into());
            }
        }
        if !(e.final_time > 0.0 && e.final_time.is_finite()) {
            return fail(format!("final_time must be positive, got {}", e.final_time));
        }
        if e.modes.is_empty() || e.modes.contains(&0) {
            return fail("modes must be a non-empty list of positive wavenumbers".into());
        }
        let r = &self.resolution;
        if r.n_x < 8 || r.n_x % 2 != 0 {
            return fail(format!("n_x must be even and at least 8, got {}", r.n_x));
        }
        if r.n_v < 8 || r.n_v % 2 != 0 {
            return fail(format!("n_v must be even and at least 8, got {}", r.n_v));
        }
        let k = r.band_limit();
        if k == 0 || k > r.n_x / 2 {
            return fail(format!("band_limit must lie in 1..={}, got {k}", r.n_x / 2));
        }
        if let Some(&m) = e.modes.iter().find(|m| **m as usize >= k) {
            return fail(format!("mode {m} is not below the band limit {k}"));
        }
        if !(r.dt_max > 0.0 && r.dt_factor > 0.0) {
            return fail("dt_max and dt_factor must be positive".into());
        }
        if r.snapshots == 0 {
            return fail("snapshots must be at least 1".into());
        }
        if let Some(m) = &self.model {
            if !(m.nu1 > 0.0 && m.nu1 <= m.nu2) {
                return fail(format!("need 0 < nu1 <= nu2, got {} and {}", m.nu1, m.nu2));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("[experiment]\nid = \"hydro_limit_thm1\"\n").unwrap();
        assert_eq!(cfg.id(), ExperimentId::HydroLimitThm1);
        assert_eq!(cfg.experiment.epsilons, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.resolution.band_limit(), 32);
        assert_eq!(cfg.thresholds().endpoint_max, Some(0.1));
        assert!(cfg.model_section().is_none());
    }

    #[test]
    fn model_and_thresholds_parse() {
        let text = r#"
            [experiment]
            id = "leps_convergence_thm2"
            epsilons = [0.3, 0.2, 0.1]

            [model]
            kind = "blended"
            amplitude = 0.2
            core_radius = 1.5
            strength = 0.3
            nu1 = 0.5
            nu2 = 2.0

            [thresholds]
            final_ratio_max = 0.5
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let m = cfg.model_section().unwrap();
        assert_eq!(m.profile.id(), "blended");
        assert_eq!(cfg.thresholds().final_ratio_max, Some(0.5));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn invalid_sweeps_rejected() {
        for eps in ["[0.1, 0.2, 0.05]", "[0.2, 0.1]", "[1.0, 0.5, 0.1]", "[0.2, 0.2, 0.1]"] {
            let text = format!("[experiment]\nid = \"apriori_estimates\"\nepsilons = {eps}\n");
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{eps}");
        }
        assert!(ExperimentConfig::from_toml("[experiment]\nid = \"nope\"\n").is_err());
        assert!(ExperimentConfig::from_toml(
            "[experiment]\nid = \"apriori_estimates\"\n[resolution]\nn_x = 7\n"
        )
        .is_err());
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
    }
}
