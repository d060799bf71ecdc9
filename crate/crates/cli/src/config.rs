//! Scenario configuration files.
//!
//! A config is a TOML table. Only `scenario` is required; every other field
//! falls back to the scenario's built-in default.
//!
//! ```toml
//! scenario = "epi-exp-line"
//! horizon = 100000
//! stride = 100
//! seed = 7
//! x0 = [0.0, 1.0]
//! output = "out"
//!
//! [tolerances]
//! tol_reg = 1e-3
//! tol_floor = 1e-6
//! slope_eps = 1e-3
//! stop_tol = 0.0
//!
//! [[operators]]
//! kind = "projector"
//! set = { kind = "coordinate_axis" }
//!
//! [[operators]]
//! kind = "projector"
//! set = { kind = "epi_exp" }
//! ```
//!
//! `m` defaults to the number of operators (or weights) and must be at
//! least 2 when given. `d` defaults to the dimension of `x0`.

use std::path::{Path, PathBuf};

use firmlab_core::dynamics::{RegularityThresholds, DEFAULT_STRIDE};
use firmlab_core::{OperatorSpec, Point, Weights};
use serde::Deserialize;

use crate::scenarios::Scenario;
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    tol_reg: Option<f64>,
    tol_floor: Option<f64>,
    slope_eps: Option<f64>,
    stop_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    m: Option<usize>,
    d: Option<usize>,
    #[serde(default)]
    operators: Vec<OperatorSpec>,
    weights: Option<Vec<f64>>,
    x0: Option<Vec<f64>>,
    horizon: Option<usize>,
    stride: Option<usize>,
    #[serde(default)]
    tolerances: RawTolerances,
    seed: Option<u64>,
    output: Option<PathBuf>,
}

/// A fully resolved scenario configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Block count; `None` where the scenario has no operator list and the
    /// file did not fix one (the M† sweep then covers its whole grid).
    pub m: Option<usize>,
    /// Ambient dimension; `None` only for scenarios without a start point
    /// whose file did not fix one.
    pub d: Option<usize>,
    pub operators: Vec<OperatorSpec>,
    pub weights: Option<Weights>,
    pub x0: Point,
    pub horizon: usize,
    pub stride: usize,
    pub thresholds: RegularityThresholds,
    pub stop_tol: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// The scenario's built-in configuration.
    pub fn default_for(scenario: Scenario) -> Self {
        let d = scenario.uses_start().then(|| scenario.default_x0().dim());
        let operators = scenario.default_operators();
        let weights = scenario.default_weights();
        let m = if !operators.is_empty() {
            Some(operators.len())
        } else {
            weights.as_ref().map(Weights::len)
        };
        ScenarioConfig {
            scenario,
            m,
            d,
            operators,
            weights,
            x0: scenario.default_x0(),
            horizon: scenario.default_horizon(),
            stride: DEFAULT_STRIDE,
            thresholds: RegularityThresholds::default(),
            stop_tol: 0.0,
            seed: 0,
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let scenario: Scenario = raw.scenario.parse()?;
        let mut cfg = Self::default_for(scenario);

        if let Some(m) = raw.m {
            if m < 2 {
                return Err(config_err(format!("m must be at least 2, got {m}")));
            }
        }
        if !raw.operators.is_empty() {
            if !scenario.uses_operators() {
                return Err(config_err(format!("scenario {scenario} takes no operators")));
            }
            cfg.operators = raw.operators;
        }
        if let Some(w) = raw.weights {
            if !scenario.uses_weights() {
                return Err(config_err(format!("scenario {scenario} takes no weights")));
            }
            cfg.weights = Some(Weights::new(w).map_err(|e| config_err(format!("weights: {e}")))?);
        }
        if let Some(x0) = raw.x0 {
            if !scenario.uses_start() {
                return Err(config_err(format!("scenario {scenario} takes no x0")));
            }
            cfg.x0 = Point::new(x0).map_err(|e| config_err(format!("x0: {e}")))?;
            cfg.d = Some(cfg.x0.dim());
        }

        let implied_m = if scenario.uses_operators() {
            Some(cfg.operators.len())
        } else {
            cfg.weights.as_ref().map(Weights::len)
        };
        cfg.m = match (raw.m, implied_m) {
            (Some(m), Some(k)) if m != k => {
                return Err(config_err(format!("m = {m} but the scenario has {k} blocks")))
            }
            (Some(m), _) => Some(m),
            (None, k) => k,
        };
        if scenario.uses_operators() && cfg.operators.len() < 2 {
            return Err(config_err("at least two operators are required"));
        }
        if let (Some(w), Some(m)) = (&cfg.weights, cfg.m) {
            if scenario.uses_operators() && w.len() != m {
                return Err(config_err(format!("{} weights for {m} operators", w.len())));
            }
        }

        if let Some(d) = raw.d {
            if d == 0 {
                return Err(config_err("d must be at least 1"));
            }
            if scenario.uses_start() && d != cfg.x0.dim() {
                return Err(config_err(format!("d = {d} but x0 has dimension {}", cfg.x0.dim())));
            }
            cfg.d = Some(d);
        }
        let d = cfg.dim();
        for (i, op) in cfg.operators.iter().enumerate() {
            if let Some(e) = op.dim() {
                if e != d {
                    return Err(config_err(format!(
                        "operator {} ({}) acts on R^{e}, expected R^{d}",
                        i + 1,
                        op.label(),
                    )));
                }
            }
        }

        if let Some(h) = raw.horizon {
            if h == 0 {
                return Err(config_err("horizon must be at least 1"));
            }
            cfg.horizon = h;
        }
        if let Some(s) = raw.stride {
            if s == 0 {
                return Err(config_err("stride must be at least 1"));
            }
            cfg.stride = s;
        }
        let t = raw.tolerances;
        if let Some(v) = t.tol_reg {
            cfg.thresholds.tol_reg = positive("tol_reg", v)?;
        }
        if let Some(v) = t.tol_floor {
            cfg.thresholds.tol_floor = positive("tol_floor", v)?;
        }
        if let Some(v) = t.slope_eps {
            cfg.thresholds.slope_eps = positive("slope_eps", v)?;
        }
        if let Some(v) = t.stop_tol {
            if v.is_nan() {
                return Err(config_err("stop_tol is NaN"));
            }
            cfg.stop_tol = v;
        }
        if let Some(seed) = raw.seed {
            cfg.seed = seed;
        }
        cfg.output = raw.output;
        Ok(cfg)
    }

    /// The ambient dimension, 1 when unspecified.
    pub fn dim(&self) -> usize {
        self.d.unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_toml_str("scenario = \"epi-exp-line\"").unwrap();
        assert_eq!(cfg, ScenarioConfig::default_for(Scenario::EpiExpLine));
        assert_eq!(cfg.m, Some(2));
        assert_eq!(cfg.horizon, 100_000);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "scenario = \"nope\"",
            "scenario = \"translations-cancel\"\nm = 1",
            "scenario = \"translations-cancel\"\nm = 3",
            "scenario = \"translations-cancel\"\nx0 = [1.0]",
            "scenario = \"translations-cancel\"\nhorizon = 0",
            "scenario = \"translations-cancel\"\nbogus = 1",
            "scenario = \"q-expansion-witness\"\nweights = [0.5]",
            "scenario = \"averaged-projections\"\nweights = [0.5, 0.5]",
            "scenario = \"mdagger-verify\"\nm = 1",
            "scenario = \"epi-exp-line\"\n[tolerances]\ntol_reg = -1.0",
        ] {
            assert!(
                matches!(ScenarioConfig::from_toml_str(text), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn operators_override_defaults() {
        let text = "scenario = \"translations-cancel\"\nx0 = [0.0]\n\n\
                    [[operators]]\nkind = \"translation\"\nv = [2.0]\n\n\
                    [[operators]]\nkind = \"translation\"\nv = [-2.0]\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.d, Some(1));
        assert_eq!(cfg.m, Some(2));
    }
}
