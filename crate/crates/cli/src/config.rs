//! Experiment configs: `key = value` lines grouped under `[weight]`, `[params]` and
//! `[tolerances]`.

use std::fmt;
use std::path::PathBuf;

use radfock::weightlab::{LacunarySequence, Weight};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    T1Obstruction,
    T2Chain,
    T3Suite,
    Circulant,
    Moments,
    Gram,
    Convexity,
}

impl Study {
    pub const ALL: [Study; 7] =
        [Study::T1Obstruction, Study::T2Chain, Study::T3Suite, Study::Circulant, Study::Moments, Study::Gram, Study::Convexity];

    pub fn name(self) -> &'static str {
        match self {
            Study::T1Obstruction => "t1-obstruction",
            Study::T2Chain => "t2-chain",
            Study::T3Suite => "t3-suite",
            Study::Circulant => "circulant",
            Study::Moments => "moments",
            Study::Gram => "gram",
            Study::Convexity => "convexity",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    /// `power` (`h = r^β`), `log-power` (`ψ = t_+^α`), `quadratic` (`ψ = t²`) or `theorem3`.
    pub family: Option<String>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    /// Explicit radii `R_n` for `theorem3`.
    pub radii: Option<Vec<f64>>,
    /// Depth of the squaring sequence `R_1 = 2`, `R_{n+1} = R_n²` for `theorem3`.
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub n_range: Option<[usize; 2]>,
    pub sizes: Option<Vec<usize>>,
    pub windows: Option<Vec<usize>>,
    pub table_len: Option<usize>,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    /// Lattice spacing in units of `ρ`.
    pub spacing: Option<f64>,
    /// `gaussian`, `counterexample` or `weight`.
    pub source: Option<String>,
    pub t: Option<Vec<u64>>,
    pub s: Option<Vec<f64>>,
    pub expect_monotone: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
    #[serde(default = "default_compare")]
    pub compare: f64,
}

fn default_quadrature() -> f64 {
    1e-12
}

fn default_compare() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quadrature: default_quadrature(), compare: default_compare() }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: Study,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("field {field}: {what}")]
    Field { field: &'static str, what: String },
}

fn field(field: &'static str, what: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, what: what.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [("tolerances.quadrature", self.tolerances.quadrature), ("tolerances.compare", self.tolerances.compare)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ConfigError::Field { field: name, what: format!("{v} is outside (0, 1)") });
            }
        }
        if let Some(d) = self.params.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(field("params.delta", format!("{d} is outside (0, 1)")));
            }
        }
        if let Some([lo, hi]) = self.params.n_range {
            if lo > hi {
                return Err(field("params.n_range", format!("[{lo}, {hi}] is empty")));
            }
        }
        if self.weight.family.is_some() {
            self.weight()?;
        }
        Ok(())
    }

    /// The configured weight, or `default` when `[weight]` names no family.
    pub fn weight_or(&self, default: impl FnOnce() -> Weight) -> Result<Weight, ConfigError> {
        if self.weight.family.is_none() {
            return Ok(default());
        }
        self.weight()
    }

    pub fn weight(&self) -> Result<Weight, ConfigError> {
        let w = &self.weight;
        let family = w.family.as_deref().ok_or_else(|| field("weight.family", "missing"))?;
        let bad = |f: &'static str| move |e: radfock::Error| field(f, e.to_string());
        match family {
            "power" => Weight::power(w.beta.ok_or_else(|| field("weight.beta", "required for the power family"))?).map_err(bad("weight.beta")),
            "log-power" => {
                Weight::log_power(w.alpha.ok_or_else(|| field("weight.alpha", "required for the log-power family"))?).map_err(bad("weight.alpha"))
            }
            "quadratic" => Ok(quadratic()),
            "theorem3" => {
                let seq = match (&w.radii, w.depth) {
                    (Some(r), None) => LacunarySequence::from_radii(r).map_err(bad("weight.radii"))?,
                    (None, Some(d)) if d >= 1 => LacunarySequence::squaring(d),
                    (None, Some(_)) => return Err(field("weight.depth", "must be at least 1")),
                    _ => return Err(field("weight.radii", "give exactly one of radii and depth")),
                };
                Ok(Weight::theorem3(seq))
            }
            other => Err(field("weight.family", format!("unknown family {other:?} (expected power, log-power, quadratic or theorem3)"))),
        }
    }
}

/// `ψ(t) = t²` on the whole line.
pub fn quadratic() -> Weight {
    Weight::custom("t^2", |t| t * t)
}
