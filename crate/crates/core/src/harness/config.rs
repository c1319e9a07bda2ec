//! Versioned TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::env::{BanditEnvironment, MdpEnvironment};
use crate::bandit::Algorithm;
use crate::error::{Error, Result};
use crate::explore::ExplorerConfig;
use crate::uob::ScbRlParams;

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Bandit,
    Mdp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSpec {
    pub algorithm: Algorithm,
    pub environment: BanditEnvironment,
}

/// Learners for the MDP setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MdpAlgorithm {
    ScbRl {
        xi: Option<f64>,
        beta: Option<f64>,
        eta: Option<f64>,
        gamma: Option<f64>,
        delta: Option<f64>,
        /// Early-stopping constant of the exploration phase.
        kappa: Option<f64>,
        explorer: Option<ExplorerConfig>,
    },
}

impl MdpAlgorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            MdpAlgorithm::ScbRl { .. } => "scb-rl",
        }
    }

    pub fn params(&self) -> ScbRlParams {
        match *self {
            MdpAlgorithm::ScbRl { xi, beta, eta, gamma, delta, kappa, explorer } => {
                ScbRlParams { xi, beta, eta, gamma, delta, early_stop: kappa, explorer }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSpec {
    pub algorithm: MdpAlgorithm,
    pub environment: MdpEnvironment,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryOptions {
    /// Explicit checkpoints; log-spaced when absent.
    pub checkpoints: Option<Vec<u64>>,
    pub fit_from: Option<u64>,
    pub fit_to: Option<u64>,
}

/// Grid of variants run by `sweep`; empty lists keep the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub loss_scales: Vec<f64>,
    #[serde(default)]
    pub horizons: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub setting: Setting,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Every loss is multiplied by this factor.
    #[serde(default = "one")]
    pub loss_scale: f64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub bandit: Option<BanditSpec>,
    #[serde(default)]
    pub mdp: Option<MdpSpec>,
    #[serde(default)]
    pub summary: SummaryOptions,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.horizon == 0 {
            return Err(config_err("horizon must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("seeds must be distinct"));
        }
        if !(self.loss_scale.is_finite() && self.loss_scale > 0.0) {
            return Err(config_err("loss_scale must be positive and finite"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be at least 1"));
        }
        match (self.setting, &self.bandit, &self.mdp) {
            (Setting::Bandit, Some(b), None) => {
                b.environment.validate()?;
                if let Algorithm::Exp3Ix { known_scale, .. } | Algorithm::TsallisInf { known_scale } = b.algorithm {
                    if !(known_scale.is_finite() && known_scale > 0.0) {
                        return Err(config_err("known_scale must be positive"));
                    }
                }
            }
            (Setting::Mdp, None, Some(m)) => m.environment.validate()?,
            (Setting::Bandit, _, _) => {
                return Err(config_err("setting `bandit` needs a [bandit] section and no [mdp] section"))
            }
            (Setting::Mdp, _, _) => {
                return Err(config_err("setting `mdp` needs an [mdp] section and no [bandit] section"))
            }
        }
        if let Some(c) = &self.summary.checkpoints {
            if c.is_empty() || c.windows(2).any(|w| w[0] >= w[1]) || c[0] == 0 {
                return Err(config_err("checkpoints must be increasing and positive"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.loss_scales.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(config_err("sweep loss_scales must be positive"));
            }
            if s.horizons.contains(&0) {
                return Err(config_err("sweep horizons must be positive"));
            }
        }
        Ok(())
    }

    /// Run label used for file names.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| match (&self.bandit, &self.mdp) {
            (Some(b), _) => format!("{}-{}", b.algorithm.tag(), b.environment.tag()),
            (_, Some(m)) => format!("{}-{}", m.algorithm.tag(), m.environment.tag()),
            _ => "run".into(),
        })
    }

    /// Checkpoints clipped to the horizon, which is always included.
    pub fn checkpoints(&self) -> Vec<u64> {
        match &self.summary.checkpoints {
            Some(c) => {
                let mut v: Vec<u64> = c.iter().copied().filter(|t| *t < self.horizon).collect();
                v.push(self.horizon);
                v
            }
            None => super::summary::default_checkpoints(self.horizon),
        }
    }

    pub fn fit_range(&self) -> (u64, u64) {
        (self.summary.fit_from.unwrap_or(1), self.summary.fit_to.unwrap_or(self.horizon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANDIT: &str = r#"
schema_version = 1
setting = "bandit"
horizon = 100
seeds = [1, 2]

[bandit.algorithm]
name = "scb"

[bandit.environment]
name = "stochastic-gaussian"
means = [0.0, 0.5]
"#;

    #[test]
    fn parses_a_bandit_config() {
        let c = ExperimentConfig::from_toml_str(BANDIT).unwrap();
        assert_eq!(c.loss_scale, 1.0);
        assert_eq!(c.label(), "scb-stochastic-gaussian");
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = BANDIT.replace("horizon = 100", "horizon = 100\nhorizn = 5");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("horizn") && err.contains("line"), "{err}");
    }

    #[test]
    fn schema_and_sections_are_checked() {
        assert!(ExperimentConfig::from_toml_str(&BANDIT.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(ExperimentConfig::from_toml_str(&BANDIT.replace("setting = \"bandit\"", "setting = \"mdp\"")).is_err());
        assert!(ExperimentConfig::from_toml_str(&BANDIT.replace("[1, 2]", "[1, 1]")).is_err());
    }

    #[test]
    fn parses_an_mdp_config() {
        let text = r#"
schema_version = 1
setting = "mdp"
horizon = 50
seeds = [0]

[mdp.algorithm]
name = "scb-rl"
kappa = 4.0

[mdp.environment]
name = "random-mdp"
layer_sizes = [2, 2]
actions = 2
noise = { kind = "gaussian", std = 0.1 }
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.mdp.unwrap().algorithm.params().early_stop, Some(4.0));
    }
}
