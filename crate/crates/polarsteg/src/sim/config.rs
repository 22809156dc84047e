//! Experiment configuration, read from TOML.
//!
//! ```toml
//! experiment = "robustness"        # or "distortion"
//! schemes = ["adaptive", "robust"] # robustness only
//! profiles = ["constant", "linear", "square"]
//! block_lengths = [65536]
//! rates = [0.1]
//! preset_theta = [0.005, 0.01]
//! list_size = 16
//! kernel = "exact"                 # or "min_sum"
//! trials = 200
//! seed = 1
//! workers = 0                      # 0 = one per core
//! key_margin = 0.02
//! bound_len = 4194304
//!
//! [attack]                         # robustness only
//! model = "am1"                    # am1: values are θ̃; am2: ratios
//! values = [0.001, 0.002, 0.004, 0.006]
//! reference_theta = 0.005          # am2: θ whose solution the ratios scale
//!
//! [construction]
//! embed = { method = "merge_error_probability", mu = 16 }
//! attack = { method = "merge_error_probability", mu = 16 }
//!
//! [[check]]                        # evaluated by `simulate --check`
//! profile = "linear"
//! preset_theta = 0.01
//! attack_value = 0.006
//! metric = "ber"
//! max = 0.005
//! ```
//!
//! In distortion experiments a preset θ of 0 runs the adaptive scheme and
//! any other value the robust scheme under AM1.

use std::path::Path;

use serde::{Deserialize, Serialize};

use polarsteg_core::codec::LlrKernel;

use crate::files::{MethodSpec, ModelTag, ProfileTag, SchemeTag};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Distortion,
    Robustness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    #[default]
    Exact,
    MinSum,
}

impl From<KernelTag> for LlrKernel {
    fn from(k: KernelTag) -> Self {
        match k {
            KernelTag::Exact => LlrKernel::Exact,
            KernelTag::MinSum => LlrKernel::MinSum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub model: ModelTag,
    pub values: Vec<f64>,
    #[serde(default = "default_reference_theta")]
    pub reference_theta: f64,
}

fn default_reference_theta() -> f64 {
    0.005
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionConfig {
    pub embed: MethodSpec,
    pub attack: MethodSpec,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            embed: MethodSpec::MergeErrorProbability { mu: 16 },
            attack: MethodSpec::MergeErrorProbability { mu: 16 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ber,
    Distortion,
    /// `(mean distortion - bound) / bound`.
    RelativeGap,
}

/// A threshold on the rows matching every given field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub profile: Option<ProfileTag>,
    pub scheme: Option<SchemeTag>,
    pub n: Option<usize>,
    pub rate: Option<f64>,
    pub preset_theta: Option<f64>,
    pub attack_value: Option<f64>,
    pub metric: Metric,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeTag>,
    pub profiles: Vec<ProfileTag>,
    pub block_lengths: Vec<usize>,
    pub rates: Vec<f64>,
    pub preset_theta: Vec<f64>,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    #[serde(default)]
    pub kernel: KernelTag,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_key_margin")]
    pub key_margin: f64,
    #[serde(default = "default_bound_len")]
    pub bound_len: usize,
    #[serde(default)]
    pub construction: ConstructionConfig,
    #[serde(default)]
    pub check: Vec<Check>,
}

fn default_schemes() -> Vec<SchemeTag> {
    vec![SchemeTag::Adaptive, SchemeTag::Robust]
}

fn default_list_size() -> usize {
    16
}

fn default_key_margin() -> f64 {
    polarsteg_core::construction::DEFAULT_KEY_MARGIN
}

fn default_bound_len() -> usize {
    1 << 22
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.trials == 0 {
            return Err(bad("trials must be at least 1"));
        }
        if self.list_size == 0 {
            return Err(bad("list_size must be at least 1"));
        }
        if self.profiles.is_empty() || self.block_lengths.is_empty() || self.rates.is_empty() {
            return Err(bad("profiles, block_lengths and rates must be non-empty"));
        }
        if self.profiles.contains(&ProfileTag::Custom) {
            return Err(bad("experiments use analytic profiles only"));
        }
        for &n in &self.block_lengths {
            if !n.is_power_of_two() || n < 2 {
                return Err(bad(format!("block length {n} is not a power of two >= 2")));
            }
        }
        if !self.bound_len.is_power_of_two() {
            return Err(bad("bound_len must be a power of two"));
        }
        for &r in &self.rates {
            if !(r > 0.0 && r < 1.0) {
                return Err(bad(format!("rate {r} outside (0, 1)")));
            }
        }
        for &t in &self.preset_theta {
            if !(0.0..=0.5).contains(&t) {
                return Err(bad(format!("preset theta {t} outside [0, 0.5]")));
            }
        }
        if !(0.0..=1.0).contains(&self.key_margin) {
            return Err(bad("key_margin must lie in [0, 1]"));
        }
        match (self.experiment, &self.attack) {
            (ExperimentKind::Distortion, Some(_)) => {
                return Err(bad("an attack is only meaningful for robustness experiments"))
            }
            (ExperimentKind::Distortion, None) => {
                if self.preset_theta.is_empty() {
                    return Err(bad("distortion experiments need preset_theta (0 for adaptive)"));
                }
            }
            (ExperimentKind::Robustness, None) => {
                return Err(bad("robustness experiments need an [attack] table"))
            }
            (ExperimentKind::Robustness, Some(a)) => {
                if a.values.is_empty() {
                    return Err(bad("attack values must be non-empty"));
                }
                if self.schemes.is_empty() {
                    return Err(bad("schemes must be non-empty"));
                }
                if self.schemes.contains(&SchemeTag::Robust)
                    && self.preset_theta.iter().any(|&t| t <= 0.0)
                {
                    return Err(bad("the robust scheme needs preset theta > 0"));
                }
                match a.model {
                    ModelTag::None => return Err(bad("attack model must be am1 or am2")),
                    ModelTag::Am1 => {
                        if a.values.iter().any(|v| !(0.0..=0.5).contains(v)) {
                            return Err(bad("am1 noise levels must lie in [0, 0.5]"));
                        }
                    }
                    ModelTag::Am2 => {
                        if a.values.iter().any(|&v| v.is_nan() || v < 0.0) {
                            return Err(bad("am2 ratios must be non-negative"));
                        }
                        if !(a.reference_theta > 0.0 && a.reference_theta <= 0.5) {
                            return Err(bad("reference_theta must lie in (0, 0.5]"));
                        }
                    }
                }
            }
        }
        for c in &self.check {
            if c.min.is_none() && c.max.is_none() {
                return Err(bad("a check needs min or max"));
            }
        }
        Ok(())
    }
}
