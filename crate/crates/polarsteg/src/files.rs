//! JSON construction and solution files, and plain-text number lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use polarsteg_core::construction::{ConstructionMethod, IndexPartition, IndexRole, Scheme};
use polarsteg_core::optimizer::{AttackModel, EmbeddingSolution, ProfileKind};

use crate::Error;

pub const CONSTRUCTION_FORMAT: &str = "polarsteg-construction";
pub const SOLUTION_FORMAT: &str = "polarsteg-solution";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Bhattacharyya,
    DegradingMerge { mu: usize },
    MergeErrorProbability { mu: usize },
    MonteCarlo { trials: u64, seed: u64 },
}

impl From<ConstructionMethod> for MethodSpec {
    fn from(m: ConstructionMethod) -> Self {
        match m {
            ConstructionMethod::Bhattacharyya => MethodSpec::Bhattacharyya,
            ConstructionMethod::DegradingMerge { mu } => MethodSpec::DegradingMerge { mu },
            ConstructionMethod::MergeErrorProbability { mu } => MethodSpec::MergeErrorProbability { mu },
            ConstructionMethod::MonteCarlo { trials, seed } => MethodSpec::MonteCarlo { trials, seed },
        }
    }
}

impl From<MethodSpec> for ConstructionMethod {
    fn from(m: MethodSpec) -> Self {
        match m {
            MethodSpec::Bhattacharyya => ConstructionMethod::Bhattacharyya,
            MethodSpec::DegradingMerge { mu } => ConstructionMethod::DegradingMerge { mu },
            MethodSpec::MergeErrorProbability { mu } => ConstructionMethod::MergeErrorProbability { mu },
            MethodSpec::MonteCarlo { trials, seed } => ConstructionMethod::MonteCarlo { trials, seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeTag {
    Adaptive,
    Robust,
}

impl From<Scheme> for SchemeTag {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Adaptive => SchemeTag::Adaptive,
            Scheme::Robust => SchemeTag::Robust,
        }
    }
}

impl From<SchemeTag> for Scheme {
    fn from(s: SchemeTag) -> Self {
        match s {
            SchemeTag::Adaptive => Scheme::Adaptive,
            SchemeTag::Robust => Scheme::Robust,
        }
    }
}

/// A partition with its provenance. `roles` has one character per index:
/// `K` key, `M` message, `E` encoder-chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionFile {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub scheme: SchemeTag,
    pub embed_method: MethodSpec,
    pub attack_method: Option<MethodSpec>,
    pub nesting_violation: f64,
    pub roles: String,
    pub embed_scores: Vec<f64>,
    pub attack_scores: Option<Vec<f64>>,
    pub checksum: String,
}

fn role_char(r: IndexRole) -> char {
    match r {
        IndexRole::Key => 'K',
        IndexRole::Message => 'M',
        IndexRole::Encoder => 'E',
    }
}

/// SHA-256 over the block length, scheme and role string.
pub fn partition_checksum(n: usize, scheme: SchemeTag, roles: &str) -> String {
    let mut h = Sha256::new();
    h.update(CONSTRUCTION_FORMAT.as_bytes());
    h.update((n as u64).to_le_bytes());
    h.update(match scheme {
        SchemeTag::Adaptive => b"adaptive".as_slice(),
        SchemeTag::Robust => b"robust".as_slice(),
    });
    h.update(roles.as_bytes());
    hex::encode(h.finalize())
}

impl ConstructionFile {
    pub fn new(
        partition: &IndexPartition,
        embed_method: ConstructionMethod,
        embed_scores: Vec<f64>,
        attack: Option<(ConstructionMethod, Vec<f64>)>,
    ) -> Self {
        let roles: String = partition.roles().into_iter().map(role_char).collect();
        let scheme = SchemeTag::from(partition.scheme());
        let (attack_method, attack_scores) = match attack {
            Some((m, s)) => (Some(m.into()), Some(s)),
            None => (None, None),
        };
        Self {
            format: CONSTRUCTION_FORMAT.into(),
            version: FORMAT_VERSION,
            n: partition.len(),
            scheme,
            embed_method: embed_method.into(),
            attack_method,
            nesting_violation: partition.nesting_violation(),
            checksum: partition_checksum(partition.len(), scheme, &roles),
            roles,
            embed_scores,
            attack_scores,
        }
    }

    /// Validates header and checksum, then rebuilds the partition.
    pub fn partition(&self) -> Result<IndexPartition, Error> {
        if self.format != CONSTRUCTION_FORMAT || self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported construction file {} v{}",
                self.format, self.version
            )));
        }
        let found = partition_checksum(self.n, self.scheme, &self.roles);
        if found != self.checksum {
            return Err(Error::Checksum {
                expected: self.checksum.clone(),
                found,
            });
        }
        let roles = self
            .roles
            .chars()
            .map(|c| match c {
                'K' => Ok(IndexRole::Key),
                'M' => Ok(IndexRole::Message),
                'E' => Ok(IndexRole::Encoder),
                other => Err(Error::Format(format!("unknown role {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if roles.len() != self.n {
            return Err(Error::Format("role string length differs from n".into()));
        }
        Ok(IndexPartition::from_roles(self.scheme.into(), &roles)?)
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTag {
    Constant,
    Linear,
    Square,
    Custom,
}

impl From<ProfileKind> for ProfileTag {
    fn from(k: ProfileKind) -> Self {
        match k {
            ProfileKind::Constant => ProfileTag::Constant,
            ProfileKind::Linear => ProfileTag::Linear,
            ProfileKind::Square => ProfileTag::Square,
            ProfileKind::Custom => ProfileTag::Custom,
        }
    }
}

impl From<ProfileTag> for ProfileKind {
    fn from(k: ProfileTag) -> Self {
        match k {
            ProfileTag::Constant => ProfileKind::Constant,
            ProfileTag::Linear => ProfileKind::Linear,
            ProfileTag::Square => ProfileKind::Square,
            ProfileTag::Custom => ProfileKind::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    None,
    Am1,
    Am2,
}

impl From<AttackModel> for ModelTag {
    fn from(m: AttackModel) -> Self {
        match m {
            AttackModel::None => ModelTag::None,
            AttackModel::Am1 => ModelTag::Am1,
            AttackModel::Am2 => ModelTag::Am2,
        }
    }
}

impl From<ModelTag> for AttackModel {
    fn from(m: ModelTag) -> Self {
        match m {
            ModelTag::None => AttackModel::None,
            ModelTag::Am1 => AttackModel::Am1,
            ModelTag::Am2 => AttackModel::Am2,
        }
    }
}

/// An [`EmbeddingSolution`] on disk. `lambda` is `null` when infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub profile: ProfileTag,
    pub attack_model: ModelTag,
    pub lambda: Option<f64>,
    pub attack_ratio: Option<f64>,
    pub achieved_payload: f64,
    pub achieved_distortion: f64,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
}

impl SolutionFile {
    pub fn new(profile: ProfileKind, sol: &EmbeddingSolution) -> Self {
        Self {
            format: SOLUTION_FORMAT.into(),
            version: FORMAT_VERSION,
            profile: profile.into(),
            attack_model: sol.attack_model.into(),
            lambda: sol.lambda.is_finite().then_some(sol.lambda),
            attack_ratio: sol.attack_ratio,
            achieved_payload: sol.achieved_payload,
            achieved_distortion: sol.achieved_distortion,
            p: sol.p.clone(),
            theta: sol.theta.clone(),
        }
    }

    pub fn solution(&self) -> Result<EmbeddingSolution, Error> {
        if self.format != SOLUTION_FORMAT || self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported solution file {} v{}",
                self.format, self.version
            )));
        }
        if self.p.len() != self.theta.len() {
            return Err(Error::Format("p and theta lengths differ".into()));
        }
        Ok(EmbeddingSolution {
            lambda: self.lambda.unwrap_or(f64::INFINITY),
            p: self.p.clone(),
            theta: self.theta.clone(),
            attack_model: self.attack_model.into(),
            attack_ratio: self.attack_ratio,
            achieved_payload: self.achieved_payload,
            achieved_distortion: self.achieved_distortion,
        })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        write_json(path, self)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One real per line; blank lines and `#` comments are skipped and `inf`
/// is accepted (wet positions in weight files).
pub fn parse_real_list(text: &str) -> Result<Vec<f64>, Error> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            l.parse::<f64>()
                .map_err(|_| Error::Format(format!("line {}: not a number: {l:?}", n + 1)))
        })
        .collect()
}

pub fn read_real_list(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_real_list(&text)
}
