//! Reliability construction with parallel Monte Carlo and an optional
//! on-disk cache.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use polarsteg_core::codec::LlrKernel;
use polarsteg_core::construction::{
    degrading_merge_construct, degrading_merge_error_construct, monte_carlo_counts, polarize_bhattacharyya, ConstructionMethod,
    ReliabilityProfile,
};
use polarsteg_core::ChannelBank;

use crate::files::MethodSpec;
use crate::Error;

/// Trials per rayon task.
const MC_CHUNK: u64 = 64;

/// Builds the reliability profile of `bank`. Monte Carlo trials run on the
/// rayon pool; counts are identical to a sequential run.
pub fn construct_profile(bank: &ChannelBank, method: ConstructionMethod) -> Result<ReliabilityProfile, Error> {
    Ok(match method {
        ConstructionMethod::Bhattacharyya => polarize_bhattacharyya(bank),
        ConstructionMethod::DegradingMerge { mu } => degrading_merge_construct(bank, mu)?,
        ConstructionMethod::MergeErrorProbability { mu } => degrading_merge_error_construct(bank, mu)?,
        ConstructionMethod::MonteCarlo { trials, seed } => {
            let chunks: Vec<u64> = (0..trials.div_ceil(MC_CHUNK)).collect();
            let counts = chunks
                .into_par_iter()
                .map(|c| {
                    let range = c * MC_CHUNK..((c + 1) * MC_CHUNK).min(trials);
                    monte_carlo_counts(bank, range, seed, LlrKernel::Exact)
                })
                .try_reduce(
                    || vec![0u64; bank.len()],
                    |mut a, b| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        Ok(a)
                    },
                )?;
            ReliabilityProfile::new(method, counts.iter().map(|&c| c as f64).collect())?
        }
    })
}

/// Content key of a construction: method parameters plus the exact bits of
/// every crossover probability.
pub fn cache_key(bank: &ChannelBank, method: ConstructionMethod) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&MethodSpec::from(method)).expect("serializable"));
    for p in bank.crossover() {
        h.update(p.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct CachedProfile {
    key: String,
    method: MethodSpec,
    scores: Vec<f64>,
    complement: Option<Vec<f64>>,
}

/// Constructions stored as `<key>.json` under a directory. Without a
/// directory every request is computed.
#[derive(Debug, Clone, Default)]
pub struct ConstructionCache {
    dir: Option<PathBuf>,
}

impl ConstructionCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn profile(&self, bank: &ChannelBank, method: ConstructionMethod) -> Result<ReliabilityProfile, Error> {
        let Some(dir) = &self.dir else {
            return construct_profile(bank, method);
        };
        let key = cache_key(bank, method);
        let path = dir.join(format!("{key}.json"));
        if let Ok(text) = fs::read_to_string(&path) {
            // a stale or truncated entry is just recomputed
            if let Ok(c) = serde_json::from_str::<CachedProfile>(&text) {
                if c.key == key && ConstructionMethod::from(c.method) == method {
                    return Ok(match c.complement {
                        Some(comp) => ReliabilityProfile::with_complement(method, c.scores, comp)?,
                        None => ReliabilityProfile::new(method, c.scores)?,
                    });
                }
            }
        }
        let prof = construct_profile(bank, method)?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let entry = CachedProfile {
            key,
            method: method.into(),
            scores: prof.scores().to_vec(),
            complement: prof.complement().map(<[f64]>::to_vec),
        };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(&entry)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(prof)
    }
}
