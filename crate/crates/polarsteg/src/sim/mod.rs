//! Seeded end-to-end experiments.
//!
//! Trial `t` of every cell uses the seed `trial_seed(config.seed, t)`, from
//! which the cover, the message, the key and the noise of each attack column
//! are drawn on separate sub-streams. Cells therefore see the same covers
//! and messages, and the result of a trial does not depend on which worker
//! ran it or when.

pub mod config;
pub mod report;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use polarsteg_core::codec::CoderConfig;
use polarsteg_core::construction::{
    key_set_size, select_adaptive_partition, select_robust_partition, IndexPartition,
};
use polarsteg_core::optimizer::{
    solve_am2, solve_pls, solve_robust_pls_am1, theoretical_bound, AttackModel, DistortionProfile,
    EmbeddingSolution, ProfileKind,
};
use polarsteg_core::sampling::{sample_attack, sample_bss, sub_seed, trial_seed};
use polarsteg_core::stego::{
    adaptive_embed, adaptive_extract, derive_frozen_key, robust_embed, robust_extract, StegoContext,
};
use polarsteg_core::{BitVector, ChannelBank};

pub use config::{AttackSpec, Check, ConstructionConfig, ExperimentConfig, ExperimentKind, KernelTag, Metric};
pub use report::{ReportRow, SimulationReport, TrialRecord};

use crate::construct::ConstructionCache;
use crate::files::{ModelTag, SchemeTag};
use crate::Error;

const COVER_STREAM: u64 = 1;
const MESSAGE_STREAM: u64 = 2;
const KEY_STREAM: u64 = 3;
const NOISE_STREAM: u64 = 16;

/// Message length for rate `r`: `⌈r·N⌉`.
pub fn payload_bits(rate: f64, n: usize) -> usize {
    (rate * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Bound values keyed by their parameters, optionally persisted as JSON.
#[derive(Debug, Default)]
pub struct BoundCache {
    path: Option<PathBuf>,
    values: Mutex<HashMap<String, f64>>,
}

impl BoundCache {
    pub fn new(path: Option<PathBuf>) -> Self {
        let values = path
            .as_ref()
            .and_then(|p| std::fs::read_to_string(p).ok())
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        Self {
            path,
            values: Mutex::new(values),
        }
    }

    pub fn bound(&self, kind: ProfileKind, len: usize, rate: f64, theta: f64) -> Result<f64, Error> {
        let model = if theta > 0.0 { AttackModel::Am1 } else { AttackModel::None };
        let key = format!("{kind:?}/{len}/{:016x}/{:016x}", rate.to_bits(), theta.to_bits());
        if let Some(&v) = self.values.lock().expect("bound cache lock").get(&key) {
            return Ok(v);
        }
        let v = theoretical_bound(kind, len, rate, theta, model)?;
        let mut map = self.values.lock().expect("bound cache lock");
        map.insert(key, v);
        if let Some(p) = &self.path {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(p, serde_json::to_vec(&*map)?).map_err(|e| Error::io(p, e))?;
        }
        Ok(v)
    }
}

/// Shared state for running experiments.
#[derive(Debug, Default)]
pub struct Runner {
    pub constructions: ConstructionCache,
    pub bounds: BoundCache,
    /// Print one line per finished row to stderr.
    pub verbose: bool,
}

impl Runner {
    /// Caches constructions and bounds under `dir`.
    pub fn with_cache_dir(dir: Option<PathBuf>) -> Self {
        Self {
            bounds: BoundCache::new(dir.as_ref().map(|d| d.join("bounds.json"))),
            constructions: ConstructionCache::new(dir),
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Variant {
    Adaptive,
    Robust { theta: f64, model: AttackModel },
}

struct Column {
    model: ModelTag,
    value: f64,
    noise: Vec<f64>,
}

struct Group {
    kind: ProfileKind,
    n: usize,
    rate: f64,
    q: usize,
    variant: Variant,
    profile: DistortionProfile,
    partition: IndexPartition,
    embed_bank: ChannelBank,
    attack_bank: Option<ChannelBank>,
    design_distortion: f64,
    bound: Option<f64>,
    columns: Vec<Column>,
}

struct TrialOutcome {
    seed: u64,
    distortion: f64,
    errors: Vec<u64>,
}

fn build_group(
    cfg: &ExperimentConfig,
    runner: &Runner,
    kind: ProfileKind,
    n: usize,
    rate: f64,
    variant: Variant,
    columns: Vec<Column>,
) -> Result<Group, Error> {
    let profile = DistortionProfile::analytic(kind, n)?;
    let q = payload_bits(rate, n);
    let embed_method = cfg.construction.embed.into();
    let (sol, partition, attack_bank): (EmbeddingSolution, _, _) = match variant {
        Variant::Adaptive => {
            let sol = solve_pls(&profile, q as f64)?;
            let w = runner.constructions.profile(&sol.embed_bank()?, embed_method)?;
            let part = select_adaptive_partition(&w, q)?;
            (sol, part, None)
        }
        Variant::Robust { theta, model } => {
            let sol = match model {
                AttackModel::Am2 => solve_am2(&profile, q as f64, theta)?,
                _ => solve_robust_pls_am1(&profile, q as f64, theta)?,
            };
            let embed_bank = sol.embed_bank()?;
            let attack_bank = sol.attack_bank()?;
            let w = runner.constructions.profile(&embed_bank, embed_method)?;
            let qp = runner
                .constructions
                .profile(&attack_bank, cfg.construction.attack.into())?;
            let m_f = key_set_size(&sol.theta, cfg.key_margin)?;
            let part = select_robust_partition(&w, &qp, q, m_f)?;
            (sol, part, Some(attack_bank))
        }
    };
    let bound = match cfg.experiment {
        ExperimentKind::Distortion => {
            let theta = match variant {
                Variant::Adaptive => 0.0,
                Variant::Robust { theta, .. } => theta,
            };
            Some(runner.bounds.bound(kind, cfg.bound_len, rate, theta)?)
        }
        ExperimentKind::Robustness => None,
    };
    Ok(Group {
        kind,
        n,
        rate,
        q,
        variant,
        embed_bank: sol.embed_bank()?,
        design_distortion: sol.per_bit_distortion(),
        profile,
        partition,
        attack_bank,
        bound,
        columns,
    })
}

fn run_trial(g: &Group, coder: &CoderConfig, seed: u64) -> Result<TrialOutcome, Error> {
    let cover = sample_bss(g.n, sub_seed(seed, COVER_STREAM));
    let message = sample_bss(g.q, sub_seed(seed, MESSAGE_STREAM));
    let (stego, ctx) = match g.variant {
        Variant::Adaptive => {
            let ctx = StegoContext::adaptive(g.partition.clone(), g.embed_bank.clone(), *coder)?;
            (adaptive_embed(&cover, &message, &ctx)?, ctx)
        }
        Variant::Robust { .. } => {
            let key = derive_frozen_key(sub_seed(seed, KEY_STREAM), g.partition.key().len());
            let ctx = StegoContext::robust(
                g.partition.clone(),
                g.embed_bank.clone(),
                g.attack_bank.clone().expect("robust groups carry an attack bank"),
                key,
                *coder,
            )?;
            (robust_embed(&cover, &message, &ctx)?, ctx)
        }
    };
    let distortion = g.profile.weighted_distortion(&cover, &stego)? / g.n as f64;
    let mut errors = Vec::with_capacity(g.columns.len());
    for (c, col) in g.columns.iter().enumerate() {
        let noise = sample_attack(&col.noise, sub_seed(seed, NOISE_STREAM + c as u64))?;
        let received = stego.xor(&noise)?;
        let extracted: BitVector = match g.variant {
            Variant::Adaptive => adaptive_extract(&received, &g.partition)?,
            Variant::Robust { .. } => robust_extract(&received, &ctx)?,
        };
        errors.push(extracted.hamming_distance(&message)? as u64);
    }
    Ok(TrialOutcome {
        seed,
        distortion,
        errors,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run_group(
    cfg: &ExperimentConfig,
    runner: &Runner,
    g: &Group,
    pool: &rayon::ThreadPool,
    report: &mut SimulationReport,
) -> Result<(), Error> {
    let start = Instant::now();
    let coder = CoderConfig::list(cfg.list_size).with_kernel(cfg.kernel.into());
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(g, &coder, trial_seed(cfg.seed, t)))
            .collect::<Result<_, _>>()
    })?;
    let wall = start.elapsed().as_secs_f64();
    let distortions: Vec<f64> = outcomes.iter().map(|o| o.distortion).collect();
    let (mean_distortion, distortion_ci95) = report::mean_ci95(&distortions);
    let (scheme, preset_theta) = match g.variant {
        Variant::Adaptive => (SchemeTag::Adaptive, None),
        Variant::Robust { theta, .. } => (SchemeTag::Robust, Some(theta)),
    };
    let base = ReportRow {
        experiment: cfg.experiment,
        profile: g.kind.into(),
        scheme,
        n: g.n,
        rate: g.rate,
        preset_theta,
        attack_model: None,
        attack_value: None,
        list_size: cfg.list_size,
        trials: cfg.trials,
        payload_bits: g.q,
        key_bits: g.partition.key().len(),
        nesting_violation: g.partition.nesting_violation(),
        design_distortion: g.design_distortion,
        bound_distortion: g.bound,
        mean_distortion,
        distortion_ci95,
        mean_ber: None,
        ber_ci95: None,
        ber_display: None,
        wall_seconds: wall,
    };
    let mut push = |row: ReportRow, col: Option<usize>| {
        let idx = report.rows.len();
        for (t, o) in outcomes.iter().enumerate() {
            report.trials.push(TrialRecord {
                row: idx,
                trial: t as u64,
                seed: o.seed,
                distortion: o.distortion,
                bit_errors: col.map(|c| o.errors[c]),
                message_bits: g.q as u64,
            });
        }
        if runner.verbose {
            eprintln!(
                "{:?} {:?} n={} R={} theta={:?} attack={:?}: distortion {:.6} ber {:?} ({:.1}s)",
                row.profile,
                row.scheme,
                row.n,
                row.rate,
                row.preset_theta,
                row.attack_value,
                row.mean_distortion,
                row.mean_ber,
                row.wall_seconds
            );
        }
        report.rows.push(row);
    };
    if g.columns.is_empty() {
        push(base, None);
        return Ok(());
    }
    for (c, col) in g.columns.iter().enumerate() {
        let bers: Vec<f64> = outcomes
            .iter()
            .map(|o| o.errors[c] as f64 / g.q.max(1) as f64)
            .collect();
        let (mean_ber, ber_ci95) = report::mean_ci95(&bers);
        push(
            ReportRow {
                attack_model: Some(col.model),
                attack_value: Some(col.value),
                mean_ber: Some(mean_ber),
                ber_ci95: Some(ber_ci95),
                ber_display: Some(report::display_ber(mean_ber)),
                ..base.clone()
            },
            Some(c),
        );
    }
    Ok(())
}

fn empty_report(cfg: &ExperimentConfig) -> SimulationReport {
    SimulationReport {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        rows: Vec::new(),
        trials: Vec::new(),
    }
}

/// One row per (profile, N, R, preset θ): mean per-bit weighted distortion
/// against the bound at `bound_len`. θ = 0 runs the adaptive scheme.
pub fn run_distortion_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<SimulationReport, Error> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::Distortion {
        return Err(Error::Config("not a distortion experiment".into()));
    }
    let pool = pool(cfg.workers)?;
    let mut report = empty_report(cfg);
    for &kind in &cfg.profiles {
        for &n in &cfg.block_lengths {
            for &rate in &cfg.rates {
                for &theta in &cfg.preset_theta {
                    let variant = if theta > 0.0 {
                        Variant::Robust { theta, model: AttackModel::Am1 }
                    } else {
                        Variant::Adaptive
                    };
                    let g = build_group(cfg, runner, kind.into(), n, rate, variant, Vec::new())?;
                    run_group(cfg, runner, &g, &pool, &mut report)?;
                }
            }
        }
    }
    Ok(report)
}

/// One row per (profile, N, R, scheme/preset θ, attack value) with the mean
/// message bit error rate after the attack.
pub fn run_robustness_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<SimulationReport, Error> {
    cfg.validate()?;
    let attack = match (&cfg.experiment, &cfg.attack) {
        (ExperimentKind::Robustness, Some(a)) => a,
        _ => return Err(Error::Config("not a robustness experiment".into())),
    };
    let model = match attack.model {
        ModelTag::Am2 => AttackModel::Am2,
        _ => AttackModel::Am1,
    };
    let pool = pool(cfg.workers)?;
    let mut report = empty_report(cfg);
    for &tag in &cfg.profiles {
        let kind: ProfileKind = tag.into();
        for &n in &cfg.block_lengths {
            for &rate in &cfg.rates {
                let columns = || -> Result<Vec<Column>, Error> {
                    let reference = match model {
                        AttackModel::Am2 => {
                            let profile = DistortionProfile::analytic(kind, n)?;
                            Some(solve_am2(&profile, payload_bits(rate, n) as f64, attack.reference_theta)?)
                        }
                        _ => None,
                    };
                    Ok(attack
                        .values
                        .iter()
                        .map(|&v| Column {
                            model: attack.model,
                            value: v,
                            noise: match &reference {
                                Some(r) => r.theta.iter().map(|t| v * t).collect(),
                                None => vec![v; n],
                            },
                        })
                        .collect())
                };
                let mut variants = Vec::new();
                for s in &cfg.schemes {
                    match s {
                        SchemeTag::Adaptive => variants.push(Variant::Adaptive),
                        SchemeTag::Robust => variants.extend(
                            cfg.preset_theta
                                .iter()
                                .map(|&theta| Variant::Robust { theta, model }),
                        ),
                    }
                }
                for v in variants {
                    let g = build_group(cfg, runner, kind, n, rate, v, columns()?)?;
                    run_group(cfg, runner, &g, &pool, &mut report)?;
                }
            }
        }
    }
    Ok(report)
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<SimulationReport, Error> {
    match cfg.experiment {
        ExperimentKind::Distortion => run_distortion_experiment(cfg, runner),
        ExperimentKind::Robustness => run_robustness_experiment(cfg, runner),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::files::{MethodSpec, ProfileTag};

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: kind,
            schemes: vec![SchemeTag::Adaptive, SchemeTag::Robust],
            profiles: vec![ProfileTag::Linear],
            block_lengths: vec![256],
            rates: vec![0.1, 0.2],
            preset_theta: vec![0.01],
            attack: match kind {
                ExperimentKind::Robustness => Some(AttackSpec {
                    model: ModelTag::Am1,
                    values: vec![0.0, 0.004],
                    reference_theta: 0.005,
                }),
                ExperimentKind::Distortion => None,
            },
            list_size: 4,
            kernel: KernelTag::Exact,
            trials: 6,
            seed: 3,
            workers: 2,
            key_margin: 0.0,
            bound_len: 1024,
            construction: ConstructionConfig {
                embed: MethodSpec::Bhattacharyya,
                attack: MethodSpec::Bhattacharyya,
            },
            check: Vec::new(),
        }
    }

    #[test]
    fn payload_sizes() {
        assert_eq!(payload_bits(0.1, 65536), 6554);
        assert_eq!(payload_bits(0.5, 1024), 512);
        assert_eq!(payload_bits(0.1, 256), 26);
    }

    #[test]
    fn distortion_rows_cover_the_grid() {
        let mut cfg = small(ExperimentKind::Distortion);
        cfg.preset_theta = vec![0.0, 0.05];
        cfg.block_lengths = vec![64, 128];
        let rep = run_distortion_experiment(&cfg, &Runner::default()).unwrap();
        assert_eq!(rep.rows.len(), 2 * 2 * 2);
        assert_eq!(rep.trials.len(), rep.rows.len() * 6);
        for r in &rep.rows {
            assert!(r.mean_distortion >= 0.0);
            assert!(r.bound_distortion.unwrap() > 0.0);
            assert!(r.mean_ber.is_none());
        }
    }

    #[test]
    fn noiseless_column_is_error_free() {
        let rep = run_robustness_experiment(&small(ExperimentKind::Robustness), &Runner::default()).unwrap();
        // 2 rates x (adaptive + one robust) x 2 columns
        assert_eq!(rep.rows.len(), 8);
        for r in rep.rows.iter().filter(|r| r.attack_value == Some(0.0)) {
            assert_eq!(r.mean_ber, Some(0.0), "{r:?}");
            assert_eq!(r.ber_display.as_deref(), Some("0"));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut a = small(ExperimentKind::Robustness);
        a.rates = vec![0.1];
        let mut b = a.clone();
        b.workers = 1;
        let ra = run_robustness_experiment(&a, &Runner::default()).unwrap();
        let rb = run_robustness_experiment(&b, &Runner::default()).unwrap();
        assert_eq!(ra.trials, rb.trials);
        let strip = |rows: &[ReportRow]| {
            rows.iter()
                .map(|r| ReportRow { wall_seconds: 0.0, ..r.clone() })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&ra.rows), strip(&rb.rows));
    }

    #[test]
    fn means_recompute_from_records() {
        let rep = run_robustness_experiment(&small(ExperimentKind::Robustness), &Runner::default()).unwrap();
        let again = report::reaggregate(rep.rows.len(), &rep.trials);
        for (row, (d, b)) in rep.rows.iter().zip(again) {
            assert!((row.mean_distortion - d).abs() < 1e-12);
            assert!((row.mean_ber.unwrap() - b.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn am2_columns_scale_the_reference_solution() {
        let mut cfg = small(ExperimentKind::Robustness);
        cfg.rates = vec![0.1];
        cfg.schemes = vec![SchemeTag::Adaptive];
        cfg.attack = Some(AttackSpec {
            model: ModelTag::Am2,
            values: vec![0.8],
            reference_theta: 0.005,
        });
        let rep = run_robustness_experiment(&cfg, &Runner::default()).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].attack_model, Some(ModelTag::Am2));
    }
}
