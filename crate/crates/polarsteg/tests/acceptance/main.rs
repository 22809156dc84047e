//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- AC4 AC7` runs a subset. Set
//! `POLARSTEG_ACCEPT_TRIALS` to shrink the Monte Carlo experiments for a
//! smoke run (tolerances are pinned for the full counts) and
//! `POLARSTEG_ACCEPT_STRICT=1` to exit nonzero when a criterion fails.

mod oracle;
mod props;

use std::cell::RefCell;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarsteg::core::codec::{scl_decode, CoderConfig, FrozenSpec, LlrKernel};
use polarsteg::core::construction::{select_adaptive_partition, ConstructionMethod};
use polarsteg::core::optimizer::{
    solve_dls, solve_pls, solve_robust_pls_am1, theoretical_bound, AttackModel, DistortionProfile, ProfileKind,
};
use polarsteg::core::sampling::{sample_bss, sub_seed, trial_seed};
use polarsteg::core::stego::{adaptive_embed, adaptive_extract, StegoContext};
use polarsteg::core::transform::polar_transform;
use polarsteg::core::{BitVector, ChannelBank, ChannelRole};
use polarsteg::files::{ProfileTag, SchemeTag};
use polarsteg::sim::{payload_bits, run_experiment, ExperimentConfig, ReportRow, Runner};

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>, details: Vec<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details,
        }
    }
}

struct Ctx {
    runner: Runner,
    trials: Option<u64>,
    /// Robust θ = 0.01 rows of the uniform-noise table, shared with AC9.
    table1_strong: RefCell<Option<Vec<ReportRow>>>,
}

impl Ctx {
    fn config(&self, name: &str) -> Result<ExperimentConfig> {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
        let mut cfg = ExperimentConfig::read(&path)?;
        cfg.check.clear();
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        Ok(cfg)
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
        Ok(run_experiment(cfg, &self.runner)?.rows)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

fn ber(r: &ReportRow) -> f64 {
    r.mean_ber.unwrap_or(f64::NAN)
}

fn row_line(r: &ReportRow) -> String {
    let scheme = match (r.scheme, r.preset_theta) {
        (SchemeTag::Robust, Some(t)) => format!("robust θ={t}"),
        _ => "adaptive".into(),
    };
    format!(
        "{:?} {scheme} N={} attack={}: BER {:.5} ±{:.5}",
        r.profile,
        r.n,
        r.attack_value.unwrap_or(0.0),
        ber(r),
        r.ber_ci95.unwrap_or(0.0)
    )
}

// ---------------------------------------------------------------- AC1

fn ac1(ctx: &Ctx) -> Result<Outcome> {
    const PAIRS: u64 = 10_000;
    let start = Instant::now();
    let mut details = Vec::new();
    let mut failures = 0u64;
    for n in [1usize << 8, 1 << 12, 1 << 16] {
        let t0 = Instant::now();
        let profile = DistortionProfile::analytic(ProfileKind::Linear, n)?;
        let q = payload_bits(0.3, n);
        let sol = solve_pls(&profile, q as f64)?;
        let bank = sol.embed_bank()?;
        let prof = ctx
            .runner
            .constructions
            .profile(&bank, ConstructionMethod::MergeErrorProbability { mu: 16 })?;
        let part = select_adaptive_partition(&prof, q)?;
        let coder = CoderConfig::sc().with_kernel(LlrKernel::MinSum);
        let sc = StegoContext::adaptive(part, bank, coder)?;
        let mut bad = 0u64;
        for t in 0..PAIRS {
            let seed = trial_seed(0xac1, t);
            let cover = sample_bss(n, sub_seed(seed, 1));
            let msg = sample_bss(q, sub_seed(seed, 2));
            let stego = adaptive_embed(&cover, &msg, &sc)?;
            if adaptive_extract(&stego, sc.partition())? != msg {
                bad += 1;
            }
        }
        failures += bad;
        details.push(format!(
            "N={n}: {bad} mismatches in {PAIRS} pairs ({:.1} s)",
            t0.elapsed().as_secs_f64()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    details.push(format!("total {secs:.1} s, limit 120 s"));
    Ok(Outcome::new(
        failures == 0 && secs < 120.0,
        format!("{failures} mismatches over 3×{PAIRS} roundtrips in {secs:.0} s"),
        details,
    ))
}

// ---------------------------------------------------------------- AC2

const GRID: usize = 1_000_000;

/// Payload and distortion along a log-spaced λ grid on `[1e-4, 1e4]`.
fn lambda_grid(rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut pay, mut dist) = (Vec::with_capacity(GRID), Vec::with_capacity(GRID));
    for k in 0..GRID {
        let lambda = 10f64.powf(-4.0 + 8.0 * k as f64 / (GRID - 1) as f64);
        let (mut p, mut d) = (0.0, 0.0);
        for &r in rho {
            let x = oracle::gibbs(lambda, r);
            p += oracle::h2(x);
            d += x * r;
        }
        pay.push(p);
        dist.push(d);
    }
    (pay, dist)
}

/// Linear interpolation of `other` where the decreasing `key` crosses `target`.
fn cross(key: &[f64], other: &[f64], target: f64) -> Option<f64> {
    let k = key.iter().position(|&v| v < target)?;
    if k == 0 {
        return None;
    }
    let t = (key[k - 1] - target) / (key[k - 1] - key[k]);
    Some(other[k - 1] + t * (other[k] - other[k - 1]))
}

fn ac2(_: &Ctx) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac2);
    let (mut worst_pls, mut worst_dls, mut worst_dual, mut worst_opt) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for n in [2usize, 4, 8, 16] {
        for _ in 0..10 {
            let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
            let profile = DistortionProfile::custom(rho.clone())?;
            let (pay, dist) = lambda_grid(&rho);

            let q = rng.gen_range(0.1..0.9) * n as f64;
            let pls = solve_pls(&profile, q)?;
            let d_grid = cross(&pay, &dist, q).expect("payload target inside the grid");
            worst_pls = worst_pls
                .max((pls.achieved_distortion - d_grid).abs())
                .max((pls.achieved_payload - q).abs());
            let best_feasible = pay
                .iter()
                .zip(&dist)
                .filter(|(p, _)| **p >= q)
                .map(|(_, d)| *d)
                .fold(f64::INFINITY, f64::min);
            worst_opt = worst_opt.max(pls.achieved_distortion - best_feasible);

            let d_eps = rng.gen_range(0.05..0.45) * rho.iter().sum::<f64>();
            let dls = solve_dls(&profile, d_eps)?;
            let p_grid = cross(&dist, &pay, d_eps).expect("distortion target inside the grid");
            worst_dls = worst_dls
                .max((dls.achieved_payload - p_grid).abs())
                .max((dls.achieved_distortion - d_eps).abs());

            let back = solve_dls(&profile, pls.achieved_distortion)?;
            worst_dual = worst_dual.max((back.achieved_payload - q).abs());
            count += 1;
        }
    }
    let pass = worst_pls < 1e-6 && worst_dls < 1e-6 && worst_opt < 1e-6 && worst_dual < 1e-5;
    Ok(Outcome::new(
        pass,
        format!("{count} profiles, max deviation {:.1e}, duality residual {worst_dual:.1e} bits", worst_pls.max(worst_dls)),
        vec![
            format!("PLS vs grid: {worst_pls:.2e} (limit 1e-6)"),
            format!("PLS excess over best feasible grid point: {worst_opt:.2e} (limit 1e-6)"),
            format!("DLS vs grid: {worst_dls:.2e} (limit 1e-6)"),
            format!("PLS → DLS payload residual: {worst_dual:.2e} bits (limit 1e-5)"),
        ],
    ))
}

// ---------------------------------------------------------------- AC3

fn ac3(_: &Ctx) -> Result<Outcome> {
    let (rate, theta, n) = (0.1, 0.05, 1usize << 16);
    let target = rate + oracle::h2(theta);
    let expect = oracle::h2_inv(target);
    let profile = DistortionProfile::analytic(ProfileKind::Constant, n)?;
    let sol = solve_robust_pls_am1(&profile, rate * n as f64, theta)?;
    let dev = sol.p.iter().map(|p| (p - expect).abs()).fold(0.0, f64::max);
    let eb = theoretical_bound(ProfileKind::Constant, 1 << 22, rate, theta, AttackModel::Am1)?;
    let adaptive = solve_pls(&profile, rate * n as f64)?;
    let dev_adaptive = adaptive
        .p
        .iter()
        .map(|p| (p - oracle::h2_inv(rate)).abs())
        .fold(0.0, f64::max);
    let pass = dev < 1e-9 && (eb - expect).abs() < 1e-9 && dev_adaptive < 1e-9;
    Ok(Outcome::new(
        pass,
        format!("p = h2_inv({target:.7}) = {expect:.10}, max deviation {dev:.1e}"),
        vec![
            format!("E_b at N=2^22: {eb:.10} (deviation {:.1e})", (eb - expect).abs()),
            format!("without attack noise: max |p - h2_inv(R)| = {dev_adaptive:.1e}"),
        ],
    ))
}

// ---------------------------------------------------------------- AC4

fn ac4(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config("distortion.toml")?;
    let rows = ctx.run(&cfg)?;
    let (small, large) = (cfg.block_lengths[0], *cfg.block_lengths.last().unwrap());
    let mut details = Vec::new();
    let (mut within, mut shrink, mut cells) = (0, 0, 0);
    for &profile in &cfg.profiles {
        for &rate in &cfg.rates {
            let find = |n: usize| {
                rows.iter()
                    .find(|r| r.profile == profile && r.n == n && close(r.rate, rate))
                    .expect("row per cell")
            };
            let (a, b) = (find(small), find(large));
            let bound = b.bound_distortion.expect("distortion rows carry the bound");
            let rel = (b.mean_distortion - bound) / bound;
            let drop = (a.mean_distortion - bound) - (b.mean_distortion - bound);
            let ok_rel = rel.abs() <= 0.10;
            let ok_gap = drop > a.distortion_ci95.hypot(b.distortion_ci95);
            within += ok_rel as usize;
            shrink += ok_gap as usize;
            cells += 1;
            details.push(format!(
                "{profile:?} R={rate}: bound {bound:.5}, N={small} {:.5} ±{:.5}, N={large} {:.5} ±{:.5}, \
                 gap {:+.1}%{}, gap drop {drop:.5}{}",
                a.mean_distortion,
                a.distortion_ci95,
                b.mean_distortion,
                b.distortion_ci95,
                100.0 * rel,
                if ok_rel { "" } else { " (outside 10%)" },
                if ok_gap { "" } else { " (not significant)" },
            ));
        }
    }
    Ok(Outcome::new(
        within == cells && shrink == cells,
        format!("{within}/{cells} cells within 10% of the bound, gap shrinks in {shrink}/{cells}"),
        details,
    ))
}

// ---------------------------------------------------------------- AC5

fn narrowed(
    base: &ExperimentConfig,
    schemes: &[SchemeTag],
    theta: &[f64],
    values: &[f64],
    lengths: &[usize],
) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.schemes = schemes.to_vec();
    cfg.preset_theta = theta.to_vec();
    cfg.block_lengths = lengths.to_vec();
    cfg.attack.as_mut().expect("robustness config").values = values.to_vec();
    cfg
}

fn table1_strong(ctx: &Ctx, base: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    if let Some(rows) = ctx.table1_strong.borrow().as_ref() {
        return Ok(rows.clone());
    }
    let rows = ctx.run(&narrowed(base, &[SchemeTag::Robust], &[0.01], &[0.006], &[1 << 16]))?;
    *ctx.table1_strong.borrow_mut() = Some(rows.clone());
    Ok(rows)
}

fn ac5(ctx: &Ctx) -> Result<Outcome> {
    let base = ctx.config("table1.toml")?;
    let mut details = Vec::new();
    let mut pass = true;
    let mut verdict = |rows: &[ReportRow], ok: &dyn Fn(f64) -> bool, rule: &str| {
        for r in rows {
            let good = ok(ber(r));
            pass &= good;
            details.push(format!("{} [{rule}]{}", row_line(r), if good { "" } else { " FAIL" }));
        }
    };
    let adaptive = ctx.run(&narrowed(&base, &[SchemeTag::Adaptive], &[0.01], &[0.002, 0.004, 0.006], &[1 << 16]))?;
    verdict(&adaptive, &|b| b > 0.4, "> 0.4");
    let weak = ctx.run(&narrowed(&base, &[SchemeTag::Robust], &[0.005], &[0.004], &[1 << 16]))?;
    verdict(&weak, &|b| (0.05..=0.25).contains(&b), "in [0.05, 0.25]");
    let strong = table1_strong(ctx, &base)?;
    verdict(&strong, &|b| b < 5e-3, "< 5e-3");
    let failed = details.iter().filter(|d| d.ends_with("FAIL")).count();
    Ok(Outcome::new(pass, format!("{}/{} cells within tolerance", details.len() - failed, details.len()), details))
}

// ---------------------------------------------------------------- AC6

fn ac6(ctx: &Ctx) -> Result<Outcome> {
    let base = ctx.config("table2.toml")?;
    let mut details = Vec::new();
    let mut pass = true;
    let weak = ctx.run(&narrowed(&base, &[SchemeTag::Robust], &[0.005], &[0.8], &[1 << 16]))?;
    let strong = ctx.run(&narrowed(&base, &[SchemeTag::Robust], &[0.01], &[1.2], &[1 << 16]))?;
    for (rows, ok, rule) in [
        (&weak, (|b: f64| (0.08..=0.30).contains(&b)) as fn(f64) -> bool, "in [0.08, 0.30]"),
        (&strong, |b: f64| b < 5e-3, "< 5e-3"),
    ] {
        for r in rows {
            let good = ok(ber(r));
            pass &= good;
            details.push(format!("{} [{rule}]{}", row_line(r), if good { "" } else { " FAIL" }));
        }
    }
    let failed = details.iter().filter(|d| d.ends_with("FAIL")).count();
    Ok(Outcome::new(pass, format!("{}/{} cells within tolerance", details.len() - failed, details.len()), details))
}

// ---------------------------------------------------------------- AC7

fn ac7(_: &Ctx) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac7);
    let (mut mismatches, mut ties) = (0, 0);
    let mut details = Vec::new();
    for inst in 0..1000 {
        let n = 1usize << rng.gen_range(1..=4);
        let n_free = rng.gen_range(1..=n.min(6));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut frozen: Vec<Option<u8>> = vec![None; n];
        for &i in &idx[n_free..] {
            frozen[i] = Some(rng.gen_range(0..2));
        }
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.45)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();

        let fixed: Vec<usize> = (0..n).filter(|&i| frozen[i].is_some()).collect();
        let values: Vec<u8> = fixed.iter().map(|&i| frozen[i].unwrap()).collect();
        let spec = FrozenSpec::new(fixed, BitVector::from_bits(&values)?)?;
        let bank = ChannelBank::new(p.clone(), ChannelRole::Attack)?;
        let obs = BitVector::from_bits(&y)?;
        let got = scl_decode(&obs, &bank, &spec, &CoderConfig::list(1 << n_free))?.u.to_bits();

        let best = oracle::ml_search(&y, &p, &frozen);
        ensure!(
            polar_transform(&BitVector::from_bits(&best.u)?)?.to_bits() == oracle::polar_transform(&best.u),
            "transform disagrees with the reference"
        );
        if got != best.u {
            let m = oracle::neg_log_likelihood(&y, &p, &oracle::polar_transform(&got));
            if best.tied && (m - best.metric).abs() <= 1e-9 {
                ties += 1;
            } else {
                mismatches += 1;
                details.push(format!("instance {inst}: N={n}, metric {m} vs optimum {}", best.metric));
            }
        }
    }
    details.push(format!("{ties} exact ties resolved to an equally good input"));
    Ok(Outcome::new(mismatches == 0, format!("{mismatches} mismatches in 1000 instances"), details))
}

// ---------------------------------------------------------------- AC8

fn ac8(_: &Ctx) -> Result<Outcome> {
    let suites: [(&str, fn() -> Result<String, String>); 6] = [
        ("transform involution", props::involution),
        ("partition disjoint cover", props::disjoint_cover),
        ("degradation ordering", props::degradation_order),
        ("frozen-key invariance", props::frozen_key_invariance),
        ("Gibbs form", props::gibbs_form),
        ("randomized rounding marginals", props::rounding_marginal),
    ];
    let mut details = Vec::new();
    let mut passed = 0;
    for (name, f) in suites {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => {
                passed += 1;
                details.push(format!("{name}: ok, {msg} ({secs:.1} s)"));
            }
            Err(msg) => details.push(format!("{name}: FAIL {msg}")),
        }
    }
    Ok(Outcome::new(passed == suites.len(), format!("{passed}/{} suites hold", suites.len()), details))
}

// ---------------------------------------------------------------- AC9

fn ac9(ctx: &Ctx) -> Result<Outcome> {
    let base = ctx.config("table1.toml")?;
    let mut cfg = narrowed(&base, &[SchemeTag::Robust], &[0.01], &[0.006], &[1 << 12, 1 << 14]);
    cfg.profiles = vec![ProfileTag::Linear];
    let mut rows = ctx.run(&cfg)?;
    rows.extend(
        table1_strong(ctx, &base)?
            .into_iter()
            .filter(|r| r.profile == ProfileTag::Linear),
    );
    rows.sort_by_key(|r| r.n);
    let mut details: Vec<String> = rows.iter().map(row_line).collect();
    let mut pass = rows.len() == 3;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let margin = a.ber_ci95.unwrap_or(0.0).hypot(b.ber_ci95.unwrap_or(0.0));
        let ok = ber(a) - ber(b) > margin;
        pass &= ok;
        details.push(format!(
            "N={} → N={}: drop {:.5}, required > {margin:.5}{}",
            a.n,
            b.n,
            ber(a) - ber(b),
            if ok { "" } else { " FAIL" }
        ));
    }
    Ok(Outcome::new(
        pass,
        format!(
            "BER {} over N = 2^12, 2^14, 2^16",
            rows.iter().map(|r| format!("{:.5}", ber(r))).collect::<Vec<_>>().join(" → ")
        ),
        details,
    ))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.to_ascii_uppercase())
        .collect();
    let trials = std::env::var("POLARSTEG_ACCEPT_TRIALS").ok().and_then(|v| v.parse().ok());
    let strict = std::env::var("POLARSTEG_ACCEPT_STRICT").is_ok_and(|v| !v.is_empty() && v != "0");
    let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache");
    let ctx = Ctx {
        runner: Runner::with_cache_dir(Some(cache)),
        trials,
        table1_strong: RefCell::new(None),
    };
    if let Some(t) = trials {
        println!("note: Monte Carlo experiments shortened to {t} trials");
    }

    let criteria: [(&str, fn(&Ctx) -> Result<Outcome>); 9] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (id, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|x| x == id) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let out = f(&ctx).unwrap_or_else(|e| Outcome::new(false, format!("error: {e:#}"), Vec::new()));
        for d in &out.details {
            println!("    {d}");
        }
        println!(
            "{id} {} {} [{:.1} s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.summary,
            t0.elapsed().as_secs_f64()
        );
        failed += !out.pass as usize;
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
