//! Property suites, run through proptest's runner so failures shrink.

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarsteg::core::codec::{sc_encode_randomized, CoderConfig, FrozenSpec};
use polarsteg::core::construction::{
    degrading_merge_construct, degrading_merge_error_construct, key_set_size, polarize_bhattacharyya,
    select_adaptive_partition, select_robust_partition, select_robust_partition_threshold, ConstructionMethod,
    IndexPartition, ReliabilityProfile,
};
use polarsteg::core::optimizer::{
    solve_am2, solve_dls, solve_pls, solve_robust_pls_am1, DistortionProfile, EmbeddingSolution, ProfileKind,
};
use polarsteg::core::sampling::{sample_attack, sample_bss, sub_seed, trial_seed};
use polarsteg::core::stego::{derive_frozen_key, robust_embed, robust_extract, StegoContext};
use polarsteg::core::transform::polar_transform;
use polarsteg::core::{BitVector, ChannelBank, ChannelRole};
use polarsteg::sim::report::mean_ci95;

use crate::oracle;

/// Slack for merged constructions, whose scores carry merge error.
const MERGE_SLACK: f64 = 1e-3;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn verdict<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>, cases: u32) -> Result<String, String> {
    r.map(|_| format!("{cases} cases")).map_err(|e| e.to_string())
}

pub fn involution() -> Result<String, String> {
    let strat = (1u32..=14).prop_flat_map(|n| vec(any::<bool>(), 1usize << n));
    let r = runner(96).run(&strat, |bits| {
        let u = BitVector::from_bools(bits);
        let twice = polar_transform(&polar_transform(&u).unwrap()).unwrap();
        prop_assert_eq!(twice, u);
        Ok(())
    });
    verdict(r, 96)
}

fn check_cover(part: &IndexPartition) -> Result<(), TestCaseError> {
    let mut seen = vec![0u8; part.len()];
    for &i in part.key().iter().chain(part.message()).chain(part.encoder()) {
        prop_assert!(i < part.len());
        seen[i] += 1;
    }
    prop_assert!(seen.iter().all(|&c| c == 1), "not a disjoint cover");
    Ok(())
}

pub fn disjoint_cover() -> Result<String, String> {
    let strat = (1u32..=10).prop_flat_map(|n| {
        let len = 1usize << n;
        (
            vec(0.0f64..=1.0, len),
            vec(0.0f64..=1.0, len),
            0..=len,
            0..=len,
            0.0f64..=1.0,
            0.0f64..=1.0,
        )
    });
    let r = runner(256).run(&strat, |(sw, sq, a, b, tw, tq)| {
        let len = sw.len();
        let (q, m_f) = (a.min(len), b.min(len - a.min(len)));
        let pw = ReliabilityProfile::new(ConstructionMethod::Bhattacharyya, sw).unwrap();
        let pq = ReliabilityProfile::new(ConstructionMethod::Bhattacharyya, sq).unwrap();

        let adaptive = select_adaptive_partition(&pw, q).unwrap();
        check_cover(&adaptive)?;
        prop_assert_eq!(adaptive.message().len(), q);
        prop_assert!(adaptive.key().is_empty());

        let robust = select_robust_partition(&pw, &pq, q, m_f).unwrap();
        check_cover(&robust)?;
        prop_assert_eq!(robust.message().len(), q);
        prop_assert_eq!(robust.key().len(), m_f);

        check_cover(&select_robust_partition_threshold(&pw, &pq, tw, tq).unwrap())?;
        Ok(())
    });
    verdict(r, 256)
}

pub fn degradation_order() -> Result<String, String> {
    let strat = (1u32..=8).prop_flat_map(|n| {
        vec((0.0f64..0.2, 0.0f64..=1.0), 1usize << n).prop_map(|v| {
            let theta: Vec<f64> = v.iter().map(|x| x.0).collect();
            let p: Vec<f64> = v.iter().map(|&(t, s)| t + s * (0.5 - t)).collect();
            (p, theta)
        })
    });
    let r = runner(48).run(&strat, |(p, theta)| {
        let w = ChannelBank::new(p, ChannelRole::Embedding).unwrap();
        let q = ChannelBank::new(theta, ChannelRole::Attack).unwrap();
        let (zw, zq) = (polarize_bhattacharyya(&w), polarize_bhattacharyya(&q));
        for (a, b) in zw.scores().iter().zip(zq.scores()) {
            prop_assert!(*a >= b - 1e-12, "Bhattacharyya {} < {}", a, b);
        }
        let pairs = [
            (degrading_merge_construct(&w, 16).unwrap(), degrading_merge_construct(&q, 16).unwrap()),
            (
                degrading_merge_error_construct(&w, 16).unwrap(),
                degrading_merge_error_construct(&q, 16).unwrap(),
            ),
        ];
        for (pw, pq) in &pairs {
            for (a, b) in pw.scores().iter().zip(pq.scores()) {
                prop_assert!(*a >= b - MERGE_SLACK, "merged {} < {}", a, b);
            }
        }
        Ok(())
    });
    verdict(r, 48)
}

fn gibbs_residual(profile: &[f64], sol: &EmbeddingSolution) -> f64 {
    profile
        .iter()
        .zip(&sol.p)
        .map(|(&r, &p)| (p - oracle::gibbs(sol.lambda, r)).abs())
        .fold(0.0, f64::max)
}

pub fn gibbs_form() -> Result<String, String> {
    let strat = (0u32..=6).prop_flat_map(|n| (vec(0.01f64..10.0, 1usize << n), 0.05f64..0.6, 0.001f64..0.05));
    let r = runner(128).run(&strat, |(rho, frac, theta)| {
        let len = rho.len() as f64;
        let profile = DistortionProfile::custom(rho.clone()).unwrap();
        let pls = solve_pls(&profile, frac * len).unwrap();
        let dls = solve_dls(&profile, frac * 0.5 * rho.iter().sum::<f64>()).unwrap();
        let q = frac * (1.0 - oracle::h2(theta)) * len;
        let am1 = solve_robust_pls_am1(&profile, q, theta).unwrap();
        let am2 = solve_am2(&profile, q, theta).unwrap();
        for (name, sol) in [("pls", &pls), ("dls", &dls), ("am1", &am1), ("am2", &am2)] {
            let res = gibbs_residual(&rho, sol);
            prop_assert!(res <= 1e-12, "{} drifts by {}", name, res);
        }
        let ratio = am2.attack_ratio.unwrap();
        for (t, p) in am2.theta.iter().zip(&am2.p) {
            prop_assert!((t - ratio * p).abs() <= 1e-15);
        }
        Ok(())
    });
    verdict(r, 128)
}

/// Distortion and BER means under two distinct keys must agree within the
/// sum of their 95% half-widths.
pub fn frozen_key_invariance() -> Result<String, String> {
    const LEN: usize = 1024;
    const TRIALS: u64 = 200;
    let run = || -> polarsteg::core::Result<Vec<(f64, f64, f64, f64)>> {
        let profile = DistortionProfile::analytic(ProfileKind::Linear, LEN)?;
        let q = 102;
        let sol = solve_robust_pls_am1(&profile, q as f64, 0.03)?;
        let (w, qb) = (sol.embed_bank()?, sol.attack_bank()?);
        let pw = degrading_merge_error_construct(&w, 16)?;
        let pq = degrading_merge_error_construct(&qb, 16)?;
        let m_f = key_set_size(&sol.theta, 0.0)?;
        let part = select_robust_partition(&pw, &pq, q, m_f)?;
        let noise_p = vec![0.03; LEN];
        let mut out = Vec::new();
        for (k, secret) in [(0u64, 0x5eed_0001u64), (1, 0x5eed_0002)] {
            let key = derive_frozen_key(secret, m_f);
            let ctx = StegoContext::robust(part.clone(), w.clone(), qb.clone(), key, CoderConfig::list(16))?;
            let (mut dist, mut ber) = (Vec::new(), Vec::new());
            for t in 0..TRIALS {
                let seed = trial_seed(40 + k, t);
                let cover = sample_bss(LEN, sub_seed(seed, 1));
                let msg = sample_bss(q, sub_seed(seed, 2));
                let stego = robust_embed(&cover, &msg, &ctx)?;
                dist.push(profile.weighted_distortion(&cover, &stego)? / LEN as f64);
                let noisy = stego.xor(&sample_attack(&noise_p, sub_seed(seed, 16))?)?;
                ber.push(robust_extract(&noisy, &ctx)?.hamming_distance(&msg)? as f64 / q as f64);
            }
            let (dm, dh) = mean_ci95(&dist);
            let (bm, bh) = mean_ci95(&ber);
            out.push((dm, dh, bm, bh));
        }
        Ok(out)
    };
    let s = run().map_err(|e| e.to_string())?;
    let (a, b) = (s[0], s[1]);
    let msg = format!(
        "distortion {:.5}±{:.5} vs {:.5}±{:.5}, BER {:.4}±{:.4} vs {:.4}±{:.4}",
        a.0, a.1, b.0, b.1, a.2, a.3, b.2, b.3
    );
    if (a.0 - b.0).abs() < a.1 + b.1 && (a.2 - b.2).abs() < a.3 + b.3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Frequency of `û_i = 1` at a single free position against the exact SC
/// posterior, over 10⁴ seeds per instance.
pub fn rounding_marginal() -> Result<String, String> {
    const SEEDS: u64 = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a08);
    let mut worst = 0.0f64;
    for inst in 0..8 {
        let len = if inst % 2 == 0 { 4 } else { 8 };
        let free = rng.gen_range(0..len);
        let p: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..0.4)).collect();
        let y: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
        let values: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
        let frozen_idx: Vec<usize> = (0..len).filter(|&i| i != free).collect();
        let frozen = FrozenSpec::new(
            frozen_idx.clone(),
            BitVector::from_bits(&frozen_idx.iter().map(|&i| values[i]).collect::<Vec<_>>()).unwrap(),
        )
        .unwrap();
        let bank = ChannelBank::new(p.clone(), ChannelRole::Embedding).unwrap();
        let cover = BitVector::from_bits(&y).unwrap();
        let expect = oracle::sc_posterior_one(&y, &p, &values[..free]);
        let ones = (0..SEEDS)
            .filter(|&s| sc_encode_randomized(&cover, &bank, &frozen, s).unwrap().get(free))
            .count() as f64;
        let sigma = (SEEDS as f64 * expect * (1.0 - expect)).sqrt().max(1e-9);
        let z = (ones - SEEDS as f64 * expect).abs() / sigma;
        worst = worst.max(z);
        if z > 3.0 {
            return Err(format!("instance {inst}: {ones} ones, expected {:.1}", SEEDS as f64 * expect));
        }
    }
    Ok(format!("8 instances, worst deviation {worst:.2}σ"))
}
