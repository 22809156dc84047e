//! Payload- and distortion-limited sender problems with additive distortion.
//!
//! The optimal flip probabilities have the Gibbs form
//! `p_i = 1 / (1 + exp(λ·ρ_i))`, so each problem reduces to a scalar search
//! for `λ`. Payload `Σ h2(p_i)` and distortion `Σ p_i ρ_i` both decrease
//! monotonically in `λ`, which is what the bisections rely on. Positions
//! with infinite cost ("wet") never change and are left out of all sums.

use alloc::vec::Vec;

use crate::{math, BitVector, ChannelBank, ChannelRole, Error, Result};

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn h2(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange {
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(h2_unchecked(p))
}

#[inline]
fn h2_unchecked(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * math::log2(p) + (1.0 - p) * math::log2(1.0 - p))
    }
}

/// The `p ∈ [0, 1/2]` with `h2(p) = y`, by bisection.
pub fn h2_inv(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::ProbabilityOutOfRange {
            value: y,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h2_unchecked(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if y - h2_unchecked(lo) <= h2_unchecked(hi) - y {
        lo
    } else {
        hi
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    /// `c(x) = 1`
    Constant,
    /// `c(x) = x`
    Linear,
    /// `c(x) = x²`
    Square,
    Custom,
}

impl ProfileKind {
    fn cost(self, x: f64) -> f64 {
        match self {
            ProfileKind::Constant | ProfileKind::Custom => 1.0,
            ProfileKind::Linear => x,
            ProfileKind::Square => x * x,
        }
    }
}

/// Per-position modification costs `ρ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionProfile {
    kind: ProfileKind,
    rho: Vec<f64>,
}

impl DistortionProfile {
    /// `ρ_i = c(i/N)` for 1-based `i`, i.e. `c((j+1)/N)` at 0-based `j`.
    pub fn analytic(kind: ProfileKind, len: usize) -> Result<Self> {
        if kind == ProfileKind::Custom {
            return Err(Error::InvalidParameter("custom profiles need explicit weights"));
        }
        if len == 0 {
            return Err(Error::InvalidParameter("profile must be non-empty"));
        }
        let rho = (1..=len).map(|i| kind.cost(i as f64 / len as f64)).collect();
        Ok(Self { kind, rho })
    }

    pub fn custom(rho: Vec<f64>) -> Result<Self> {
        if rho.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::InvalidParameter("costs must be non-negative"));
        }
        if !rho.iter().any(|r| r.is_finite()) {
            return Err(Error::InvalidParameter("at least one cost must be finite"));
        }
        Ok(Self {
            kind: ProfileKind::Custom,
            rho,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn has_wet(&self) -> bool {
        self.rho.iter().any(|r| r.is_infinite())
    }

    fn finite_count(&self) -> usize {
        self.rho.iter().filter(|r| r.is_finite()).count()
    }

    /// `Σ ρ_i [x_i ≠ y_i]`.
    pub fn weighted_distortion(&self, cover: &BitVector, stego: &BitVector) -> Result<f64> {
        if cover.len() != self.len() || stego.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: stego.len(),
            });
        }
        let diff = cover.xor(stego)?;
        Ok(math::compensated_sum(
            self.rho
                .iter()
                .enumerate()
                .filter(|&(i, _)| diff.get(i))
                .map(|(_, &r)| r),
        ))
    }
}

#[inline]
fn gibbs(lambda: f64, rho: f64) -> f64 {
    if rho.is_infinite() {
        0.0
    } else if rho == 0.0 {
        0.5
    } else {
        1.0 / (1.0 + math::exp(lambda * rho))
    }
}

/// `p_i = exp(-λρ_i) / (1 + exp(-λρ_i))`; wet positions get 0.
pub fn gibbs_probs(profile: &DistortionProfile, lambda: f64) -> Result<Vec<f64>> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidParameter("lambda must be non-negative"));
    }
    Ok(profile.rho.iter().map(|&r| gibbs(lambda, r)).collect())
}

fn payload_at(rho: &[f64], lambda: f64) -> f64 {
    math::compensated_sum(rho.iter().map(|&r| h2_unchecked(gibbs(lambda, r))))
}

fn distortion_at(rho: &[f64], lambda: f64) -> f64 {
    math::compensated_sum(
        rho.iter()
            .filter(|r| r.is_finite())
            .map(|&r| gibbs(lambda, r) * r),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackModel {
    None,
    /// Uniform attack noise `θ_i = θ`.
    Am1,
    /// Noise proportional to the embedding probability, `θ_i = R_a·p_i`.
    Am2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSolution {
    pub lambda: f64,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub attack_model: AttackModel,
    /// `R_a` for AM2.
    pub attack_ratio: Option<f64>,
    /// `Σ h2(p_i) - Σ h2(θ_i)` in bits.
    pub achieved_payload: f64,
    /// `Σ p_i ρ_i` over finite costs.
    pub achieved_distortion: f64,
}

impl EmbeddingSolution {
    fn build(
        profile: &DistortionProfile,
        lambda: f64,
        theta: Vec<f64>,
        attack_model: AttackModel,
        attack_ratio: Option<f64>,
    ) -> Self {
        let p: Vec<f64> = profile.rho.iter().map(|&r| gibbs(lambda, r)).collect();
        let achieved_payload = math::compensated_sum(p.iter().map(|&x| h2_unchecked(x)))
            - math::compensated_sum(theta.iter().map(|&t| h2_unchecked(t)));
        let achieved_distortion = math::compensated_sum(
            p.iter()
                .zip(&profile.rho)
                .filter(|(_, r)| r.is_finite())
                .map(|(&x, &r)| x * r),
        );
        Self {
            lambda,
            p,
            theta,
            attack_model,
            attack_ratio,
            achieved_payload,
            achieved_distortion,
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Per-position average distortion `E(D)/N`.
    pub fn per_bit_distortion(&self) -> f64 {
        self.achieved_distortion / self.p.len() as f64
    }

    pub fn embed_bank(&self) -> Result<ChannelBank> {
        ChannelBank::new(self.p.clone(), ChannelRole::Embedding)
    }

    pub fn attack_bank(&self) -> Result<ChannelBank> {
        ChannelBank::new(self.theta.clone(), ChannelRole::Attack)
    }
}

/// Largest `λ` tried before giving up on bracketing.
pub const LAMBDA_CAP: f64 = 1e6;
/// Payload constraint tolerance in bits.
pub const PAYLOAD_TOLERANCE: f64 = 1e-6;
/// Relative tolerance on the distortion constraint.
pub const DISTORTION_TOLERANCE: f64 = 1e-9;

/// Finds `λ ≥ 0` with `f(λ) = target` for decreasing `f`, starting from the
/// bracket `[0, 1]` and doubling the upper end.
fn bisect_lambda<F: Fn(f64) -> f64>(f: F, target: f64, tol: f64) -> Result<f64> {
    if f(0.0) - target <= tol {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    while f(hi) > target {
        if hi >= LAMBDA_CAP {
            return Err(Error::NoBracket("lambda exceeded its cap"));
        }
        hi = (2.0 * hi).min(LAMBDA_CAP);
    }
    let mut lo = 0.0f64;
    let mut best = (f(hi) - target).abs();
    let mut best_lambda = hi;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        let err = (v - target).abs();
        if err < best {
            best = err;
            best_lambda = mid;
        }
        if err <= tol {
            break;
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best_lambda)
}

/// Minimises `Σ p_i ρ_i` subject to `Σ h2(p_i) = q`.
pub fn solve_pls(profile: &DistortionProfile, q: f64) -> Result<EmbeddingSolution> {
    let lambda = pls_lambda(profile, q)?;
    Ok(EmbeddingSolution::build(
        profile,
        lambda,
        alloc::vec![0.0; profile.len()],
        AttackModel::None,
        None,
    ))
}

fn pls_lambda(profile: &DistortionProfile, q: f64) -> Result<f64> {
    let max = profile.finite_count() as f64;
    let min = profile.rho.iter().filter(|&&r| r == 0.0).count() as f64;
    if q.is_nan() || q < min || q > max {
        return Err(Error::Infeasible {
            target: q,
            lo: min,
            hi: max,
        });
    }
    if q <= min {
        return Ok(f64::INFINITY);
    }
    // keep the solver's own residual an order below the contract
    bisect_lambda(|l| payload_at(&profile.rho, l), q, 0.1 * PAYLOAD_TOLERANCE)
}

/// Maximises `Σ h2(p_i)` subject to `Σ p_i ρ_i = D_ε`.
pub fn solve_dls(profile: &DistortionProfile, d_eps: f64) -> Result<EmbeddingSolution> {
    let max = 0.5 * math::compensated_sum(profile.rho.iter().copied().filter(|r| r.is_finite()));
    if d_eps.is_nan() || d_eps < 0.0 || d_eps > max * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            target: d_eps,
            lo: 0.0,
            hi: max,
        });
    }
    let lambda = if d_eps == 0.0 {
        f64::INFINITY
    } else {
        bisect_lambda(
            |l| distortion_at(&profile.rho, l),
            d_eps,
            0.1 * DISTORTION_TOLERANCE * d_eps,
        )?
    };
    Ok(EmbeddingSolution::build(
        profile,
        lambda,
        alloc::vec![0.0; profile.len()],
        AttackModel::None,
        None,
    ))
}

fn check_robust(profile: &DistortionProfile, theta: f64) -> Result<()> {
    if profile.has_wet() {
        return Err(Error::InvalidParameter("robust embedding needs finite costs"));
    }
    crate::channel::check_crossover(theta)
}

/// PLS with the payload target raised to `q + N·h2(θ)` and `θ_i = θ`.
/// Nothing forces `p_i ≥ θ` here.
pub fn solve_robust_pls_am1(
    profile: &DistortionProfile,
    q: f64,
    theta: f64,
) -> Result<EmbeddingSolution> {
    check_robust(profile, theta)?;
    let n = profile.len() as f64;
    let lambda = pls_lambda(profile, q + n * h2_unchecked(theta))?;
    Ok(EmbeddingSolution::build(
        profile,
        lambda,
        alloc::vec![theta; profile.len()],
        AttackModel::Am1,
        None,
    ))
}

/// Two-phase AM2 solution: `p` from the AM1 problem, then `R_a ∈ [0, 1]`
/// with `Σ h2(R_a·p_i) = N·h2(θ)` and `θ_i = R_a·p_i`.
pub fn solve_am2(profile: &DistortionProfile, q: f64, theta: f64) -> Result<EmbeddingSolution> {
    let phase1 = solve_robust_pls_am1(profile, q, theta)?;
    let ratio = am2_ratio(&phase1.p, theta)?;
    let thetas = phase1.p.iter().map(|&p| ratio * p).collect();
    Ok(EmbeddingSolution::build(
        profile,
        phase1.lambda,
        thetas,
        AttackModel::Am2,
        Some(ratio),
    ))
}

/// Tolerance on `R_a`.
pub const RATIO_TOLERANCE: f64 = 1e-9;

fn am2_ratio(p: &[f64], theta: f64) -> Result<f64> {
    let target = p.len() as f64 * h2_unchecked(theta);
    let g = |r: f64| math::compensated_sum(p.iter().map(|&x| h2_unchecked(r * x)));
    if target == 0.0 {
        return Ok(0.0);
    }
    if g(1.0) < target {
        return Err(Error::NoBracket("no attack ratio in [0, 1] matches the preset noise"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-3 * RATIO_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-bit design distortion `E_b = Σ p_i ρ_i / N` of an analytic profile at
/// rate `R` and preset noise `θ`. AM1 and AM2 share the same `p`.
pub fn theoretical_bound(
    kind: ProfileKind,
    len: usize,
    rate: f64,
    theta: f64,
    model: AttackModel,
) -> Result<f64> {
    let profile = DistortionProfile::analytic(kind, len)?;
    let q = rate * len as f64;
    let sol = match model {
        AttackModel::None => solve_pls(&profile, q)?,
        AttackModel::Am1 | AttackModel::Am2 => solve_robust_pls_am1(&profile, q, theta)?,
    };
    Ok(sol.per_bit_distortion())
}
