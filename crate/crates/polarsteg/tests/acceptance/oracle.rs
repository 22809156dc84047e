//! Reference computations written independently of the library.

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / std::f64::consts::LN_2
    }
}

/// Inverse of `h2` on `[0, 1/2]` by plain bisection.
pub fn h2_inv(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn gibbs(lambda: f64, rho: f64) -> f64 {
    if rho.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + (lambda * rho).exp())
    }
}

fn reverse(i: usize, bits: u32) -> usize {
    (0..bits).fold(0, |acc, b| acc | (((i >> b) & 1) << (bits - 1 - b)))
}

/// `x = u·B·F^{⊗n}`: `x_j` is the XOR of `u` at the bit reversal of every
/// row index whose binary digits cover those of `j`.
pub fn polar_transform(u: &[u8]) -> Vec<u8> {
    let len = u.len();
    let bits = len.trailing_zeros();
    (0..len)
        .map(|j| {
            (0..len)
                .filter(|&k| k & j == j)
                .fold(0u8, |acc, k| acc ^ u[reverse(k, bits)])
        })
        .collect()
}

/// `-ln W(y|x)` up to a constant shared by every `x`.
pub fn neg_log_likelihood(y: &[u8], p: &[f64], x: &[u8]) -> f64 {
    y.iter()
        .zip(x)
        .zip(p)
        .filter(|((a, b), _)| a != b)
        .map(|(_, &q)| ((1.0 - q) / q).ln())
        .sum()
}

fn fill(frozen: &[Option<u8>], free: &[usize], pattern: usize) -> Vec<u8> {
    let mut u: Vec<u8> = frozen.iter().map(|f| f.unwrap_or(0)).collect();
    for (b, &i) in free.iter().enumerate() {
        u[i] = ((pattern >> b) & 1) as u8;
    }
    u
}

pub struct MlResult {
    pub u: Vec<u8>,
    pub metric: f64,
    /// Another input reaches the same metric within 1e-9.
    pub tied: bool,
}

/// Exhaustive minimum-metric input with the given positions fixed.
pub fn ml_search(y: &[u8], p: &[f64], frozen: &[Option<u8>]) -> MlResult {
    let free: Vec<usize> = (0..frozen.len()).filter(|&i| frozen[i].is_none()).collect();
    let mut scored: Vec<(f64, Vec<u8>)> = (0..1usize << free.len())
        .map(|pat| {
            let u = fill(frozen, &free, pat);
            (neg_log_likelihood(y, p, &polar_transform(&u)), u)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tied = scored.len() > 1 && scored[1].0 - scored[0].0 <= 1e-9;
    let (metric, u) = scored.swap_remove(0);
    MlResult { u, metric, tied }
}

/// `P(u_i = 1 | y, u_0..u_{i-1})` with every later input uniform.
pub fn sc_posterior_one(y: &[u8], p: &[f64], prefix: &[u8]) -> f64 {
    let len = y.len();
    let i = prefix.len();
    let later = len - i - 1;
    let mut mass = [0.0f64; 2];
    for v in 0..2u8 {
        for pat in 0..1usize << later {
            let mut u = prefix.to_vec();
            u.push(v);
            u.extend((0..later).map(|b| ((pat >> b) & 1) as u8));
            mass[v as usize] += (-neg_log_likelihood(y, p, &polar_transform(&u))).exp();
        }
    }
    mass[1] / (mass[0] + mass[1])
}
