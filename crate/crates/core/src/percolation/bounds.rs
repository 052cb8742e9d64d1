use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} is outside [0, 1]")))
    }
}

/// `(1−p^{2d+1})^{⌊(2m+1)/3⌋^d}`, an upper bound on `P(B_m ∩ Â = ∅)` for the
/// cube `B_m` of side `2m+1`.
pub fn box_empty_prob_bound(m: u64, p: f64, d: usize) -> Result<f64> {
    check_p(p)?;
    Ok(disjoint_boxes_bound((2 * m + 1) / 3, p, d))
}

/// The same bound for an inner block box of side `M−2`.
pub fn inner_box_empty_bound(block: u64, p: f64, d: usize) -> Result<f64> {
    check_p(p)?;
    Ok(disjoint_boxes_bound(block.saturating_sub(2) / 3, p, d))
}

fn disjoint_boxes_bound(per_axis: u64, p: f64, d: usize) -> f64 {
    let boxes = (per_axis as f64).powi(d as i32);
    let base = 1.0 - p.powi(2 * d as i32 + 1);
    if base <= 0.0 {
        return if boxes > 0.0 { 0.0 } else { 1.0 };
    }
    if boxes <= f64::from(i32::MAX) {
        base.powi(boxes as i32)
    } else {
        (boxes * base.ln()).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
}

const MC_BLOCK: u64 = 1024;

/// Monte Carlo estimate of `P(B_m ∩ Â = ∅)` under Bernoulli(`p`) pins,
/// sampled on `B_m` padded by one layer.
pub fn box_empty_mc(m: u64, p: f64, d: usize, reps: u64, seed: u64) -> Result<McEstimate> {
    check_p(p)?;
    if reps == 0 || d == 0 {
        return Err(Error::InvalidArgument("need at least one replica and dimension".into()));
    }
    let side = 2 * m as usize + 3;
    let len = side.checked_pow(d as u32).filter(|&l| l <= 1 << 24).ok_or(Error::SizeLimit {
        what: "padded box",
        size: usize::MAX,
        limit: 1 << 24,
    })?;
    let strides: Vec<usize> = (0..d).map(|a| side.pow(a as u32)).collect();
    // Box sites are those with every coordinate in 1..side-1.
    let inner: Vec<usize> = (0..len)
        .filter(|&i| (0..d).all(|a| (1..side - 1).contains(&(i / strides[a] % side))))
        .collect();
    let blocks = reps.div_ceil(MC_BLOCK);
    let empty: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = MC_BLOCK.min(reps - b * MC_BLOCK);
            let mut bits = vec![false; len];
            let mut hits = 0u64;
            for _ in 0..n {
                for v in bits.iter_mut() {
                    *v = rng.random::<f64>() < p;
                }
                let any = inner.iter().any(|&i| {
                    bits[i] && strides.iter().all(|&s| bits[i - s] && bits[i + s])
                });
                if !any {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let mean = empty as f64 / reps as f64;
    Ok(McEstimate {
        mean,
        stderr: (mean * (1.0 - mean) / reps as f64).sqrt(),
        reps,
    })
}

/// `1/(64 d²)`, the target for `P(η(i) = 0)`.
pub fn target_empty_prob(d: usize) -> f64 {
    1.0 / (64.0 * (d * d) as f64)
}

/// Smallest `M ≥ 3` with `(1−p^{2d+1})^{⌊(M−2)/3⌋^d} ≤ 1/(64d²)`.
pub fn choose_m(p: f64, d: usize) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) || d == 0 {
        return Err(Error::InvalidArgument(format!("choose_m needs p in (0,1) and d ≥ 1, got p = {p}, d = {d}")));
    }
    let target = target_empty_prob(d);
    let mut m = 3u64;
    while disjoint_boxes_bound((m - 2) / 3, p, d) > target {
        m += 1;
        if m > 1 << 40 {
            return Err(Error::NoConvergence {
                iterations: m as usize,
                residual: p,
            });
        }
    }
    Ok(m)
}

/// `K = ⌈20M(2+2M^{2d+3})⌉`, exactly, with a saturating machine value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalyticK {
    pub exact: String,
    pub value: u64,
    pub saturated: bool,
}

pub fn choose_k(m: u64, d: usize) -> Result<AnalyticK> {
    if m == 0 {
        return Err(Error::InvalidArgument("block side must be positive".into()));
    }
    let mb = BigUint::from(m);
    let k = BigUint::from(20u32) * &mb * (BigUint::from(2u32) + BigUint::from(2u32) * mb.pow(2 * d as u32 + 3));
    let (value, saturated) = match u64::try_from(&k) {
        Ok(v) => (v, false),
        Err(_) => (u64::MAX, true),
    };
    Ok(AnalyticK {
        exact: k.to_string(),
        value,
        saturated,
    })
}

/// `I(p₁|p₂) = p₁ log(p₁/p₂) + (1−p₁) log((1−p₁)/(1−p₂))`.
pub fn bernoulli_relative_entropy(p1: f64, p2: f64) -> Result<f64> {
    for p in [p1, p2] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("relative entropy needs arguments in (0,1), got {p}")));
        }
    }
    Ok(p1 * (p1 / p2).ln() + (1.0 - p1) * ((1.0 - p1) / (1.0 - p2)).ln())
}

/// `(4τ(1−τ))^{r/2}`, the closed form of `exp[−r I(1/2 | 1−τ)]`.
pub fn entropy_tail_bound(tau: f64, r: f64) -> f64 {
    (4.0 * tau * (1.0 - tau)).powf(r / 2.0)
}
