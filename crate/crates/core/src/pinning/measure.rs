use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bilaplacian_stencil, LatticeWindow, Site};
use crate::linalg::cholesky_log_det;
use crate::solver::{g_ref_entry, green_column, green_dense, Backend, FreeRegion, GreenFactor};

use super::config::PinConfiguration;

/// Largest window enumerated exactly.
pub const EXACT_LIMIT: usize = 16;

/// Slack allowed when comparing conditionals with the brackets.
pub const DOMINATION_TOL: f64 = 1e-12;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// `G^E_W(x, x)` where `region = W \ E` and `x` is free.
pub fn conditional_variance(region: &FreeRegion, x: &Site, backend: Backend) -> Result<f64> {
    region.require_free(x)?;
    match backend {
        Backend::Dense => Ok(green_dense(region, crate::solver::DEFAULT_DENSE_LIMIT)?.get(x, x)),
        Backend::Banded => Ok(GreenFactor::new(region)?.variance(x)),
        Backend::Iterative { .. } => Ok(green_column(region, x, backend)?.get(x)),
    }
}

/// `Z^{E ∪ {w}} / Z^E = 1 / sqrt(2π G^E_W(w, w))`, the density of `φ_w` at 0.
pub fn partition_ratio(region: &FreeRegion, w: &Site, backend: Backend) -> Result<f64> {
    Ok(1.0 / (2.0 * PI * conditional_variance(region, w, backend)?).sqrt())
}

/// `ζ(x ∈ A | A \ {x} = E)` from the conditional variance.
pub fn pin_prob_from_variance(eps: f64, variance: f64) -> f64 {
    eps / (eps + (2.0 * PI * variance).sqrt())
}

/// `ζ(x ∈ A | A \ {x} = E) = ε / (ε + sqrt(2π G^E_W(x, x)))`.
pub fn conditional_pin_prob(region: &FreeRegion, x: &Site, eps: f64, backend: Backend) -> Result<f64> {
    check_eps(eps)?;
    Ok(pin_prob_from_variance(eps, conditional_variance(region, x, backend)?))
}

/// `C₊ = 1 / sqrt(2π · 2d/(2d+1))`, from the single-site variance.
pub fn c_plus(dim: usize) -> f64 {
    let d = dim as f64;
    1.0 / (2.0 * PI * 2.0 * d / (2.0 * d + 1.0)).sqrt()
}

/// `C₋ = 1 / sqrt(2π G(0,0))` with the cached `G(0, 0)` of `Z^d`.
pub fn c_minus(dim: usize) -> Result<f64> {
    Ok(1.0 / (2.0 * PI * g_ref_entry(dim)?.value).sqrt())
}

/// `ρ = Cε / (1 + Cε)`.
pub fn rho(c: f64, eps: f64) -> f64 {
    c * eps / (1.0 + c * eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBounds {
    pub c_minus: f64,
    pub c_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
}

pub fn rho_bounds(dim: usize, eps: f64) -> Result<RhoBounds> {
    check_eps(eps)?;
    if dim < 5 {
        return Err(Error::MissingReference(format!(
            "the lower bracket needs a finite G(0,0); d = {dim} < 5"
        )));
    }
    let cm = c_minus(dim)?;
    let cp = c_plus(dim);
    Ok(RhoBounds {
        c_minus: cm,
        c_plus: cp,
        rho_minus: rho(cm, eps),
        rho_plus: rho(cp, eps),
    })
}

/// Lower bracket with the reference uncertainty folded in, so that it is a
/// guaranteed lower bound for every finite window.
pub fn safe_rho_minus(dim: usize, eps: f64) -> Result<f64> {
    let g = g_ref_entry(dim)?;
    Ok(pin_prob_from_variance(eps, g.value + g.tail_bound))
}

/// A probability table over all subsets of a small window; subset `mask`
/// pins window site `i` iff bit `i` is set.
#[derive(Clone, Debug)]
pub struct ExactPinMeasure {
    window: LatticeWindow,
    eps: Option<f64>,
    probs: Vec<f64>,
    log_partition: Vec<f64>,
}

/// `ζ_W^ε(A) ∝ ε^{|A|} Z_{W \ A}` with
/// `Z_F = (2π)^{|F|/2} det(Δ²_F)^{-1/2}` and `Z_∅ = 1`.
pub fn zeta_exact(window: &LatticeWindow, eps: f64) -> Result<ExactPinMeasure> {
    check_eps(eps)?;
    let n = window.len();
    if n > EXACT_LIMIT {
        return Err(Error::SizeLimit {
            what: "exact enumeration window",
            size: n,
            limit: EXACT_LIMIT,
        });
    }
    // Δ² on the whole window, then principal minors.
    let stencil = bilaplacian_stencil(window.dim());
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for s in &stencil {
            if let Some(j) = window.offset_index(i, &s.offset) {
                q[i * n + j] = s.coefficient;
            }
        }
    }
    let ln_2pi = (2.0 * PI).ln();
    let count = 1usize << n;
    let mut log_partition = Vec::with_capacity(count);
    let mut log_w = Vec::with_capacity(count);
    let mut sub = Vec::with_capacity(n * n);
    for mask in 0..count {
        let free: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        let k = free.len();
        sub.clear();
        for &a in &free {
            for &b in &free {
                sub.push(q[a * n + b]);
            }
        }
        let log_det = cholesky_log_det(&mut sub, k).ok_or(Error::NotPositiveDefinite {
            pivot: mask,
            value: f64::NAN,
        })?;
        let lz = 0.5 * k as f64 * ln_2pi - 0.5 * log_det;
        log_partition.push(lz);
        log_w.push((n - k) as f64 * eps.ln() + lz);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    let probs = log_w.iter().map(|l| (l - max).exp() / total).collect();
    Ok(ExactPinMeasure {
        window: window.clone(),
        eps: Some(eps),
        probs,
        log_partition,
    })
}

impl ExactPinMeasure {
    /// The product measure with inclusion probability `p`.
    pub fn bernoulli(window: &LatticeWindow, p: f64) -> Result<Self> {
        let n = window.len();
        if n > EXACT_LIMIT {
            return Err(Error::SizeLimit {
                what: "exact enumeration window",
                size: n,
                limit: EXACT_LIMIT,
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} is not a probability")));
        }
        let probs = (0..1usize << n)
            .map(|m| {
                let k = m.count_ones() as i32;
                p.powi(k) * (1.0 - p).powi(n as i32 - k)
            })
            .collect();
        Ok(ExactPinMeasure {
            window: window.clone(),
            eps: None,
            probs,
            log_partition: Vec::new(),
        })
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_mask(&self, mask: usize) -> f64 {
        self.probs[mask]
    }

    pub fn probability(&self, a: &PinConfiguration) -> f64 {
        self.probs[mask_of(a)]
    }

    /// `ln Z_{W \ A}` (only for measures built by [`zeta_exact`]).
    pub fn log_partition(&self, mask: usize) -> Option<f64> {
        self.log_partition.get(mask).copied()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `ζ(i ∈ A)`.
    pub fn marginal(&self, i: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(m, _)| m >> i & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// `ζ(i ∈ A | A \ {i} = E)`, with `E` given by `rest` (bit `i` ignored).
    pub fn conditional(&self, i: usize, rest: usize) -> f64 {
        let off = rest & !(1 << i);
        let on = off | 1 << i;
        let (a, b) = (self.probs[on], self.probs[off]);
        a / (a + b)
    }

    /// `Σ_A ζ(A) f(A)`.
    pub fn expectation(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(m, p)| p * f(m)).sum()
    }

    pub fn sample_mask<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (m, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return m;
            }
        }
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PinConfiguration {
        PinConfiguration::from_bits_u64(self.window.clone(), self.sample_mask(rng) as u64)
            .expect("exact windows fit in 64 bits")
    }

    /// Total-variation distance to an empirical histogram over masks.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        0.5 * self
            .probs
            .iter()
            .zip(counts)
            .map(|(p, c)| (p - *c as f64 / n as f64).abs())
            .sum::<f64>()
    }
}

pub(crate) fn mask_of(a: &PinConfiguration) -> usize {
    a.mask()
        .iter()
        .enumerate()
        .fold(0, |m, (i, &on)| if on { m | 1 << i } else { m })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The measure dominates Bernoulli(ρ): every conditional is at least ρ.
    Lower,
    /// Bernoulli(ρ) dominates the measure: every conditional is at most ρ.
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationViolation {
    pub site: usize,
    pub rest_mask: usize,
    pub conditional: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub rho: f64,
    pub side: Side,
    pub examined: usize,
    pub min_conditional: f64,
    pub max_conditional: f64,
    /// Smallest signed margin: `cond - ρ` (lower) or `ρ - cond` (upper).
    pub min_slack: f64,
    pub violations: Vec<DominationViolation>,
}

impl DominationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every conditional `μ(x ∈ A | A \ {x} = E)` against `ρ`.
pub fn check_strong_domination(measure: &ExactPinMeasure, rho: f64, side: Side) -> DominationReport {
    let n = measure.window().len();
    let mut report = DominationReport {
        rho,
        side,
        examined: 0,
        min_conditional: f64::INFINITY,
        max_conditional: f64::NEG_INFINITY,
        min_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for x in 0..n {
        for rest in 0..1usize << n {
            if rest >> x & 1 == 1 {
                continue;
            }
            let c = measure.conditional(x, rest);
            report.examined += 1;
            report.min_conditional = report.min_conditional.min(c);
            report.max_conditional = report.max_conditional.max(c);
            let slack = match side {
                Side::Lower => c - rho,
                Side::Upper => rho - c,
            };
            report.min_slack = report.min_slack.min(slack);
            if slack < -DOMINATION_TOL {
                report.violations.push(DominationViolation {
                    site: x,
                    rest_mask: rest,
                    conditional: c,
                });
            }
        }
    }
    report
}

/// I.i.d. inclusion with probability `p`, one uniform per site in index order.
pub fn bernoulli_sample_with<R: Rng + ?Sized>(window: &LatticeWindow, p: f64, rng: &mut R) -> PinConfiguration {
    PinConfiguration::bernoulli(window.clone(), p, rng)
}

pub fn bernoulli_sample(window: &LatticeWindow, p: f64, seed: u64) -> Result<PinConfiguration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} is not a probability")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(bernoulli_sample_with(window, p, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(len: i64) -> LatticeWindow {
        LatticeWindow::from_extents(&[(0, len - 1), (0, 0), (0, 0), (0, 0), (0, 0)]).unwrap()
    }

    const SINGLE: f64 = 0.294_985;

    #[test]
    fn single_site_values() {
        let w = segment(1);
        let o = Site::origin(5);
        let r = FreeRegion::all_free(w.clone());
        let ratio = partition_ratio(&r, &o, Backend::Banded).unwrap();
        assert!((ratio - 0.418_410).abs() < 1e-5);
        let p = conditional_pin_prob(&r, &o, 1.0, Backend::Dense).unwrap();
        let oracle = 1.0 / (1.0 + (20.0 * PI / 11.0).sqrt());
        assert!((p - oracle).abs() < 1e-15);
        assert!((p - SINGLE).abs() < 1e-5);
        let z = zeta_exact(&w, 1.0).unwrap();
        assert!((z.prob_mask(1) - oracle).abs() < 1e-12);
        assert!((z.prob_mask(0) - 0.705_015).abs() < 1e-5);
    }

    #[test]
    fn two_site_ratio() {
        let r = FreeRegion::all_free(segment(2));
        let ratio = partition_ratio(&r, &Site::origin(5), Backend::iterative()).unwrap();
        let oracle = 1.0 / (2.0 * PI * 1.1 / 1.17).sqrt();
        assert!((ratio - oracle).abs() < 1e-10);
        assert!((ratio - 0.411_444).abs() < 1e-5);
    }

    #[test]
    fn bracket_arithmetic() {
        assert!((rho(0.4, 1.0) - 0.4 / 1.4).abs() < 1e-15);
        let b = rho_bounds(5, 1.0).unwrap();
        assert!((b.c_plus - 0.418_410).abs() < 1e-5);
        assert!((b.rho_plus - SINGLE).abs() < 1e-5);
        assert!(b.rho_minus < b.rho_plus);
        assert!(safe_rho_minus(5, 1.0).unwrap() <= b.rho_minus);
        assert!(rho_bounds(4, 1.0).is_err());
        assert!(rho_bounds(5, 0.0).is_err());
    }

    #[test]
    fn tiny_eps_limit() {
        let r = FreeRegion::all_free(segment(1));
        let g: f64 = 10.0 / 11.0;
        let eps = 1e-6 * (2.0 * PI * g).sqrt();
        assert!(conditional_pin_prob(&r, &Site::origin(5), eps, Backend::Banded).unwrap() < 1e-6);
    }

    #[test]
    fn enumeration_matches_conditional_formula() {
        let w = segment(4);
        let z = zeta_exact(&w, 0.7).unwrap();
        assert!((z.total() - 1.0).abs() < 1e-12);
        for x in 0..4 {
            for rest in 0..16usize {
                if rest >> x & 1 == 1 {
                    continue;
                }
                let region = FreeRegion::from_mask(w.clone(), (0..4).map(|i| rest >> i & 1 == 1).collect()).unwrap();
                let p = conditional_pin_prob(&region, &w.site(x), 0.7, Backend::Dense).unwrap();
                assert!((p - z.conditional(x, rest)).abs() < 1e-9);
            }
        }
        assert!(zeta_exact(&segment(17), 1.0).is_err());
    }

    #[test]
    fn bernoulli_dominates_itself() {
        let w = segment(3);
        let b = ExactPinMeasure::bernoulli(&w, 0.3).unwrap();
        for side in [Side::Lower, Side::Upper] {
            let r = check_strong_domination(&b, 0.3, side);
            assert!(r.pass());
            assert!(r.min_slack.abs() < 1e-15);
        }
    }

    #[test]
    fn bernoulli_extremes_and_concentration() {
        let w = LatticeWindow::from_extents(&[(0, 99), (0, 99)]).unwrap();
        assert_eq!(bernoulli_sample(&w, 0.0, 1).unwrap().count(), 0);
        assert_eq!(bernoulli_sample(&w, 1.0, 1).unwrap().count(), 10_000);
        let k = bernoulli_sample(&w, 0.3, 2).unwrap().count() as f64;
        assert!((k - 3000.0).abs() <= 4.0 * (10_000.0f64 * 0.3 * 0.7).sqrt());
    }
}
