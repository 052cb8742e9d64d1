use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_linear, FitResult};
use crate::geometry::{interior_points, shells, weighted_distance};
use crate::lattice::{LatticeWindow, Site};
use crate::pinning::PinConfiguration;

use super::bounds::{choose_k, choose_m, AnalyticK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    pub p: f64,
    pub dim: usize,
    pub n_max: usize,
    pub reps: usize,
    /// The window is the cube `[-half_width, half_width]^d`.
    pub half_width: i64,
    pub step: f64,
    pub seed: u64,
    /// Smallest `n` entering the linear fit of the median radius.
    pub fit_from: usize,
    /// The calibrated `K̂` is the smallest `K` whose exceedance frequency at
    /// `calibration_n` is at most `calibration_level`.
    pub calibration_n: usize,
    pub calibration_level: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            p: 0.7,
            dim: 2,
            n_max: 8,
            reps: 32,
            half_width: 1000,
            step: 0.5,
            seed: 0,
            fit_from: 2,
            calibration_n: 2,
            calibration_level: 0.25,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("p must lie in (0,1), got {}", self.p)));
        }
        if self.dim == 0 || self.reps == 0 || self.n_max < self.calibration_n.max(1) || self.half_width < 1 {
            return Err(Error::Config("growth experiment needs dim, reps, half_width ≥ 1 and n_max ≥ calibration_n".into()));
        }
        if !(self.step > 0.0) || !(0.0..1.0).contains(&self.calibration_level) {
            return Err(Error::Config("step must be positive and calibration_level in [0,1)".into()));
        }
        let sites = (2 * self.half_width as u128 + 1).checked_pow(self.dim as u32).unwrap_or(u128::MAX);
        if sites > 1 << 24 {
            return Err(Error::SizeLimit {
                what: "growth window",
                size: usize::try_from(sites).unwrap_or(usize::MAX),
                limit: 1 << 24,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub reps: usize,
    /// Replicas whose `C_n` reaches the window boundary; their radius is a
    /// lower bound.
    pub truncated: usize,
    pub radius_p50: u64,
    pub radius_p90: u64,
    pub exceed_freq_analytic_k: f64,
    pub exceed_freq_calib_k: f64,
}

pub const GROWTH_CSV_HEADER: &str = "n,reps,truncated,radius_p50,radius_p90,exceed_freq_paperK,exceed_freq_calibK";

#[derive(Clone, Debug, Serialize)]
pub struct GrowthStats {
    pub rows: Vec<GrowthRow>,
    pub block_side: u64,
    pub analytic_k: AnalyticK,
    pub calibrated_k: u64,
    /// Smallest `K` with no exceedance at `calibration_n`.
    pub zero_exceedance_k: u64,
    /// Median radius against `n` from `fit_from` on.
    pub fit: Option<FitResult>,
    /// Per replica and `n`, `sup_{x ∈ C_n} d(0,x)`.
    pub radii: Vec<Vec<u64>>,
}

impl GrowthStats {
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    r.n, r.reps, r.truncated, r.radius_p50, r.radius_p90, r.exceed_freq_analytic_k, r.exceed_freq_calib_k
                )
            })
            .collect()
    }

    pub fn row(&self, n: usize) -> Option<&GrowthRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> u64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Radii of `C_0..C_{n_max}` and the first truncated level in one replica.
pub fn replica_radii(cfg: &GrowthConfig, rep: usize) -> Result<(Vec<u64>, Option<usize>)> {
    let window = LatticeWindow::cube(cfg.dim, cfg.half_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let a = PinConfiguration::bernoulli(window, cfg.p, &mut rng);
    let interior = interior_points(&a, true);
    let d = weighted_distance(&Site::origin(cfg.dim), &interior.weights())?;
    let s = shells(&d, cfg.step, cfg.n_max)?;
    let first_truncated = (0..=cfg.n_max).find(|&n| s.is_truncated(n));
    Ok((s.radii(), first_truncated))
}

/// Growth of `sup_{x ∈ C_n} d(0,x)` over independent Bernoulli environments,
/// with exceedance frequencies of `{sup > Kn}` at the analytic `K` and at a
/// calibrated one.
pub fn growth_experiment(cfg: &GrowthConfig) -> Result<GrowthStats> {
    cfg.validate()?;
    let block_side = choose_m(cfg.p, cfg.dim)?;
    let analytic_k = choose_k(block_side, cfg.dim)?;
    let per: Vec<(Vec<u64>, Option<usize>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| replica_radii(cfg, r))
        .collect::<Result<_>>()?;
    let radii: Vec<Vec<u64>> = per.iter().map(|(r, _)| r.clone()).collect();
    let cn = cfg.calibration_n as u64;
    let mut at_cal: Vec<u64> = radii.iter().map(|r| r[cfg.calibration_n]).collect();
    at_cal.sort_unstable();
    let exceed_at = |k: u64| at_cal.iter().filter(|&&r| r > k * cn).count() as f64 / cfg.reps as f64;
    let zero_exceedance_k = at_cal.last().map_or(0, |&m| m.div_ceil(cn));
    let mut calibrated_k = zero_exceedance_k;
    while calibrated_k > 0 && exceed_at(calibrated_k - 1) <= cfg.calibration_level {
        calibrated_k -= 1;
    }
    let rows: Vec<GrowthRow> = (1..=cfg.n_max)
        .map(|n| {
            let mut r: Vec<u64> = radii.iter().map(|v| v[n]).collect();
            r.sort_unstable();
            let exceed = |k: u64| {
                let kn = k.saturating_mul(n as u64);
                r.iter().filter(|&&v| v > kn).count() as f64 / cfg.reps as f64
            };
            GrowthRow {
                n,
                reps: cfg.reps,
                truncated: per.iter().filter(|(_, t)| t.is_some_and(|t| t <= n)).count(),
                radius_p50: quantile(&r, 0.5),
                radius_p90: quantile(&r, 0.9),
                exceed_freq_analytic_k: exceed(analytic_k.value),
                exceed_freq_calib_k: exceed(calibrated_k),
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.n >= cfg.fit_from && r.truncated == 0)
        .map(|r| (r.n as f64, r.radius_p50 as f64))
        .unzip();
    let fit = fit_linear(&xs, &ys).ok();
    Ok(GrowthStats {
        rows,
        block_side,
        analytic_k,
        calibrated_k,
        zero_exceedance_k,
        fit,
        radii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: f64) -> GrowthConfig {
        GrowthConfig {
            p,
            n_max: 4,
            reps: 8,
            half_width: 60,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn radii_are_monotone_and_coupled_in_p() {
        let lo = small(0.7);
        let hi = small(0.85);
        for rep in 0..lo.reps {
            let (a, _) = replica_radii(&lo, rep).unwrap();
            let (b, _) = replica_radii(&hi, rep).unwrap();
            assert!(a.windows(2).all(|w| w[0] <= w[1]));
            for n in 0..=lo.n_max {
                assert!(b[n] <= a[n], "rep {rep} n {n}");
            }
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let cfg = small(0.8);
        let a = growth_experiment(&cfg).unwrap();
        let b = growth_experiment(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(a.rows.iter().all(|r| r.exceed_freq_analytic_k == 0.0));
        assert!(a.rows.windows(2).all(|w| w[0].radius_p50 <= w[1].radius_p50));
        assert!(a.calibrated_k <= a.zero_exceedance_k);
    }

    #[test]
    fn quantiles() {
        let v = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(quantile(&v, 0.5), 5);
        assert_eq!(quantile(&v, 0.9), 9);
        assert_eq!(quantile(&[4], 0.9), 4);
    }
}
