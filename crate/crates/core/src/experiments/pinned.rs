use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, fit_powerlaw, FitResult};
use crate::geometry::xn_bound_check;
use crate::lattice::{LatticeWindow, Site};
use crate::pinning::{endpoint_conditioned, mean_and_stderr, ChainBackend, GibbsChain, GibbsOptions, PinConfiguration};
use crate::solver::{FreeRegion, GreenFactor};

use super::{num, Check, ExperimentOutput, Table};

/// How one pinned set is turned into covariance samples along the axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovEstimator {
    /// `G^A(0, z)`.
    Plain,
    /// `G^A(0, z)` with the pin states of `0` and `z` summed out.
    #[default]
    Conditioned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinnedDecayConfig {
    pub dim: usize,
    /// Sites along the long axis; the origin sits at one end.
    pub length: i64,
    /// Cross-section half-width in every other axis.
    pub cross_half_width: i64,
    pub eps: f64,
    pub samples: usize,
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
    pub options: GibbsOptions,
    pub estimator: CovEstimator,
    pub batches: usize,
    /// Points count only when `|mean| > floor_sigmas · stderr`.
    pub floor_sigmas: f64,
    /// Smallest distance entering the fits.
    pub fit_from: i64,
    pub min_rate_sigmas: f64,
    pub contrast_distance: i64,
    pub contrast_factor: f64,
    /// Annulus width of the `X_n` diagnostic.
    pub xn_width: u64,
    pub record_pins: bool,
}

impl Default for PinnedDecayConfig {
    fn default() -> Self {
        PinnedDecayConfig {
            dim: 5,
            length: 41,
            cross_half_width: 1,
            eps: 1.0,
            samples: 200,
            burnin: 50,
            thin: 3,
            seed: 0,
            options: GibbsOptions {
                backend: ChainBackend::Banded,
                ..Default::default()
            },
            estimator: CovEstimator::Conditioned,
            batches: 20,
            floor_sigmas: 4.0,
            fit_from: 1,
            min_rate_sigmas: 3.0,
            contrast_distance: 20,
            contrast_factor: 5.0,
            xn_width: 4,
            record_pins: true,
        }
    }
}

impl PinnedDecayConfig {
    pub fn window(&self) -> Result<LatticeWindow> {
        if self.dim < 2 || self.length < 2 || self.cross_half_width < 0 {
            return Err(Error::Config("slab needs dim ≥ 2, length ≥ 2".into()));
        }
        let mut ext = vec![(-self.cross_half_width, self.cross_half_width); self.dim];
        ext[0] = (0, self.length - 1);
        LatticeWindow::from_extents(&ext)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if self.samples < 2 || self.thin == 0 {
            return Err(Error::Config("need samples ≥ 2 and thin ≥ 1".into()));
        }
        if self.contrast_distance >= self.length {
            return Err(Error::Config("contrast distance lies outside the slab".into()));
        }
        Ok(())
    }
}

/// Covariance profile `r ↦ cov(0, r e₁)` with per-distance errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisProfile {
    pub distance: Vec<i64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl AxisProfile {
    pub fn above_floor(&self, sigmas: f64) -> Vec<bool> {
        self.mean.iter().zip(&self.stderr).map(|(m, s)| m.abs() > sigmas * s && *m != 0.0).collect()
    }
}

fn axis_targets(w: &LatticeWindow) -> Vec<Site> {
    (0..w.side(0) as i64).map(|r| Site::on_axis(w.dim(), 0, r)).collect()
}

/// Per-sample values along the axis for one pinned set.
pub fn axis_values(a: &PinConfiguration, eps: f64, estimator: CovEstimator) -> Result<Vec<f64>> {
    let w = a.window();
    let o = Site::origin(w.dim());
    let targets = axis_targets(w);
    match estimator {
        CovEstimator::Conditioned => endpoint_conditioned(w, a.mask(), eps, &o, &targets),
        CovEstimator::Plain => {
            if a.contains(&o) {
                return Ok(vec![0.0; targets.len()]);
            }
            let g = GreenFactor::new(&a.free_region())?.column(&o)?;
            Ok(targets.iter().map(|z| g.get(z)).collect())
        }
    }
}

/// Mean and standard error per distance over samples (rows of `values`).
pub fn axis_profile(values: &[Vec<f64>], batches: Option<usize>) -> AxisProfile {
    let len = values.first().map_or(0, Vec::len);
    let mut p = AxisProfile {
        distance: (0..len as i64).collect(),
        mean: Vec::with_capacity(len),
        stderr: Vec::with_capacity(len),
    };
    for r in 0..len {
        let col: Vec<f64> = values.iter().map(|v| v[r]).collect();
        let (m, s) = mean_and_stderr(&col, batches);
        p.mean.push(m);
        p.stderr.push(s);
    }
    p
}

/// Exponential and power-law fits of `|cov|` over distances `≥ fit_from`
/// whose mean clears the noise floor.
pub fn decay_fits(p: &AxisProfile, floor_sigmas: f64, fit_from: i64) -> Result<(FitResult, FitResult)> {
    let keep = p.above_floor(floor_sigmas);
    let (mut xs, mut ys, mut ses) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &r) in p.distance.iter().enumerate() {
        if r >= fit_from.max(1) && keep[i] {
            xs.push(r as f64);
            ys.push(p.mean[i].abs());
            ses.push(p.stderr[i]);
        }
    }
    let e = fit_exponential(&xs, &ys, Some(&ses), 0.0)?;
    let q = fit_powerlaw(&xs, &ys, Some(&ses), 0.0)?;
    Ok((e, q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PinnedDecayResult {
    pub profile: AxisProfile,
    pub baseline: Vec<f64>,
    pub exponential: Option<FitResult>,
    pub power_law: Option<FitResult>,
    pub fit_error: Option<String>,
    pub pinned_fraction: f64,
    pub xn_environments: usize,
    pub xn_skipped: usize,
    pub xn_min_slack: f64,
    pub xn_literal_failures: usize,
}

/// Gibbs samples of the pinned set on a slab, the covariance profile along
/// its long axis, decay fits, the `ε = 0` contrast and the `X_n` diagnostic.
pub fn run_pinned_decay(cfg: &PinnedDecayConfig) -> Result<(ExperimentOutput, PinnedDecayResult)> {
    cfg.validate()?;
    let w = cfg.window()?;
    let o = Site::origin(cfg.dim);
    let mut out = ExperimentOutput::new("pinned_decay", cfg)?;
    let baseline_col = GreenFactor::new(&FreeRegion::all_free(w.clone()))?.column(&o)?;
    let baseline: Vec<f64> = axis_targets(&w).iter().map(|z| baseline_col.get(z)).collect();

    let mut chain = GibbsChain::new(w.clone(), cfg.eps, cfg.seed, cfg.options)?;
    for _ in 0..cfg.burnin {
        chain.sweep()?;
    }
    let mut values = Vec::with_capacity(cfg.samples);
    let mut records = Vec::new();
    let (mut pinned_total, mut xn_envs, mut xn_skipped, mut lit_fail) = (0usize, 0, 0, 0);
    let mut xn_min = f64::INFINITY;
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            chain.sweep()?;
        }
        let a = chain.configuration();
        pinned_total += a.count();
        values.push(axis_values(&a, cfg.eps, cfg.estimator)?);
        if !a.contains(&o) {
            let rep = xn_bound_check(&chain.green_column(&o)?, &a, cfg.xn_width)?;
            if rep.skipped {
                xn_skipped += 1;
            } else {
                xn_envs += 1;
                xn_min = xn_min.min(rep.min_slack());
                lit_fail += rep.rows.iter().filter(|r| r.literal_slack < -crate::geometry::XN_TOL).count();
            }
        }
        if cfg.record_pins {
            records.push(format!("{},{},{}", cfg.seed, chain.sweeps_done(), a.to_hex()));
        }
    }
    let batches = (cfg.batches >= 2).then_some(cfg.batches);
    let profile = axis_profile(&values, batches);
    let keep = profile.above_floor(cfg.floor_sigmas);
    let rows = (0..profile.distance.len())
        .map(|i| {
            format!(
                "{},{},{},{},{},{}",
                profile.distance[i],
                num(profile.mean[i]),
                num(profile.stderr[i]),
                num(profile.mean[i].abs()),
                num(baseline[i]),
                u8::from(keep[i])
            )
        })
        .collect();
    out.table(Table::new("pinned_decay", "distance,cov_mean,cov_stderr,abs_cov,baseline_cov,above_floor", rows));
    if cfg.record_pins {
        out.table(Table::new("pin_records", "seed,sweep,pinned_hex", records));
    }

    let (exponential, power_law, fit_error) = match decay_fits(&profile, cfg.floor_sigmas, cfg.fit_from) {
        Ok((e, q)) => (Some(e), Some(q), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    match (&exponential, &power_law) {
        (Some(e), Some(q)) => {
            let z = e.rate / e.rate_se;
            out.check(Check::hard(
                "rate_significant",
                e.rate > 0.0 && z >= cfg.min_rate_sigmas,
                format!("rate {:.4} ± {:.4} ({z:.2}σ) over {:?}", e.rate, e.rate_se, e.range),
            ));
            out.check(Check::hard(
                "exponential_beats_power_law",
                e.r_squared > q.r_squared,
                format!("R² {:.5} vs {:.5}", e.r_squared, q.r_squared),
            ));
            out.fit("pinned_exponential", e.clone());
            out.fit("pinned_power_law", q.clone());
        }
        _ => {
            let msg = fit_error.clone().unwrap_or_default();
            out.check(Check::hard("rate_significant", false, msg.clone()));
            out.check(Check::hard("exponential_beats_power_law", false, msg));
        }
    }
    let r = cfg.contrast_distance as usize;
    let upper = profile.mean[r].abs() + cfg.floor_sigmas * profile.stderr[r];
    out.check(Check::hard(
        "baseline_contrast",
        baseline[r].abs() >= cfg.contrast_factor * upper,
        format!(
            "|baseline| {:e} vs pinned {:e} ± {:e} at distance {r}",
            baseline[r].abs(),
            profile.mean[r],
            profile.stderr[r]
        ),
    ));
    out.check(Check::hard(
        "xn_bound",
        xn_min >= -crate::geometry::XN_TOL,
        format!("{xn_envs} environments, min slack {xn_min:e}, {xn_skipped} without interior"),
    ));
    out.check(Check::soft(
        "xn_bound_literal",
        lit_fail == 0,
        format!("{lit_fail} annuli fail with ξ from d(·, Ā)"),
    ));
    let result = PinnedDecayResult {
        profile,
        baseline,
        exponential,
        power_law,
        fit_error,
        pinned_fraction: pinned_total as f64 / (cfg.samples * w.len()) as f64,
        xn_environments: xn_envs,
        xn_skipped,
        xn_min_slack: xn_min,
        xn_literal_failures: lit_fail,
    };
    out.summary.results = serde_json::to_value(&result)?;
    Ok((out, result))
}
