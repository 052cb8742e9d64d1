use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    auto_step, interior_points, shells, sobolev_tail_series, weighted_distance, SobolevReport, SOBOLEV_CSV_HEADER,
};
use crate::lattice::{LatticeWindow, Site};
use crate::pinning::PinConfiguration;
use crate::solver::{green_column, Backend};

use super::{num, Check, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevDecayConfig {
    pub dim: usize,
    pub half_width: i64,
    pub p: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Fixed shell step; when absent each replica gets a step leaving
    /// `shell_count` untruncated shells.
    pub step: Option<f64>,
    pub shell_count: usize,
    pub n_max: usize,
    pub backend: Backend,
    pub min_negative: usize,
}

impl Default for SobolevDecayConfig {
    fn default() -> Self {
        SobolevDecayConfig {
            dim: 2,
            half_width: 40,
            p: 0.5,
            replicas: 20,
            seed: 0,
            step: None,
            shell_count: 8,
            n_max: 10,
            backend: Backend::Banded,
            min_negative: 18,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SobolevReplica {
    pub replica: usize,
    pub step: f64,
    /// `None` when `C_1` already reaches the window boundary.
    pub report: Option<SobolevReport>,
}

impl SobolevReplica {
    /// `δ̂`, the fitted decay rate of `t_n` in `n`.
    pub fn rate(&self) -> Option<f64> {
        self.report.as_ref()?.fit.as_ref().map(|f| f.rate)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SobolevDecayResult {
    pub replicas: Vec<SobolevReplica>,
    pub negative_slopes: usize,
    pub median_rate: Option<f64>,
}

/// Bernoulli environment of replica `k`, with the origin forced free.
pub fn replica_environment(cfg: &SobolevDecayConfig, k: usize) -> Result<PinConfiguration> {
    let w = LatticeWindow::cube(cfg.dim, cfg.half_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(k as u64);
    let mut a = PinConfiguration::bernoulli(w.clone(), cfg.p, &mut rng);
    a.set(w.index_of(&Site::origin(cfg.dim)).expect("cube contains the origin"), false);
    Ok(a)
}

fn replica(cfg: &SobolevDecayConfig, k: usize) -> Result<SobolevReplica> {
    let a = replica_environment(cfg, k)?;
    let o = Site::origin(cfg.dim);
    let interior = interior_points(&a, true);
    let dist = weighted_distance(&o, &interior.weights())?;
    let step = match cfg.step {
        Some(s) => s,
        None => auto_step(&dist, cfg.shell_count)?,
    };
    let sh = shells(&dist, step, cfg.n_max.max(cfg.shell_count + 1))?;
    let h = green_column(&a.free_region(), &o, cfg.backend)?;
    let report = match sobolev_tail_series(&h, &interior, &sh) {
        Ok(r) => Some(r),
        Err(Error::Truncated(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SobolevReplica { replica: k, step, report })
}

/// Tail norms `t_n = ‖h‖²_{A, C_n^c}` over Bernoulli environments and the
/// distribution of their fitted decay rates.
pub fn run_sobolev_decay(cfg: &SobolevDecayConfig) -> Result<(ExperimentOutput, SobolevDecayResult)> {
    if !(0.0..=1.0).contains(&cfg.p) || cfg.replicas == 0 || cfg.half_width < 1 {
        return Err(Error::Config("need p ∈ [0,1], replicas ≥ 1, half_width ≥ 1".into()));
    }
    let mut out = ExperimentOutput::new("sobolev_decay", cfg)?;
    let reps: Vec<SobolevReplica> = (0..cfg.replicas)
        .into_par_iter()
        .map(|k| replica(cfg, k))
        .collect::<Result<_>>()?;
    if reps.iter().all(|r| r.report.is_none()) {
        return Err(Error::Truncated("every replica has C_1 truncated".into()));
    }
    let mut rows = Vec::new();
    let (mut monotone, mut chain_ok) = (true, true);
    for r in &reps {
        let Some(rep) = &r.report else {
            rows.push(format!("{},{},,,,,,,,", r.replica, num(r.step)));
            continue;
        };
        out.table(Table::new(format!("sobolev_replica_{:02}", r.replica), SOBOLEV_CSV_HEADER, rep.csv_rows()));
        let t1 = rep.rows.first().map_or(0.0, |x| x.tail_norm_sq);
        monotone &= rep.is_nonincreasing();
        chain_ok &= t1 <= rep.observed_l_total * rep.h0;
        let (rate, se, r2) = rep.fit.as_ref().map_or((String::new(), String::new(), String::new()), |f| {
            (num(f.rate), num(f.rate_se), num(f.r_squared))
        });
        rows.push(format!(
            "{},{},{},{rate},{se},{r2},{},{},{},{}",
            r.replica,
            num(r.step),
            rep.rows.iter().filter(|x| !x.truncated).count(),
            num(t1),
            num(rep.h0),
            num(rep.observed_l_total),
            u8::from(rep.is_nonincreasing())
        ));
    }
    out.table(Table::new(
        "sobolev_rates",
        "replica,step,untruncated,delta_hat,delta_se,r_squared,t1,h0,observed_L_total,nonincreasing",
        rows,
    ));
    let mut rates: Vec<f64> = reps.iter().filter_map(SobolevReplica::rate).collect();
    rates.sort_by(f64::total_cmp);
    let negative = rates.iter().filter(|&&r| r > 0.0).count();
    let median = (!rates.is_empty()).then(|| {
        let m = rates.len();
        if m % 2 == 1 {
            rates[m / 2]
        } else {
            0.5 * (rates[m / 2 - 1] + rates[m / 2])
        }
    });
    out.check(Check::hard(
        "negative_slopes",
        negative >= cfg.min_negative,
        format!("{negative}/{} replicas with decreasing log t_n", cfg.replicas),
    ));
    out.check(Check::hard(
        "median_rate_positive",
        median.is_some_and(|m| m > 0.0),
        format!("median δ̂ {median:?}"),
    ));
    out.check(Check::hard("tails_nonincreasing", monotone, String::new()));
    out.check(Check::hard("t1_below_l_h0", chain_ok, String::new()));
    let result = SobolevDecayResult {
        replicas: reps,
        negative_slopes: negative,
        median_rate: median,
    };
    out.summary.results = serde_json::json!({
        "negative_slopes": negative,
        "median_rate": median,
        "rates": rates,
    });
    Ok((out, result))
}
