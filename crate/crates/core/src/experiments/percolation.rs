use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::percolation::{
    box_empty_mc, box_empty_prob_bound, choose_m, growth_experiment, GrowthConfig, GrowthStats, GROWTH_CSV_HEADER,
};

use super::{num, Check, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolationConfig {
    pub dims: Vec<usize>,
    pub ps: Vec<f64>,
    pub ms: Vec<u64>,
    pub reps: u64,
    pub seed: u64,
    pub sigmas: f64,
    /// `growth: null` skips the growth experiment.
    pub growth: Option<GrowthConfig>,
    pub min_r_squared: f64,
    /// The calibrated exceedance must drop from `exceed_from` to `exceed_to`.
    pub exceed_from: usize,
    pub exceed_to: usize,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            dims: vec![2, 3],
            ps: vec![0.3, 0.5, 0.7],
            ms: vec![1, 2, 3, 4],
            reps: 20_000,
            seed: 0,
            sigmas: 4.0,
            growth: Some(GrowthConfig::default()),
            min_r_squared: 0.9,
            exceed_from: 2,
            exceed_to: 6,
        }
    }
}

/// Empty-box probabilities against their product bound, `M` for the
/// reference case and, optionally, growth of the shells `C_n`.
pub fn run_percolation(cfg: &PercolationConfig) -> Result<(ExperimentOutput, Option<GrowthStats>)> {
    let mut out = ExperimentOutput::new("percolation", cfg)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut k = 0u64;
    for &d in &cfg.dims {
        for &p in &cfg.ps {
            for &m in &cfg.ms {
                let mc = box_empty_mc(m, p, d, cfg.reps, cfg.seed.wrapping_add(k))?;
                k += 1;
                let bound = box_empty_prob_bound(m, p, d)?;
                let pass = mc.mean <= bound + cfg.sigmas * mc.stderr;
                failures += usize::from(!pass);
                rows.push(format!(
                    "{d},{p},{m},{},{},{},{},{}",
                    mc.reps,
                    num(mc.mean),
                    num(mc.stderr),
                    num(bound),
                    u8::from(pass)
                ));
            }
        }
    }
    out.table(Table::new("box_empty", "d,p,m,reps,mc,stderr,bound,pass", rows));
    out.check(Check::hard("box_empty_bound", failures == 0, format!("{failures} grid points above bound")));
    let m_ref = choose_m(0.5, 2)?;
    out.check(Check::hard("choose_m_reference", m_ref == 44, format!("M(p=0.5, d=2) = {m_ref}")));

    let growth = match &cfg.growth {
        Some(g) => {
            let stats = growth_experiment(g)?;
            out.table(Table::new("growth", GROWTH_CSV_HEADER, stats.csv_rows()));
            let r2 = stats.fit.as_ref().map(|f| f.r_squared);
            out.check(Check::hard(
                "growth_linear",
                r2.is_some_and(|r| r >= cfg.min_r_squared),
                format!("median radius vs n, R² {r2:?}"),
            ));
            out.check(Check::hard(
                "analytic_k_exceedance_zero",
                stats.rows.iter().all(|r| r.exceed_freq_analytic_k == 0.0),
                format!("K = {} (block side {})", stats.analytic_k.exact, stats.block_side),
            ));
            let (a, b) = (stats.row(cfg.exceed_from), stats.row(cfg.exceed_to));
            let drop = matches!((a, b), (Some(a), Some(b)) if b.exceed_freq_calib_k < a.exceed_freq_calib_k);
            out.check(Check::hard(
                "calibrated_k_exceedance_decreasing",
                drop,
                format!(
                    "K̂ = {}: {:?} at n={} vs {:?} at n={}",
                    stats.calibrated_k,
                    a.map(|r| r.exceed_freq_calib_k),
                    cfg.exceed_from,
                    b.map(|r| r.exceed_freq_calib_k),
                    cfg.exceed_to
                ),
            ));
            if let Some(f) = &stats.fit {
                out.fit("growth_linear", f.clone());
            }
            Some(stats)
        }
        None => None,
    };
    out.summary.results = serde_json::json!({
        "choose_m_reference": m_ref,
        "growth": growth.as_ref().map(|g| serde_json::json!({
            "block_side": g.block_side,
            "analytic_k": g.analytic_k,
            "calibrated_k": g.calibrated_k,
            "zero_exceedance_k": g.zero_exceedance_k,
        })),
    });
    Ok((out, growth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_without_growth() {
        let cfg = PercolationConfig {
            dims: vec![2],
            ps: vec![0.5],
            ms: vec![1, 2],
            reps: 2000,
            growth: None,
            ..Default::default()
        };
        let (out, g) = run_percolation(&cfg).unwrap();
        assert!(g.is_none());
        assert!(out.pass(), "{:?}", out.summary.checks);
        assert_eq!(out.tables[0].rows.len(), 2);
    }
}
