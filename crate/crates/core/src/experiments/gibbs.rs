use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;
use crate::pinning::{mean_and_stderr, zeta_exact, GibbsChain, GibbsOptions, EXACT_LIMIT};

use super::{num, Check, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsDiagnosticsConfig {
    pub extents: Vec<(i64, i64)>,
    pub eps: f64,
    pub sweeps: u64,
    pub burnin: u64,
    pub seed: u64,
    pub options: GibbsOptions,
    /// Sweeps between trace rows.
    pub trace_every: u64,
    pub tv_tol: f64,
    pub normalization_tol: f64,
    pub drift_tol: f64,
}

impl Default for GibbsDiagnosticsConfig {
    fn default() -> Self {
        GibbsDiagnosticsConfig {
            extents: [(0, 7), (0, 0), (0, 0), (0, 0), (0, 0)].to_vec(),
            eps: 1.0,
            sweeps: 100_000,
            burnin: 1_000,
            seed: 0,
            options: GibbsOptions::default(),
            trace_every: 1_000,
            tv_tol: 0.02,
            normalization_tol: 1e-12,
            drift_tol: 1e-8,
        }
    }
}

/// Runs one chain, tracing its state; on windows small enough to enumerate,
/// compares the empirical law of the pinned set with the exact one.
pub fn run_gibbs_diagnostics(cfg: &GibbsDiagnosticsConfig) -> Result<ExperimentOutput> {
    if cfg.sweeps == 0 || cfg.trace_every == 0 {
        return Err(Error::Config("sweeps and trace_every must be positive".into()));
    }
    let window = LatticeWindow::from_extents(&cfg.extents)?;
    let n = window.len();
    let mut out = ExperimentOutput::new("gibbs-diagnostics", cfg)?;
    let mut chain = GibbsChain::new(window.clone(), cfg.eps, cfg.seed, cfg.options)?;
    for _ in 0..cfg.burnin {
        chain.sweep()?;
    }
    let exact = n <= EXACT_LIMIT;
    let mut counts = if exact { vec![0u64; 1 << n] } else { Vec::new() };
    let mut site_freq = vec![0u64; n];
    let mut density = Vec::with_capacity(cfg.sweeps as usize);
    let mut trace = Vec::new();
    let mut max_drift: f64 = 0.0;
    for s in 1..=cfg.sweeps {
        chain.sweep()?;
        let mask = chain.pinned_mask();
        let pinned = mask.iter().filter(|&&b| b).count();
        density.push(pinned as f64 / n as f64);
        for (f, &b) in site_freq.iter_mut().zip(mask) {
            *f += u64::from(b);
        }
        if exact {
            let m = mask.iter().enumerate().fold(0usize, |m, (i, &b)| m | usize::from(b) << i);
            counts[m] += 1;
        }
        if s % cfg.trace_every == 0 {
            let d = chain.drift()?;
            max_drift = max_drift.max(d);
            let st = chain.stats();
            trace.push(format!(
                "{},{},{},{},{},{},{}",
                chain.sweeps_done(),
                pinned,
                st.flips,
                st.bracket_free,
                st.bracket_pinned,
                st.variance_queries,
                num(d)
            ));
        }
    }
    out.table(Table::new(
        "gibbs_trace",
        "sweep,pinned,flips,bracket_free,bracket_pinned,variance_queries,drift",
        trace,
    ));
    let (dens, dens_se) = mean_and_stderr(&density, Some(20));
    out.check(Check::hard("drift", max_drift <= cfg.drift_tol, format!("max drift {max_drift:e}")));
    let mut results = serde_json::json!({
        "sites": n,
        "pinned_density": dens,
        "pinned_density_stderr": dens_se,
        "stats": chain.stats(),
        "max_drift": max_drift,
    });
    if exact {
        let zeta = zeta_exact(&window, cfg.eps)?;
        let norm = (zeta.total() - 1.0).abs();
        let tv = zeta.total_variation(&counts);
        let want: f64 = (0..n).map(|i| zeta.marginal(i)).sum::<f64>() / n as f64;
        let rows = (0..n)
            .map(|i| format!("{i},{},{}", num(site_freq[i] as f64 / cfg.sweeps as f64), num(zeta.marginal(i))))
            .collect();
        out.table(Table::new("gibbs_marginals", "site,empirical,exact", rows));
        out.check(Check::hard("normalization", norm <= cfg.normalization_tol, format!("|Σζ − 1| = {norm:e}")));
        out.check(Check::hard("total_variation", tv <= cfg.tv_tol, format!("TV = {tv:.5}")));
        out.check(Check::hard(
            "pin_density",
            (dens - want).abs() <= 4.0 * dens_se,
            format!("{dens:.6} ± {dens_se:.2e} vs exact {want:.6}"),
        ));
        results["total_variation"] = tv.into();
        results["exact_density"] = want.into();
    }
    out.summary.results = results;
    Ok(out)
}
