use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglinear, fit_powerlaw};
use crate::lattice::{LatticeWindow, Site};
use crate::solver::{green_column, green_dense, rw_green_plateau, Backend, FreeRegion};

use super::{num, Check, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub dim: usize,
    /// On-axis radii `r` of `z = r e₁`; the fit uses `fit_from..=r_max`.
    pub r_max: i64,
    pub fit_from: i64,
    pub m_max: usize,
    pub slope_tol: f64,
    /// Half-width of the cube on which dense and iterative columns are compared.
    pub oracle_half_width: i64,
    pub oracle_tol: f64,
    /// Cube sides for the `d = 4` mode; empty disables it.
    pub d4_sizes: Vec<i64>,
    pub d4_backend: Backend,
    pub reference_dims: Vec<usize>,
    pub reference_m_max: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            dim: 5,
            r_max: 12,
            fit_from: 4,
            m_max: 20_000,
            slope_tol: 0.3,
            oracle_half_width: 1,
            oracle_tol: 1e-8,
            d4_sizes: Vec::new(),
            d4_backend: Backend::iterative(),
            reference_dims: vec![5, 6, 7, 8],
            reference_m_max: 40_000,
        }
    }
}

/// `G(0, r e₁)` on `Z^d` from the random-walk representation, its power-law
/// fit, a dense-versus-iterative oracle and the optional `d = 4` mode.
pub fn run_unpinned_decay(cfg: &GreenConfig) -> Result<ExperimentOutput> {
    if cfg.fit_from < 1 || cfg.r_max < cfg.fit_from {
        return Err(Error::Config("need 1 ≤ fit_from ≤ r_max".into()));
    }
    let mut out = ExperimentOutput::new("green", cfg)?;
    let d = cfg.dim;
    if d >= 5 {
        let mut rows = Vec::new();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for r in 0..=cfg.r_max {
            let z = Site::on_axis(d, 0, r);
            let p = rw_green_plateau(z.coords(), cfg.m_max)?;
            rows.push(format!("{r},{r},{r},{},{},{}", num(p.value), num(p.uncertainty), num(p.partial_sum)));
            if r >= cfg.fit_from {
                xs.push(r as f64);
                ys.push(p.value);
            }
        }
        out.table(Table::new(
            "unpinned_decay",
            "r,distance_l1,distance_euclidean,green,uncertainty,partial_sum",
            rows,
        ));
        let f = fit_powerlaw(&xs, &ys, None, 0.0)?;
        let want = 4.0 - d as f64;
        out.check(Check::hard(
            "power_law_exponent",
            (f.rate - want).abs() <= cfg.slope_tol,
            format!("fitted {:.4} vs {want} ± {}", f.rate, cfg.slope_tol),
        ));
        out.fit("unpinned_power_law", f);
    }
    if cfg.oracle_half_width > 0 {
        let region = FreeRegion::all_free(LatticeWindow::cube(d, cfg.oracle_half_width)?);
        let dense = green_dense(&region, region.free_count())?;
        let mut worst: f64 = 0.0;
        for s in region.free_sites().step_by(7) {
            let it = green_column(&region, &s, Backend::iterative())?;
            let col = dense.column(&s)?;
            worst = col.values().iter().zip(it.values()).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
        out.check(Check::hard(
            "dense_vs_iterative",
            worst <= cfg.oracle_tol,
            format!("max |difference| {worst:e}"),
        ));
    }
    if !cfg.d4_sizes.is_empty() {
        let mut rows = Vec::new();
        let (mut ns, mut gs) = (Vec::new(), Vec::new());
        for &n in &cfg.d4_sizes {
            let lo = -(n - 1) / 2;
            let w = LatticeWindow::from_extents(&vec![(lo, lo + n - 1); 4])?;
            let g = green_column(&FreeRegion::all_free(w), &Site::origin(4), cfg.d4_backend)?.get(&Site::origin(4));
            rows.push(format!("{n},{},{}", num((n as f64).ln()), num(g)));
            ns.push(n as f64);
            gs.push(g);
        }
        out.table(Table::new("d4_growth", "side,log_side,green_00", rows));
        let f = fit_loglinear(&ns, &gs)?;
        out.check(Check::hard("d4_log_slope_positive", f.rate > 0.0, format!("slope {:.4}", f.rate)));
        out.fit("d4_log_linear", f);
    }
    Ok(out)
}

/// The `G(0,0)` reference table in the format of the bundled data file.
pub fn g_ref_table(dims: &[usize], m_max: usize) -> Result<String> {
    let mut s = String::from(
        "# G(0,0) of the membrane model on Z^d: sum_{m<=m_max} (m+1) P_0[S_m = 0]\n\
         # plus the local-limit tail beyond m_max. tail_bound = |value(m_max) - value(m_max/2)|.\n\
         # Regenerate with: membrane-lab green --reference\n\
         # d value m_max tail_bound\n",
    );
    for &d in dims {
        let p = rw_green_plateau(&vec![0; d], m_max)?;
        writeln!(s, "{d} {:.12} {m_max} {:.2e}", p.value, p.uncertainty).expect("writing to a string");
    }
    Ok(s)
}
