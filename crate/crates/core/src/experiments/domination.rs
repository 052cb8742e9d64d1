use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;
use crate::pinning::{check_strong_domination, rho_bounds, zeta_exact, Side};

use super::{num, Check, ExperimentOutput, Table};

pub const DOMINATION_MAX_SITES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DominationConfig {
    pub dim: usize,
    /// Segment lengths along the first axis.
    pub sizes: Vec<usize>,
    pub eps: Vec<f64>,
    /// Tolerance for the single-site upper bracket.
    pub tight_tol: f64,
}

impl Default for DominationConfig {
    fn default() -> Self {
        DominationConfig {
            dim: 5,
            sizes: vec![1, 2, 4, 8],
            eps: vec![0.25, 1.0, 4.0],
            tight_tol: 1e-12,
        }
    }
}

fn segment(dim: usize, n: usize) -> Result<LatticeWindow> {
    let mut ext = vec![(0i64, 0i64); dim];
    ext[0].1 = n as i64 - 1;
    LatticeWindow::from_extents(&ext)
}

/// Every conditional pin probability of the exact pinned-set law on small
/// segments, against the Bernoulli brackets `ρ₋ ≤ · ≤ ρ₊`.
pub fn run_domination_check(cfg: &DominationConfig) -> Result<ExperimentOutput> {
    if cfg.sizes.iter().any(|&n| n == 0 || n > DOMINATION_MAX_SITES) {
        return Err(Error::SizeLimit {
            what: "domination window",
            size: cfg.sizes.iter().copied().max().unwrap_or(0),
            limit: DOMINATION_MAX_SITES,
        });
    }
    let mut out = ExperimentOutput::new("domination", cfg)?;
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut min_lower_slack = f64::INFINITY;
    let mut tight_gap: f64 = 0.0;
    for &eps in &cfg.eps {
        let rb = rho_bounds(cfg.dim, eps)?;
        for &n in &cfg.sizes {
            let w = segment(cfg.dim, n)?;
            let zeta = zeta_exact(&w, eps)?;
            let lo = check_strong_domination(&zeta, rb.rho_minus, Side::Lower);
            let hi = check_strong_domination(&zeta, rb.rho_plus, Side::Upper);
            violations += lo.violations.len() + hi.violations.len();
            min_lower_slack = min_lower_slack.min(lo.min_slack);
            if n == 1 {
                tight_gap = tight_gap.max((hi.max_conditional - rb.rho_plus).abs());
            }
            rows.push(format!(
                "{n},{eps},{},{},{},{},{},{},{},{}",
                num(rb.rho_minus),
                num(rb.rho_plus),
                num(lo.min_conditional),
                num(hi.max_conditional),
                num(lo.min_slack),
                num(hi.min_slack),
                lo.examined,
                lo.violations.len() + hi.violations.len()
            ));
        }
    }
    out.table(Table::new(
        "domination",
        "sites,eps,rho_minus,rho_plus,min_conditional,max_conditional,lower_slack,upper_slack,conditionals,violations",
        rows,
    ));
    out.check(Check::hard("zero_violations", violations == 0, format!("{violations} violations")));
    if cfg.sizes.contains(&1) {
        out.check(Check::hard(
            "single_site_upper_tight",
            tight_gap <= cfg.tight_tol,
            format!("|max conditional − ρ₊| = {tight_gap:e}"),
        ));
    }
    out.check(Check::hard(
        "lower_bracket_strict",
        min_lower_slack > 0.0,
        format!("min conditional − ρ₋ = {min_lower_slack:e}"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_passes() {
        let cfg = DominationConfig {
            sizes: vec![1, 3],
            eps: vec![1.0],
            ..Default::default()
        };
        let out = run_domination_check(&cfg).unwrap();
        assert!(out.pass(), "{:?}", out.summary.checks);
        assert_eq!(out.tables[0].rows.len(), 2);
        let big = DominationConfig {
            sizes: vec![11],
            ..Default::default()
        };
        assert!(run_domination_check(&big).is_err());
    }
}
