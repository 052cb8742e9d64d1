use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeWindow, ScalarField, Site};
use crate::linalg::{BandedCholesky, CsrMatrix, DenseMatrix, SymBandMatrix};
use crate::solver::{assemble, green_dense, FreeRegion};

use super::config::PinConfiguration;
use super::measure::{c_plus, check_eps, pin_prob_from_variance, rho, safe_rho_minus};

/// Windows up to this size default to the dense engine.
pub const DENSE_CHAIN_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainBackend {
    /// Dense up to [`DENSE_CHAIN_LIMIT`] sites, banded above.
    #[default]
    Auto,
    /// Full Green matrix of the current free set, rank-one modified per flip.
    Dense,
    /// Banded Cholesky factor with pinned indices decoupled.
    Banded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsOptions {
    pub backend: ChainBackend,
    /// Sweeps between rebuilds of the Green matrix or factor; 0 disables.
    pub refresh: usize,
    /// Decide updates with `u >= ρ₊` or `u < ρ₋` without a solve.
    pub use_brackets: bool,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            backend: ChainBackend::Auto,
            refresh: 1,
            use_brackets: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ChainStats {
    pub updates: u64,
    pub flips: u64,
    pub bracket_free: u64,
    pub bracket_pinned: u64,
    pub variance_queries: u64,
    pub refreshes: u64,
    /// Largest deviation of the maintained Green matrix from a fresh inverse
    /// seen at a refresh (dense engine only).
    pub max_drift: f64,
}

enum Engine {
    Dense(DenseMatrix),
    Banded { band: SymBandMatrix, chol: BandedCholesky },
}

/// Random-scan heat bath for `ζ_W^ε`: a uniformly chosen site `x` is pinned
/// with probability `ε / (ε + sqrt(2π G^E_W(x, x)))`, `E` the other pins.
pub struct GibbsChain {
    window: LatticeWindow,
    eps: f64,
    options: GibbsOptions,
    op: CsrMatrix,
    pinned: Vec<bool>,
    rng: ChaCha8Rng,
    seed: u64,
    sweeps: u64,
    since_refresh: usize,
    rho_plus: f64,
    rho_minus: f64,
    engine: Engine,
    stats: ChainStats,
}

/// The result of a conditional-variance query; for a pinned site the dense
/// engine keeps `G q` for the subsequent unpin.
struct Query {
    variance: f64,
    border: Option<(Vec<f64>, f64)>,
}

impl GibbsChain {
    pub fn new(window: LatticeWindow, eps: f64, seed: u64, options: GibbsOptions) -> Result<Self> {
        let initial = PinConfiguration::empty(window);
        Self::with_initial(initial, eps, seed, options)
    }

    pub fn with_initial(initial: PinConfiguration, eps: f64, seed: u64, options: GibbsOptions) -> Result<Self> {
        check_eps(eps)?;
        let window = initial.window().clone();
        let op = assemble(&FreeRegion::all_free(window.clone()))?.csr().clone();
        let dim = window.dim();
        let rho_minus = if dim >= 5 { safe_rho_minus(dim, eps).unwrap_or(0.0) } else { 0.0 };
        let dense = match options.backend {
            ChainBackend::Dense => true,
            ChainBackend::Banded => false,
            ChainBackend::Auto => window.len() <= DENSE_CHAIN_LIMIT,
        };
        let pinned = initial.mask().to_vec();
        let engine = if dense {
            Engine::Dense(fresh_dense(&window, &pinned)?)
        } else {
            let band = assemble(&FreeRegion::all_free(window.clone()))?.to_band();
            let chol = fresh_banded(&band, &pinned)?;
            Engine::Banded { band, chol }
        };
        Ok(GibbsChain {
            window,
            eps,
            options,
            op,
            pinned,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            sweeps: 0,
            since_refresh: 0,
            rho_plus: rho(c_plus(dim), eps),
            rho_minus,
            engine,
            stats: ChainStats::default(),
        })
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.engine, Engine::Dense(_))
    }

    pub fn pinned_mask(&self) -> &[bool] {
        &self.pinned
    }

    pub fn configuration(&self) -> PinConfiguration {
        PinConfiguration::from_mask(self.window.clone(), self.pinned.clone()).expect("mask length matches")
    }

    /// `G^E_W(x, x)` for window index `k`, with `E` the current pins other
    /// than `k`.
    pub fn conditional_variance(&self, k: usize) -> Result<f64> {
        Ok(self.query(k)?.variance)
    }

    fn query(&self, k: usize) -> Result<Query> {
        let qkk = self.op.get(k, k);
        if !self.pinned[k] {
            let variance = match &self.engine {
                Engine::Dense(g) => g.get(k, k),
                Engine::Banded { chol, .. } => chol.inverse_diagonal(k),
            };
            return Ok(Query { variance, border: None });
        }
        let coupling: Vec<(usize, f64)> = self
            .op
            .row(k)
            .filter(|&(j, _)| j != k && !self.pinned[j])
            .collect();
        match &self.engine {
            Engine::Dense(g) => {
                let n = self.window.len();
                let mut u = vec![0.0; n];
                for &(j, qj) in &coupling {
                    for (ui, gij) in u.iter_mut().zip(g.row(j)) {
                        *ui += qj * gij;
                    }
                }
                let s = qkk - coupling.iter().map(|&(j, qj)| qj * u[j]).sum::<f64>();
                check_schur(k, s)?;
                Ok(Query {
                    variance: 1.0 / s,
                    border: Some((u, s)),
                })
            }
            Engine::Banded { chol, .. } => {
                let Some(start) = coupling.iter().map(|e| e.0).min() else {
                    return Ok(Query {
                        variance: 1.0 / qkk,
                        border: None,
                    });
                };
                let mut v = vec![0.0; self.window.len()];
                for &(j, qj) in &coupling {
                    v[j] = qj;
                }
                let s = qkk - chol.inverse_quadratic_form(&mut v, start);
                check_schur(k, s)?;
                Ok(Query {
                    variance: 1.0 / s,
                    border: None,
                })
            }
        }
    }

    fn pin(&mut self, k: usize) -> Result<()> {
        match &mut self.engine {
            Engine::Dense(g) => {
                let col = g.column(k);
                let gkk = col[k];
                g.rank_one_add(-1.0 / gkk, &col, &col);
                for j in 0..col.len() {
                    g.set(k, j, 0.0);
                    g.set(j, k, 0.0);
                }
            }
            Engine::Banded { chol, .. } => chol.decouple(k)?,
        }
        self.pinned[k] = true;
        Ok(())
    }

    fn unpin(&mut self, k: usize, border: Option<(Vec<f64>, f64)>) -> Result<()> {
        match &mut self.engine {
            Engine::Dense(g) => {
                let (u, s) = border.expect("dense unpin follows a bordered query");
                g.rank_one_add(1.0 / s, &u, &u);
                for (j, uj) in u.iter().enumerate() {
                    g.set(k, j, -uj / s);
                    g.set(j, k, -uj / s);
                }
                g.set(k, k, 1.0 / s);
            }
            Engine::Banded { band, chol } => {
                let pinned = &self.pinned;
                chol.couple(k, |j| if j != k && pinned[j] { 0.0 } else { band.get(k, j) })?;
            }
        }
        self.pinned[k] = false;
        Ok(())
    }

    /// One heat-bath update at a uniformly chosen site.
    pub fn step(&mut self) -> Result<()> {
        let n = self.window.len();
        let k = self.rng.random_range(0..n);
        let u: f64 = self.rng.random();
        self.stats.updates += 1;
        let (pin, border) = if self.options.use_brackets && u >= self.rho_plus {
            self.stats.bracket_free += 1;
            (false, None)
        } else if self.options.use_brackets && u < self.rho_minus {
            self.stats.bracket_pinned += 1;
            (true, None)
        } else {
            self.stats.variance_queries += 1;
            let q = self.query(k)?;
            (u < pin_prob_from_variance(self.eps, q.variance), q.border)
        };
        if pin != self.pinned[k] {
            self.stats.flips += 1;
            if pin {
                self.pin(k)?;
            } else {
                let border = match (&self.engine, border) {
                    (Engine::Dense(_), None) => self.query(k)?.border,
                    (_, b) => b,
                };
                self.unpin(k, border)?;
            }
        }
        Ok(())
    }

    /// `|W|` updates, then a refresh when due.
    pub fn sweep(&mut self) -> Result<()> {
        for _ in 0..self.window.len() {
            self.step()?;
        }
        self.sweeps += 1;
        self.since_refresh += 1;
        if self.options.refresh > 0 && self.since_refresh >= self.options.refresh {
            self.refresh()?;
        }
        Ok(())
    }

    /// Rebuilds the Green matrix or factor from scratch.
    pub fn refresh(&mut self) -> Result<()> {
        self.since_refresh = 0;
        self.stats.refreshes += 1;
        match &mut self.engine {
            Engine::Dense(g) => {
                let fresh = fresh_dense(&self.window, &self.pinned)?;
                self.stats.max_drift = self.stats.max_drift.max(g.max_abs_diff(&fresh));
                *g = fresh;
            }
            Engine::Banded { band, chol } => *chol = fresh_banded(band, &self.pinned)?,
        }
        Ok(())
    }

    /// Largest deviation of the maintained state from a fresh computation,
    /// without modifying the chain (dense engine: Green entries; banded:
    /// diagonal of the inverse).
    pub fn drift(&self) -> Result<f64> {
        match &self.engine {
            Engine::Dense(g) => Ok(g.max_abs_diff(&fresh_dense(&self.window, &self.pinned)?)),
            Engine::Banded { band, chol } => {
                let fresh = fresh_banded(band, &self.pinned)?;
                Ok((0..self.window.len())
                    .filter(|&k| !self.pinned[k])
                    .map(|k| (chol.inverse_diagonal(k) - fresh.inverse_diagonal(k)).abs())
                    .fold(0.0, f64::max))
            }
        }
    }

    /// `G^A_W(source, ·)` for the current pinned set `A`; identically zero if
    /// the source is pinned.
    pub fn green_column(&self, source: &Site) -> Result<ScalarField> {
        let k = self
            .window
            .index_of(source)
            .ok_or_else(|| Error::InvalidArgument(format!("{source} is outside the window")))?;
        let values = if self.pinned[k] {
            vec![0.0; self.window.len()]
        } else {
            match &self.engine {
                Engine::Dense(g) => g.column(k),
                Engine::Banded { chol, .. } => {
                    let mut col = chol.inverse_column(k);
                    for (v, &p) in col.iter_mut().zip(&self.pinned) {
                        if p {
                            *v = 0.0;
                        }
                    }
                    col
                }
            }
        };
        ScalarField::new(self.window.clone(), values)
    }
}

fn check_schur(k: usize, s: f64) -> Result<()> {
    if s.is_nan() || s <= 0.0 {
        return Err(Error::NotPositiveDefinite { pivot: k, value: s });
    }
    Ok(())
}

fn fresh_dense(window: &LatticeWindow, pinned: &[bool]) -> Result<DenseMatrix> {
    let n = window.len();
    let mut out = DenseMatrix::zeros(n);
    let region = FreeRegion::from_mask(window.clone(), pinned.to_vec())?;
    if region.free_count() == 0 {
        return Ok(out);
    }
    let g = green_dense(&region, n)?;
    let free = region.free_indices();
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            out.set(i, j, g.matrix().get(a, b));
        }
    }
    Ok(out)
}

fn fresh_banded(band: &SymBandMatrix, pinned: &[bool]) -> Result<BandedCholesky> {
    let mut m = band.clone();
    let bw = m.bandwidth();
    let n = m.n();
    for (k, _) in pinned.iter().enumerate().filter(|(_, p)| **p) {
        for j in k.saturating_sub(bw)..=(k + bw).min(n - 1) {
            m.set(k, j, if j == k { 1.0 } else { 0.0 });
        }
    }
    BandedCholesky::factor(&m)
}

/// A post-burn-in state of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsSample {
    pub sweep: u64,
    pub config: PinConfiguration,
}

/// Runs `burnin` sweeps, then `sweeps` more, emitting the state after every
/// `thin`-th of the latter.
pub fn gibbs_sample(
    window: &LatticeWindow,
    eps: f64,
    sweeps: u64,
    burnin: u64,
    thin: u64,
    seed: u64,
    options: GibbsOptions,
) -> Result<Vec<GibbsSample>> {
    if thin == 0 {
        return Err(Error::InvalidArgument("thin must be positive".into()));
    }
    let mut chain = GibbsChain::new(window.clone(), eps, seed, options)?;
    let mut out = Vec::new();
    for _ in 0..burnin {
        chain.sweep()?;
    }
    for s in 1..=sweeps {
        chain.sweep()?;
        if s % thin == 0 {
            out.push(GibbsSample {
                sweep: chain.sweeps_done(),
                config: chain.configuration(),
            });
        }
    }
    Ok(out)
}

/// Random-scan heat-bath transition matrix over all subsets of a window of
/// at most `limit` sites, built from Green-function conditionals.
pub fn heat_bath_kernel(window: &LatticeWindow, eps: f64, limit: usize) -> Result<Vec<Vec<f64>>> {
    check_eps(eps)?;
    let n = window.len();
    if n > limit {
        return Err(Error::SizeLimit {
            what: "heat-bath kernel window",
            size: n,
            limit,
        });
    }
    let states = 1usize << n;
    let mut p = vec![vec![0.0; states]; states];
    for (a, row) in p.iter_mut().enumerate() {
        for x in 0..n {
            let rest = a & !(1 << x);
            let region = FreeRegion::from_mask(window.clone(), (0..n).map(|i| rest >> i & 1 == 1).collect())?;
            let g = green_dense(&region, n)?.get(&window.site(x), &window.site(x));
            let c = pin_prob_from_variance(eps, g);
            row[rest | 1 << x] += c / n as f64;
            row[rest] += (1.0 - c) / n as f64;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinning::measure::{mask_of, zeta_exact};

    fn segment(len: i64) -> LatticeWindow {
        LatticeWindow::from_extents(&[(0, len - 1), (0, 0), (0, 0), (0, 0), (0, 0)]).unwrap()
    }

    #[test]
    fn detailed_balance_on_small_windows() {
        for len in 1..=4 {
            let w = segment(len);
            let z = zeta_exact(&w, 1.3).unwrap();
            let p = heat_bath_kernel(&w, 1.3, 4).unwrap();
            for a in 0..p.len() {
                assert!((p[a].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for b in 0..p.len() {
                    let flow = z.prob_mask(a) * p[a][b] - z.prob_mask(b) * p[b][a];
                    assert!(flow.abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn engines_follow_the_same_trajectory() {
        let w = LatticeWindow::from_extents(&[(0, 5), (0, 1), (0, 1), (0, 0), (0, 0)]).unwrap();
        let run = |backend, use_brackets| {
            let opts = GibbsOptions {
                backend,
                refresh: 3,
                use_brackets,
            };
            let mut c = GibbsChain::new(w.clone(), 0.8, 17, opts).unwrap();
            let mut trail = Vec::new();
            for _ in 0..40 {
                c.sweep().unwrap();
                trail.push(c.configuration());
            }
            (trail, c.stats())
        };
        let (dense, ds) = run(ChainBackend::Dense, true);
        let (banded, _) = run(ChainBackend::Banded, true);
        let (plain, ps) = run(ChainBackend::Dense, false);
        assert_eq!(dense, banded);
        assert_eq!(dense, plain);
        assert!(ds.variance_queries < ps.variance_queries);
        assert!(ds.max_drift <= 1e-8);
    }

    #[test]
    fn maintained_state_matches_fresh_solves() {
        let w = LatticeWindow::from_extents(&[(0, 6), (0, 2), (0, 1), (0, 0), (0, 0)]).unwrap();
        for backend in [ChainBackend::Dense, ChainBackend::Banded] {
            let opts = GibbsOptions {
                backend,
                refresh: 0,
                use_brackets: true,
            };
            let mut c = GibbsChain::new(w.clone(), 1.0, 3, opts).unwrap();
            c.sweep().unwrap();
            assert!(c.stats().flips > 0);
            assert!(c.drift().unwrap() <= 1e-8);
            let a = c.configuration();
            let region = a.free_region();
            for k in 0..w.len() {
                let mut mask = a.mask().to_vec();
                mask[k] = false;
                let r = FreeRegion::from_mask(w.clone(), mask).unwrap();
                let g = green_dense(&r, 100).unwrap().get(&w.site(k), &w.site(k));
                assert!((c.conditional_variance(k).unwrap() - g).abs() < 1e-10);
            }
            let src = region.free_sites().next().unwrap();
            let col = c.green_column(&src).unwrap();
            let fresh = green_dense(&region, 100).unwrap().column(&src).unwrap();
            for (x, y) in col.values().iter().zip(fresh.values()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_site_frequency() {
        let w = segment(1);
        let mut c = GibbsChain::new(w, 1.0, 11, GibbsOptions::default()).unwrap();
        let n = 200_000;
        let mut hits = 0;
        for _ in 0..n {
            c.sweep().unwrap();
            hits += usize::from(c.pinned_mask()[0]);
        }
        let f = hits as f64 / n as f64;
        let p = 0.294_985;
        // Heat bath on one site gives independent draws.
        assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn vanishing_eps_never_pins() {
        let mut c = GibbsChain::new(segment(3), 1e-300, 1, GibbsOptions::default()).unwrap();
        for _ in 0..200 {
            c.sweep().unwrap();
            assert_eq!(c.configuration().count(), 0);
        }
    }

    #[test]
    fn chain_visits_states_with_enumerated_frequencies() {
        let w = segment(4);
        let z = zeta_exact(&w, 1.0).unwrap();
        let samples = gibbs_sample(&w, 1.0, 20_000, 100, 1, 5, GibbsOptions::default()).unwrap();
        let mut counts = vec![0u64; 16];
        for s in &samples {
            counts[mask_of(&s.config)] += 1;
        }
        assert!(z.total_variation(&counts) < 0.03);
        assert_eq!(samples.last().unwrap().sweep, 20_100);
    }
}
