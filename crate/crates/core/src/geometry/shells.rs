use crate::error::{Error, Result};
use crate::lattice::{Direction, LatticeWindow, Site};

use super::distance::{weighted_distance_from, DistanceField};
use super::interior::{site_weight, InteriorSet, WeightField};
use super::sets::{bfs_from, distance_to_exterior, SiteSet};

pub const DEFAULT_SHELL_STEP: f64 = 10.0;

/// Sublevel sets `C_n = {x : d̂(0,x) ≤ step·n}` of a single-source distance.
#[derive(Clone, Debug)]
pub struct ShellDecomposition {
    window: LatticeWindow,
    source: usize,
    step: f64,
    n_max: usize,
    distances: Vec<f64>,
    boundary_min: f64,
}

pub fn shells(distance: &DistanceField, step: f64, n_max: usize) -> Result<ShellDecomposition> {
    let &[source] = distance.sources() else {
        return Err(Error::InvalidArgument("shells need a single-source distance".into()));
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("shell step must be positive, got {step}")));
    }
    let w = distance.window();
    let boundary_min = (0..w.len())
        .filter(|&i| w.on_boundary(i))
        .map(|i| distance.get(i))
        .fold(f64::INFINITY, f64::min);
    Ok(ShellDecomposition {
        window: w.clone(),
        source,
        step,
        n_max,
        distances: distance.values().to_vec(),
        boundary_min,
    })
}

/// The step that leaves exactly `count` untruncated shells `C_1..C_count`:
/// `C_{count+1}` is the first to reach the window boundary.
pub fn auto_step(distance: &DistanceField, count: usize) -> Result<f64> {
    let w = distance.window();
    let b = (0..w.len())
        .filter(|&i| w.on_boundary(i))
        .map(|i| distance.get(i))
        .fold(f64::INFINITY, f64::min);
    if !(b > 0.0 && b.is_finite()) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "no positive step fits {count} shells below a boundary distance of {b}"
        )));
    }
    let k = count as f64 + 1.0;
    let mut step = b / k;
    while step * k < b {
        step = f64::from_bits(step.to_bits() + 1);
    }
    Ok(step)
}

impl ShellDecomposition {
    pub fn boundary_distance(&self) -> f64 {
        self.boundary_min
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn threshold(&self, n: usize) -> f64 {
        self.step * n as f64
    }

    pub fn contains(&self, n: usize, idx: usize) -> bool {
        self.distances[idx] <= self.threshold(n)
    }

    pub fn shell(&self, n: usize) -> SiteSet {
        let mask = (0..self.window.len()).map(|i| self.contains(n, i)).collect();
        SiteSet::from_mask(self.window.clone(), mask).expect("mask matches the window")
    }

    /// Whether `C_n` reaches the window boundary, so that it may differ from
    /// the infinite-volume shell.
    pub fn is_truncated(&self, n: usize) -> bool {
        self.boundary_min <= self.threshold(n)
    }

    /// Largest `n ≤ n_max` with `C_n` untruncated.
    pub fn last_untruncated(&self) -> Option<usize> {
        (0..=self.n_max).take_while(|&n| !self.is_truncated(n)).last()
    }

    /// `sup_{x ∈ C_n} d(0, x)`.
    pub fn radius(&self, n: usize) -> u64 {
        let s = self.window.site(self.source);
        (0..self.window.len())
            .filter(|&i| self.contains(n, i))
            .map(|i| l1(&self.window.site(i), &s))
            .max()
            .unwrap_or(0)
    }

    /// Every `sup_{x ∈ C_n} d(0, x)` for `n = 0..=n_max`, in one pass.
    pub fn radii(&self) -> Vec<u64> {
        let mut r = vec![0u64; self.n_max + 1];
        let s = self.window.site(self.source);
        for i in 0..self.window.len() {
            let d = self.distances[i];
            let first = (d / self.step).ceil();
            if first > self.n_max as f64 {
                continue;
            }
            let mut n = first as usize;
            // Guard the division against rounding at the threshold.
            while n > 0 && self.contains(n - 1, i) {
                n -= 1;
            }
            while !self.contains(n, i) {
                n += 1;
            }
            let g = l1(&self.window.site(i), &s);
            for v in r.iter_mut().skip(n) {
                *v = (*v).max(g);
            }
        }
        r
    }

    pub fn is_connected(&self, n: usize) -> bool {
        let shell = self.shell(n);
        let dirs = Direction::all(self.window.dim());
        let mut seen = vec![false; self.window.len()];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            for &e in &dirs {
                if let Some(v) = self.window.neighbor_index(u, e) {
                    if shell.mask()[v] && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        let connected = shell.indices().all(|i| seen[i]);
        connected
    }

    /// `υ₂(C_n) ∩ W`.
    pub fn inner_band(&self, n: usize) -> SiteSet {
        let d = bfs_from(&self.window, (0..self.window.len()).filter(|&i| self.contains(n, i)));
        let mask = d.iter().map(|&v| v <= 2).collect();
        SiteSet::from_mask(self.window.clone(), mask).expect("mask matches the window")
    }

    /// `υ₂(C_n^c) ∩ W`, where the complement includes `Z^d \ W`.
    pub fn outer_band(&self, n: usize) -> SiteSet {
        let d = bfs_from(&self.window, (0..self.window.len()).filter(|&i| !self.contains(n, i)));
        let mask = (0..self.window.len())
            .map(|i| d[i] <= 2 || distance_to_exterior(&self.window, i) <= 2)
            .collect();
        SiteSet::from_mask(self.window.clone(), mask).expect("mask matches the window")
    }
}

fn l1(a: &Site, b: &Site) -> u64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// Annuli `R_n = {Kn ≤ d(0,x) < K(n+1)}` as window indices, `n = 0, 1, …`
/// up to the farthest window site.
pub fn annuli(window: &LatticeWindow, origin: &Site, k: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("annulus width must be positive".into()));
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..window.len() {
        let n = (l1(&window.site(i), origin) / k) as usize;
        if out.len() <= n {
            out.resize(n + 1, Vec::new());
        }
        out[n].push(i);
    }
    Ok(out)
}

/// `η_n = f₁/(f₁+f₂)` with `f₁ = d̂(·, υ₂(C_n))` and `f₂ = d̂(·, υ₂(C_{n+1}^c))`;
/// equal to 1 outside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffFunction {
    n: usize,
    window: LatticeWindow,
    values: Vec<f64>,
    min_denominator: f64,
}

pub fn cutoff_eta(n: usize, shells: &ShellDecomposition, weights: &WeightField) -> Result<CutoffFunction> {
    if shells.is_truncated(n + 1) {
        return Err(Error::Truncated(format!("shell {} touches the window boundary", n + 1)));
    }
    if weights.window() != shells.window() {
        return Err(Error::InvalidArgument("weights and shells live on different windows".into()));
    }
    let inner: Vec<usize> = shells.inner_band(n).indices().collect();
    let outer: Vec<usize> = shells.outer_band(n + 1).indices().collect();
    let f1 = weighted_distance_from(&inner, weights);
    let f2 = weighted_distance_from(&outer, weights);
    let mut min_denominator = f64::INFINITY;
    let mut values = Vec::with_capacity(f1.values().len());
    for (i, (&a, &b)) in f1.values().iter().zip(f2.values()).enumerate() {
        let den = a + b;
        if den <= 0.0 {
            return Err(Error::ZeroDenominator(format!(
                "f₁ + f₂ vanishes at {}",
                shells.window().site(i)
            )));
        }
        min_denominator = min_denominator.min(den);
        values.push(a / den);
    }
    Ok(CutoffFunction {
        n,
        window: shells.window().clone(),
        values,
        min_denominator,
    })
}

impl CutoffFunction {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_denominator(&self) -> f64 {
        self.min_denominator
    }

    pub fn value_coords(&self, c: &[i64]) -> f64 {
        self.window.index_of_coords(c).map_or(1.0, |i| self.values[i])
    }

    pub fn value(&self, x: &Site) -> f64 {
        self.value_coords(x.coords())
    }

    /// `‖∇η(x)‖_∞ = max_e |η(x+e) − η(x)|`.
    pub fn gradient_sup(&self, x: &Site) -> f64 {
        let mut c = x.coords().to_vec();
        let here = self.value_coords(&c);
        let mut m: f64 = 0.0;
        for e in Direction::all(c.len()) {
            c[e.axis] += e.sign();
            m = m.max((self.value_coords(&c) - here).abs());
            c[e.axis] -= e.sign();
        }
        m
    }

    /// `sup_x ‖∇η(x)‖_∞·(1+d(x,Â)^{2d+3})` over window sites.
    pub fn gradient_ratio(&self, interior: &InteriorSet) -> f64 {
        let dim = self.window.dim();
        self.window
            .sites()
            .map(|x| ratio(self.gradient_sup(&x), site_weight(interior.distance(&x), dim)))
            .fold(0.0, f64::max)
    }

    /// `sup_{x,e} ‖∇η(x+e)‖_∞·(1+d(x,Â)^{2d+3})` over window sites `x`.
    pub fn shifted_gradient_ratio(&self, interior: &InteriorSet) -> f64 {
        let dim = self.window.dim();
        let dirs = Direction::all(dim);
        self.window
            .sites()
            .map(|x| {
                let g = dirs.iter().map(|&e| self.gradient_sup(&x.step(e))).fold(0.0, f64::max);
                ratio(g, site_weight(interior.distance(&x), dim))
            })
            .fold(0.0, f64::max)
    }
}

fn ratio(g: f64, q: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        g / q
    }
}
