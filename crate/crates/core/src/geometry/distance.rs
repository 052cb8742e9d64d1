use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::lattice::{Direction, LatticeWindow, Site};

use super::interior::WeightField;

/// `d̂_A` from a source (or a set of sources) to every window site, over
/// paths that stay inside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    window: LatticeWindow,
    sources: Vec<usize>,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn at(&self, x: &Site) -> Option<f64> {
        self.window.index_of(x).map(|i| self.values[i])
    }
}

/// `d̂_A(source, ·)`: the least total vertex weight `Σ_{i=0..n} q(x_i)` over
/// paths from the source, with `d̂(source, source) = 0`.
pub fn weighted_distance(source: &Site, weights: &WeightField) -> Result<DistanceField> {
    let s = weights
        .window()
        .index_of(source)
        .ok_or_else(|| Error::InvalidArgument(format!("source {source} is outside the window")))?;
    Ok(weighted_distance_from(&[s], weights))
}

/// `min_{s ∈ S} d̂_A(s, ·)` for window indices `S`; zero on `S` and infinite
/// everywhere when `S` is empty.
pub fn weighted_distance_from(sources: &[usize], weights: &WeightField) -> DistanceField {
    let window = weights.window();
    let q = weights.values();
    let mut dist = vec![f64::INFINITY; window.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if q[s] < dist[s] {
            dist[s] = q[s];
            heap.push(Reverse((OrderedFloat(q[s]), s)));
        }
    }
    let dirs = Direction::all(window.dim());
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &e in &dirs {
            if let Some(v) = window.neighbor_index(u, e) {
                let nd = d + q[v];
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrderedFloat(nd), v)));
                }
            }
        }
    }
    for &s in sources {
        dist[s] = 0.0;
    }
    DistanceField {
        window: window.clone(),
        sources: sources.to_vec(),
        values: dist,
    }
}

/// Exhaustive minimum over simple paths; exponential cost, a test oracle for
/// windows of at most 25 sites.
pub fn brute_force_distance(source: &Site, weights: &WeightField) -> Result<Vec<f64>> {
    let window = weights.window();
    if window.len() > 25 {
        return Err(Error::SizeLimit {
            what: "window for path enumeration",
            size: window.len(),
            limit: 25,
        });
    }
    let s = window
        .index_of(source)
        .ok_or_else(|| Error::InvalidArgument(format!("source {source} is outside the window")))?;
    let mut best = vec![f64::INFINITY; window.len()];
    let mut on_path = vec![false; window.len()];
    let dirs = Direction::all(window.dim());
    let q = weights.values();
    // Prefixes of optimal paths are optimal, so a strictly costlier arrival
    // can be pruned.
    fn walk(u: usize, cost: f64, w: &LatticeWindow, q: &[f64], dirs: &[Direction], best: &mut [f64], on: &mut [bool]) {
        if cost > best[u] {
            return;
        }
        best[u] = cost;
        on[u] = true;
        for &e in dirs {
            if let Some(v) = w.neighbor_index(u, e) {
                if !on[v] {
                    walk(v, cost + q[v], w, q, dirs, best, on);
                }
            }
        }
        on[u] = false;
    }
    walk(s, q[s], window, q, &dirs, &mut best, &mut on_path);
    best[s] = 0.0;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::interior::interior_points;
    use crate::pinning::PinConfiguration;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_pinned_segment() {
        let w = LatticeWindow::cube(1, 6).unwrap();
        let i = interior_points(&PinConfiguration::full(w.clone()), true);
        let d = weighted_distance(&Site::origin(1), &i.weights()).unwrap();
        for x in w.sites() {
            let r = x.coords()[0].unsigned_abs() as f64;
            let want = if r == 0.0 { 0.0 } else { r + 1.0 };
            assert_eq!(d.at(&x), Some(want));
        }
    }

    #[test]
    fn empty_interior_gives_zero() {
        let w = LatticeWindow::cube(2, 3).unwrap();
        let i = interior_points(&PinConfiguration::empty(w), false);
        let d = weighted_distance(&Site::origin(2), &i.weights()).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn search_matches_enumeration() {
        let w = LatticeWindow::cube(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..6 {
            let a = PinConfiguration::bernoulli(w.clone(), rng.random_range(0.3..0.9), &mut rng);
            let q = interior_points(&a, true).weights();
            for s in w.sites() {
                let fast = weighted_distance(&s, &q).unwrap();
                let slow = brute_force_distance(&s, &q).unwrap();
                assert_eq!(fast.values(), &slow[..], "source {s}");
            }
        }
    }

    #[test]
    fn multi_source_is_the_pointwise_minimum() {
        let w = LatticeWindow::cube(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = PinConfiguration::bernoulli(w.clone(), 0.6, &mut rng);
        let q = interior_points(&a, true).weights();
        let srcs = [3usize, 40, 77];
        let multi = weighted_distance_from(&srcs, &q);
        let singles: Vec<DistanceField> = srcs.iter().map(|&s| weighted_distance_from(&[s], &q)).collect();
        for i in 0..w.len() {
            let m = singles.iter().map(|d| d.get(i)).fold(f64::INFINITY, f64::min);
            assert!((multi.get(i) - m).abs() <= 1e-15);
        }
        assert!(weighted_distance_from(&[], &q).values().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn triangle_and_graph_bounds() {
        let w = LatticeWindow::cube(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = PinConfiguration::bernoulli(w.clone(), 0.7, &mut rng);
        let q = interior_points(&a, true).weights();
        let all: Vec<DistanceField> = (0..w.len()).map(|s| weighted_distance_from(&[s], &q)).collect();
        for x in 0..w.len() {
            for y in 0..w.len() {
                let g = crate::lattice::graph_distance(&w.site(x), &w.site(y)).unwrap() as f64;
                assert!(all[x].get(y) <= g + 1.0);
                assert!((all[x].get(y) - all[y].get(x)).abs() <= 1e-12);
                for z in (0..w.len()).step_by(7) {
                    assert!(all[x].get(z) <= all[x].get(y) + all[y].get(z) + q.get(y) + 1e-12);
                }
            }
        }
    }
}
