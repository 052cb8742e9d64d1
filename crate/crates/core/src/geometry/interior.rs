use crate::lattice::{Direction, LatticeWindow, Site};
use crate::pinning::PinConfiguration;

use super::sets::{bfs_from, SiteSet};

/// Interior points `Â = {x ∈ A : x ± e ∈ A for all e}` together with the
/// graph distance `d(·, Â)`.
///
/// With `exterior_pinned` every site outside the window counts as pinned, so
/// `Â` also contains all sites at distance at least 2 from the window.
#[derive(Clone, Debug)]
pub struct InteriorSet {
    window: LatticeWindow,
    padded: LatticeWindow,
    exterior_pinned: bool,
    member: Vec<bool>,
    dist: Vec<u32>,
    window_sites: Vec<usize>,
}

pub fn interior_points(a: &PinConfiguration, exterior_pinned: bool) -> InteriorSet {
    let window = a.window().clone();
    let padded = window.enlarged(2);
    let dim = window.dim();
    let mut c = vec![0i64; dim];
    let pinned = |c: &[i64]| match window.index_of_coords(c) {
        Some(i) => a.is_pinned(i),
        None => exterior_pinned,
    };
    let dirs = Direction::all(dim);
    let mut member = vec![false; padded.len()];
    for (i, m) in member.iter_mut().enumerate() {
        padded.coords_into(i, &mut c);
        if !pinned(&c) {
            continue;
        }
        *m = dirs.iter().all(|e| {
            c[e.axis] += e.sign();
            let p = pinned(&c);
            c[e.axis] -= e.sign();
            p
        });
    }
    let dist = bfs_from(&padded, (0..padded.len()).filter(|&i| member[i]));
    let window_sites = window.embedding_into(&padded).expect("padding contains the window");
    InteriorSet {
        window,
        padded,
        exterior_pinned,
        member,
        dist,
        window_sites,
    }
}

impl InteriorSet {
    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn exterior_pinned(&self) -> bool {
        self.exterior_pinned
    }

    /// Whether `Â` is empty in all of `Z^d`.
    pub fn is_empty(&self) -> bool {
        !self.exterior_pinned && !self.member.iter().any(|&b| b)
    }

    pub fn contains(&self, x: &Site) -> bool {
        match self.padded.index_of(x) {
            Some(i) => self.member[i],
            None => self.exterior_pinned,
        }
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.member[self.window_sites[idx]]
    }

    /// `Â ∩ W`.
    pub fn in_window(&self) -> SiteSet {
        let mask = self.window_sites.iter().map(|&j| self.member[j]).collect();
        SiteSet::from_mask(self.window.clone(), mask).expect("mask matches the window")
    }

    /// `d(x, Â)`; `None` when `Â = ∅`.
    pub fn distance(&self, x: &Site) -> Option<u64> {
        self.distance_coords(x.coords())
    }

    pub fn distance_coords(&self, c: &[i64]) -> Option<u64> {
        if let Some(i) = self.padded.index_of_coords(c) {
            let d = self.dist[i];
            return (d != u32::MAX).then_some(u64::from(d));
        }
        if self.exterior_pinned {
            return Some(0);
        }
        let mut y = vec![0i64; c.len()];
        (0..self.padded.len())
            .filter(|&i| self.member[i])
            .map(|i| {
                self.padded.coords_into(i, &mut y);
                c.iter().zip(&y).map(|(a, b)| a.abs_diff(*b)).sum::<u64>()
            })
            .min()
    }

    pub fn distance_index(&self, idx: usize) -> Option<u64> {
        let d = self.dist[self.window_sites[idx]];
        (d != u32::MAX).then_some(u64::from(d))
    }

    /// `q_A(x) = 1/(1+d(x,Â)^{2d+3})`, and 0 when `Â = ∅`.
    pub fn weight(&self, x: &Site) -> f64 {
        site_weight(self.distance(x), self.window.dim())
    }

    pub fn weights(&self) -> WeightField {
        let dim = self.window.dim();
        let values = (0..self.window.len())
            .map(|i| site_weight(self.distance_index(i), dim))
            .collect();
        WeightField {
            window: self.window.clone(),
            values,
            empty_interior: self.is_empty(),
        }
    }
}

/// `1/(1+r^{power})`, with `r = ∞` (no interior points) mapped to 0.
pub fn distance_weight(distance: Option<u64>, power: i32) -> f64 {
    match distance {
        Some(r) => 1.0 / (1.0 + (r as f64).powi(power)),
        None => 0.0,
    }
}

pub fn site_weight(distance: Option<u64>, dim: usize) -> f64 {
    distance_weight(distance, 2 * dim as i32 + 3)
}

/// Per-site path weights `q_A` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    window: LatticeWindow,
    values: Vec<f64>,
    empty_interior: bool,
}

impl WeightField {
    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Set when `Â = ∅`, in which case every weight is 0.
    pub fn empty_interior(&self) -> bool {
        self.empty_interior
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::neighbors;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w2(half: i64) -> LatticeWindow {
        LatticeWindow::cube(2, half).unwrap()
    }

    #[test]
    fn definition_examples() {
        let w = w2(3);
        let o = Site::origin(2);
        let single = PinConfiguration::from_sites(w.clone(), [&o]).unwrap();
        assert!(interior_points(&single, false).is_empty());
        let mut star = vec![o.clone()];
        star.extend(neighbors(&o));
        let star = PinConfiguration::from_sites(w.clone(), &star).unwrap();
        let i = interior_points(&star, false);
        assert_eq!(i.in_window().sites().collect::<Vec<_>>(), vec![o.clone()]);
        let full = interior_points(&PinConfiguration::full(w.clone()), true);
        assert_eq!(full.in_window().count(), w.len());
        let without = interior_points(&PinConfiguration::full(w.clone()), false);
        assert_eq!(without.in_window().count(), 25);
    }

    #[test]
    fn weight_values() {
        assert_eq!(site_weight(Some(0), 5), 1.0);
        assert_eq!(site_weight(Some(1), 5), 0.5);
        assert!((site_weight(Some(2), 5) - 1.0 / 8193.0).abs() < 1e-18);
        assert!((site_weight(Some(2), 5) - 1.22055e-4).abs() < 1e-9);
        assert_eq!(site_weight(None, 5), 0.0);
    }

    #[test]
    fn exterior_interior_points() {
        let w = w2(2);
        let i = interior_points(&PinConfiguration::empty(w.clone()), true);
        assert!(!i.is_empty());
        assert!(!i.contains(&Site::new(vec![3, 0])));
        assert!(i.contains(&Site::new(vec![4, 0])));
        assert!(i.contains(&Site::new(vec![40, 7])));
        assert_eq!(i.distance(&Site::origin(2)), Some(4));
        assert_eq!(i.distance(&Site::new(vec![3, 0])), Some(1));
        assert_eq!(i.distance(&Site::new(vec![9, 9])), Some(0));
        let none = interior_points(&PinConfiguration::empty(w), false);
        assert_eq!(none.distance(&Site::origin(2)), None);
        assert!(none.weights().values().iter().all(|&q| q == 0.0));
    }

    #[test]
    fn distance_matches_direct_minimum() {
        let w = w2(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for flag in [false, true] {
            let a = PinConfiguration::bernoulli(w.clone(), 0.7, &mut rng);
            let i = interior_points(&a, flag);
            let big = w.enlarged(6);
            let members: Vec<Site> = big.sites().filter(|s| i.contains(s)).collect();
            for x in w.enlarged(3).sites() {
                let direct = members
                    .iter()
                    .map(|y| x.coords().iter().zip(y.coords()).map(|(a, b)| a.abs_diff(*b)).sum::<u64>())
                    .min();
                assert_eq!(i.distance(&x), direct, "{x} flag {flag}");
            }
        }
    }

    #[test]
    fn weights_are_monotone_in_the_pinned_set() {
        let w = w2(5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let small = PinConfiguration::bernoulli(w.clone(), 0.5, &mut rng);
            let mut big = small.clone();
            for i in 0..w.len() {
                if rand::Rng::random::<f64>(&mut rng) < 0.3 {
                    big.set(i, true);
                }
            }
            for flag in [false, true] {
                let (qs, qb) = (interior_points(&small, flag).weights(), interior_points(&big, flag).weights());
                assert!(qs.values().iter().zip(qb.values()).all(|(a, b)| a <= b));
                let is = interior_points(&small, flag).in_window();
                assert!(is.is_subset_of(&interior_points(&big, flag).in_window()));
                assert!(is.sites().all(|x| small.contains(&x)));
            }
        }
    }
}
