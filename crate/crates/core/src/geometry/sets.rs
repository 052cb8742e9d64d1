use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{Direction, LatticeWindow, Site};

/// A finite set of sites, stored as a mask over a window that contains it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteSet {
    window: LatticeWindow,
    mask: Vec<bool>,
}

impl SiteSet {
    pub fn empty(window: LatticeWindow) -> Self {
        let n = window.len();
        SiteSet {
            window,
            mask: vec![false; n],
        }
    }

    pub fn full(window: LatticeWindow) -> Self {
        let n = window.len();
        SiteSet {
            window,
            mask: vec![true; n],
        }
    }

    pub fn from_mask(window: LatticeWindow, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries for a window of {} sites",
                mask.len(),
                window.len()
            )));
        }
        Ok(SiteSet { window, mask })
    }

    pub fn from_sites<'a>(window: LatticeWindow, sites: impl IntoIterator<Item = &'a Site>) -> Result<Self> {
        let mut s = Self::empty(window);
        for x in sites {
            let i = s
                .window
                .index_of(x)
                .ok_or_else(|| Error::InvalidArgument(format!("{x} is outside the window")))?;
            s.mask[i] = true;
        }
        Ok(s)
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.window.index_of(x).is_some_and(|i| self.mask[i])
    }

    pub fn contains_coords(&self, c: &[i64]) -> bool {
        self.window.index_of_coords(c).is_some_and(|i| self.mask[i])
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.indices().map(|i| self.window.site(i))
    }

    /// The same set on another window; members outside `target` are dropped.
    pub fn restricted_to(&self, target: &LatticeWindow) -> SiteSet {
        let mut c = vec![0; target.dim()];
        let mask = (0..target.len())
            .map(|i| {
                target.coords_into(i, &mut c);
                self.contains_coords(&c)
            })
            .collect();
        SiteSet {
            window: target.clone(),
            mask,
        }
    }

    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        self.sites().all(|x| other.contains(&x))
    }

    pub fn intersects(&self, other: &SiteSet) -> bool {
        self.sites().any(|x| other.contains(&x))
    }

    /// `υ_k(E) = {x : d(x, E) ≤ k}`, exact, on the window enlarged by `k`.
    pub fn enlarge(&self, k: u32) -> SiteSet {
        let big = self.window.enlarged(i64::from(k));
        let start = self.restricted_to(&big);
        let dist = bfs_from(&big, start.indices());
        let mask = dist.iter().map(|&d| d <= k).collect();
        SiteSet { window: big, mask }
    }
}

/// Multi-source graph distance inside `window`; `u32::MAX` where unreachable.
/// Inside a box this is the `ℓ¹` distance in `Z^d`.
pub(crate) fn bfs_from(window: &LatticeWindow, sources: impl IntoIterator<Item = usize>) -> Vec<u32> {
    let mut dist = vec![u32::MAX; window.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    let dirs = Direction::all(window.dim());
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &e in &dirs {
            if let Some(v) = window.neighbor_index(u, e) {
                if dist[v] == u32::MAX {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

/// Graph distance from window site `idx` to `Z^d \ W`.
pub(crate) fn distance_to_exterior(window: &LatticeWindow, idx: usize) -> u64 {
    (0..window.dim())
        .map(|a| {
            let v = window.coord(idx, a);
            (v - window.lo()[a] + 1).min(window.hi()[a] - v + 1) as u64
        })
        .min()
        .unwrap_or(0)
}

/// `υ_k` of a set of sites in `Z^d`.
pub fn enlarge(sites: &[Site], k: u32) -> Result<SiteSet> {
    let first = sites
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot enlarge an empty list without a window".into()))?;
    let dim = first.dim();
    if sites.iter().any(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: sites.iter().find(|s| s.dim() != dim).map_or(0, Site::dim),
        });
    }
    let lo = (0..dim).map(|a| sites.iter().map(|s| s.coords()[a]).min().unwrap_or(0)).collect();
    let hi = (0..dim).map(|a| sites.iter().map(|s| s.coords()[a]).max().unwrap_or(0)).collect();
    let w = LatticeWindow::new(lo, hi)?;
    Ok(SiteSet::from_sites(w, sites)?.enlarge(k))
}
