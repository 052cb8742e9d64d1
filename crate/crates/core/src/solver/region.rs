use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::{LatticeWindow, Site};

/// A window `W` together with a zero set `A ⊆ W`; the free sites are
/// `F = W \ A`, numbered in window order.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeRegion {
    window: LatticeWindow,
    pinned: Vec<bool>,
    free: Vec<usize>,
    free_pos: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl FreeRegion {
    pub fn from_mask(window: LatticeWindow, pinned: Vec<bool>) -> Result<Self> {
        if pinned.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries for a window of {} sites",
                pinned.len(),
                window.len()
            )));
        }
        let mut free = Vec::new();
        let mut free_pos = vec![NONE; window.len()];
        for (i, &p) in pinned.iter().enumerate() {
            if !p {
                free_pos[i] = free.len();
                free.push(i);
            }
        }
        Ok(FreeRegion {
            window,
            pinned,
            free,
            free_pos,
        })
    }

    pub fn all_free(window: LatticeWindow) -> Self {
        let n = window.len();
        Self::from_mask(window, vec![false; n]).expect("mask length matches")
    }

    /// Pins the given sites; every one must lie in the window.
    pub fn with_pinned<'a>(window: LatticeWindow, pinned: impl IntoIterator<Item = &'a Site>) -> Result<Self> {
        let mut mask = vec![false; window.len()];
        for s in pinned {
            let i = window
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument(format!("pinned site {s} is outside the window")))?;
            mask[i] = true;
        }
        Self::from_mask(window, mask)
    }

    /// Only the given sites are free.
    pub fn with_free<'a>(window: LatticeWindow, free: impl IntoIterator<Item = &'a Site>) -> Result<Self> {
        let mut mask = vec![true; window.len()];
        for s in free {
            let i = window
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument(format!("free site {s} is outside the window")))?;
            mask[i] = false;
        }
        Self::from_mask(window, mask)
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn pinned_mask(&self) -> &[bool] {
        &self.pinned
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn pinned_count(&self) -> usize {
        self.window.len() - self.free.len()
    }

    /// Window indices of the free sites, in increasing order.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Position among the free sites of window index `idx`.
    pub fn free_position(&self, idx: usize) -> Option<usize> {
        match self.free_pos.get(idx) {
            Some(&p) if p != NONE => Some(p),
            _ => None,
        }
    }

    pub fn free_position_of(&self, x: &Site) -> Option<usize> {
        self.window.index_of(x).and_then(|i| self.free_position(i))
    }

    pub fn is_free(&self, x: &Site) -> bool {
        self.free_position_of(x).is_some()
    }

    /// Position of `x`, or [`Error::NotFree`] if it is pinned or outside.
    pub fn require_free(&self, x: &Site) -> Result<usize> {
        self.free_position_of(x).ok_or_else(|| Error::NotFree(x.to_string()))
    }

    pub fn free_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.free.iter().map(move |&i| self.window.site(i))
    }

    pub fn pinned_sites(&self) -> BTreeSet<Site> {
        (0..self.window.len())
            .filter(|&i| self.pinned[i])
            .map(|i| self.window.site(i))
            .collect()
    }

    /// True if every free site of `self` is free in `other` (same window).
    pub fn is_subregion_of(&self, other: &FreeRegion) -> bool {
        self.window == other.window && self.free.iter().all(|&i| !other.pinned[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_and_pinned_partition_the_window() {
        let w = LatticeWindow::cube(2, 1).unwrap();
        let pins = [Site::new(vec![0, 0]), Site::new(vec![1, -1])];
        let r = FreeRegion::with_pinned(w.clone(), pins.iter()).unwrap();
        assert_eq!(r.free_count() + r.pinned_count(), w.len());
        assert_eq!(r.pinned_sites().len(), 2);
        for (k, &i) in r.free_indices().iter().enumerate() {
            assert_eq!(r.free_position(i), Some(k));
        }
        assert!(!r.is_free(&pins[0]));
        assert!(r.require_free(&pins[1]).is_err());
        assert!(r.is_subregion_of(&FreeRegion::all_free(w)));
    }

    #[test]
    fn rejects_outside_sites() {
        let w = LatticeWindow::cube(1, 2).unwrap();
        assert!(FreeRegion::with_pinned(w.clone(), [Site::new(vec![3])].iter()).is_err());
        assert!(FreeRegion::with_free(w, [Site::new(vec![-3])].iter()).is_err());
    }
}
