use std::fmt;

use crate::error::{Error, Result};

/// A point of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    /// The site `r·e_axis`.
    pub fn on_axis(dim: usize, axis: usize, r: i64) -> Self {
        let mut c = vec![0; dim];
        c[axis] = r;
        Site(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn step(&self, dir: Direction) -> Site {
        let mut c = self.0.clone();
        c[dir.axis] += dir.sign();
        Site(c)
    }

    pub fn offset(&self, delta: &[i64]) -> Site {
        Site(self.0.iter().zip(delta).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// One of the `2d` unit vectors of `Z^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub axis: usize,
    pub positive: bool,
}

impl Direction {
    pub fn new(axis: usize, positive: bool) -> Self {
        Direction { axis, positive }
    }

    /// All `2d` directions, ordered `+e_0, -e_0, +e_1, -e_1, ...`.
    pub fn all(dim: usize) -> Vec<Direction> {
        (0..dim)
            .flat_map(|axis| [Direction::new(axis, true), Direction::new(axis, false)])
            .collect()
    }

    pub fn sign(self) -> i64 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn negated(self) -> Direction {
        Direction::new(self.axis, !self.positive)
    }

    pub fn as_offset(self, dim: usize) -> Vec<i64> {
        let mut v = vec![0; dim];
        v[self.axis] = self.sign();
        v
    }
}

pub fn neighbors(x: &Site) -> Vec<Site> {
    Direction::all(x.dim()).into_iter().map(|e| x.step(e)).collect()
}

/// The `l1` distance between two sites.
pub fn graph_distance(x: &Site, y: &Site) -> Result<u64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(x.0.iter().zip(&y.0).map(|(a, b)| a.abs_diff(*b)).sum())
}

/// A finite axis-aligned box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]` in `Z^d`.
///
/// Sites are indexed with the last axis varying fastest, so axis 0 is the
/// slowest axis. Elongated windows should put the long axis first to keep
/// assembled operators narrowly banded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeWindow {
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<usize>,
    count: usize,
}

impl LatticeWindow {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidWindow("dimension must be at least 1".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if let Some(axis) = (0..lo.len()).find(|&i| hi[i] < lo[i]) {
            return Err(Error::InvalidWindow(format!(
                "empty extent on axis {axis}: [{}, {}]",
                lo[axis], hi[axis]
            )));
        }
        let dim = lo.len();
        let mut strides = vec![0usize; dim];
        let mut count = 1usize;
        for axis in (0..dim).rev() {
            strides[axis] = count;
            let len = (hi[axis] - lo[axis] + 1) as usize;
            count = count
                .checked_mul(len)
                .ok_or_else(|| Error::InvalidWindow("site count overflows".into()))?;
        }
        Ok(LatticeWindow {
            lo,
            hi,
            strides,
            count,
        })
    }

    pub fn from_extents(extents: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            extents.iter().map(|e| e.0).collect(),
            extents.iter().map(|e| e.1).collect(),
        )
    }

    /// The cube `[-half, half]^d`.
    pub fn cube(dim: usize, half: i64) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn extents(&self) -> Vec<(i64, i64)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.dim() && self.contains_coords(&x.0)
    }

    pub fn contains_coords(&self, c: &[i64]) -> bool {
        c.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if x.dim() != self.dim() {
            return None;
        }
        self.index_of_coords(&x.0)
    }

    pub fn index_of_coords(&self, c: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for axis in 0..self.dim() {
            let v = c[axis];
            if v < self.lo[axis] || v > self.hi[axis] {
                return None;
            }
            idx += (v - self.lo[axis]) as usize * self.strides[axis];
        }
        Some(idx)
    }

    pub fn coord(&self, idx: usize, axis: usize) -> i64 {
        ((idx / self.strides[axis]) % self.side(axis)) as i64 + self.lo[axis]
    }

    pub fn coords_into(&self, idx: usize, out: &mut [i64]) {
        for (axis, slot) in out.iter_mut().enumerate().take(self.dim()) {
            *slot = self.coord(idx, axis);
        }
    }

    pub fn site(&self, idx: usize) -> Site {
        let mut c = vec![0; self.dim()];
        self.coords_into(idx, &mut c);
        Site(c)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.count).map(move |i| self.site(i))
    }

    /// Index of `idx + delta`, if it stays in the window.
    pub fn offset_index(&self, idx: usize, delta: &[i64]) -> Option<usize> {
        let mut out = idx as i64;
        for (axis, &dv) in delta.iter().enumerate() {
            if dv == 0 {
                continue;
            }
            let v = self.coord(idx, axis) + dv;
            if v < self.lo[axis] || v > self.hi[axis] {
                return None;
            }
            out += dv * self.strides[axis] as i64;
        }
        Some(out as usize)
    }

    pub fn neighbor_index(&self, idx: usize, dir: Direction) -> Option<usize> {
        let v = self.coord(idx, dir.axis) + dir.sign();
        if v < self.lo[dir.axis] || v > self.hi[dir.axis] {
            return None;
        }
        Some(if dir.positive {
            idx + self.strides[dir.axis]
        } else {
            idx - self.strides[dir.axis]
        })
    }

    /// True if some lattice neighbor of the site lies outside the window.
    pub fn on_boundary(&self, idx: usize) -> bool {
        (0..self.dim()).any(|axis| {
            let v = self.coord(idx, axis);
            v == self.lo[axis] || v == self.hi[axis]
        })
    }

    pub fn enlarged(&self, r: i64) -> LatticeWindow {
        LatticeWindow::new(
            self.lo.iter().map(|v| v - r).collect(),
            self.hi.iter().map(|v| v + r).collect(),
        )
        .expect("enlarging a valid window keeps it valid")
    }

    /// Index map from this window into a window that contains it.
    pub fn embedding_into(&self, outer: &LatticeWindow) -> Option<Vec<usize>> {
        let mut c = vec![0; self.dim()];
        (0..self.count)
            .map(|i| {
                self.coords_into(i, &mut c);
                outer.index_of_coords(&c)
            })
            .collect()
    }

    /// Largest index distance between two sites joined by an offset with
    /// per-axis magnitudes bounded by `reach` and l1 norm at most `reach`.
    pub fn index_bandwidth(&self, reach: usize) -> usize {
        // Spend the l1 budget on the largest strides first.
        let mut axes: Vec<usize> = (0..self.dim()).collect();
        axes.sort_by_key(|&a| std::cmp::Reverse(self.strides[a]));
        let mut budget = reach;
        let mut total = 0;
        for a in axes {
            let k = budget.min(self.side(a) - 1);
            total += k * self.strides[a];
            budget -= k;
        }
        total
    }
}
