use crate::error::{Error, Result};
use crate::geometry::interior_points;
use crate::lattice::LatticeWindow;
use crate::pinning::PinConfiguration;

/// Blocks of side `M` tiling a window from its low corner; a remainder
/// thinner than `M` along any axis is left uncovered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    window: LatticeWindow,
    m: u64,
    counts: Vec<usize>,
}

impl BlockGrid {
    pub fn new(window: LatticeWindow, m: u64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidArgument(format!("block side must be at least 3, got {m}")));
        }
        let counts: Vec<usize> = (0..window.dim()).map(|a| window.side(a) / m as usize).collect();
        if counts.contains(&0) {
            return Err(Error::InvalidWindow(format!("window is smaller than one block of side {m}")));
        }
        Ok(BlockGrid { window, m, counts })
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn block_side(&self) -> u64 {
        self.m
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, mut b: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let j = b % c;
                b /= c;
                j
            })
            .collect()
    }

    /// The block `B_b`.
    pub fn block(&self, b: usize) -> LatticeWindow {
        self.shrunk(b, 0)
    }

    /// The inner box `B_b^0`, one site thinner on every side.
    pub fn inner(&self, b: usize) -> LatticeWindow {
        self.shrunk(b, 1)
    }

    fn shrunk(&self, b: usize, margin: i64) -> LatticeWindow {
        let j = self.multi_index(b);
        let m = self.m as i64;
        let lo: Vec<i64> = (0..j.len()).map(|a| self.window.lo()[a] + j[a] as i64 * m + margin).collect();
        let hi: Vec<i64> = lo.iter().map(|l| l + m - 1 - 2 * margin).collect();
        LatticeWindow::new(lo, hi).expect("blocks of side ≥ 3 are nonempty")
    }
}

/// `η(b) = 1` iff `B_b^0 ∩ Â ≠ ∅`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndicatorField {
    grid: BlockGrid,
    bits: Vec<bool>,
}

pub fn block_indicators(a: &PinConfiguration, m: u64, exterior_pinned: bool) -> Result<BlockIndicatorField> {
    let grid = BlockGrid::new(a.window().clone(), m)?;
    let interior = interior_points(a, exterior_pinned);
    let bits = (0..grid.len())
        .map(|b| grid.inner(b).sites().any(|x| interior.contains(&x)))
        .collect();
    Ok(BlockIndicatorField { grid, bits })
}

impl BlockIndicatorField {
    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, b: usize) -> bool {
        self.bits[b]
    }

    pub fn mean(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::inner_box_empty_bound;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_geometry() {
        let w = LatticeWindow::from_extents(&[(1, 10), (1, 7)]).unwrap();
        let g = BlockGrid::new(w, 3).unwrap();
        assert_eq!(g.counts(), &[3, 2]);
        assert_eq!(g.block(0).lo(), &[1, 1]);
        assert_eq!(g.block(4).lo(), &[4, 4]);
        assert_eq!(g.inner(4).len(), 1);
        assert_eq!(g.inner(4).lo(), &[5, 5]);
        assert!(BlockGrid::new(LatticeWindow::cube(2, 1).unwrap(), 4).is_err());
        assert!(BlockGrid::new(LatticeWindow::cube(2, 5).unwrap(), 2).is_err());
    }

    #[test]
    fn trivial_environments() {
        let w = LatticeWindow::cube(2, 7).unwrap();
        assert!(block_indicators(&PinConfiguration::empty(w.clone()), 5, false).unwrap().bits().iter().all(|b| !b));
        assert!(block_indicators(&PinConfiguration::full(w), 5, true).unwrap().bits().iter().all(|&b| b));
    }

    #[test]
    fn single_site_inner_boxes_match_p_to_the_five() {
        let w = LatticeWindow::from_extents(&[(0, 299), (0, 299)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (p, mut ones, mut total) = (0.6, 0usize, 0usize);
        for _ in 0..4 {
            let a = PinConfiguration::bernoulli(w.clone(), p, &mut rng);
            let f = block_indicators(&a, 3, false).unwrap();
            ones += f.bits().iter().filter(|&&b| b).count();
            total += f.bits().len();
        }
        let want = p.powi(5);
        let sd = (want * (1.0 - want) / total as f64).sqrt();
        assert!((ones as f64 / total as f64 - want).abs() <= 4.0 * sd);
    }

    #[test]
    fn indicators_respect_the_box_bound_and_decorrelate() {
        let (m, p, reps) = (8u64, 0.5, 400usize);
        let w = LatticeWindow::from_extents(&[(0, 8 * 6 - 1), (0, 8 * 6 - 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut zeros = 0usize;
        let mut total = 0usize;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for _ in 0..reps {
            let a = PinConfiguration::bernoulli(w.clone(), p, &mut rng);
            let f = block_indicators(&a, m, false).unwrap();
            zeros += f.bits().iter().filter(|&&b| !b).count();
            total += f.bits().len();
            x.push(f64::from(u8::from(f.get(0))));
            y.push(f64::from(u8::from(f.get(1))));
        }
        let q = zeros as f64 / total as f64;
        let se = (q * (1.0 - q) / total as f64).sqrt();
        assert!(q <= inner_box_empty_bound(m, p, 2).unwrap() + 4.0 * se);
        let mx = x.iter().sum::<f64>() / reps as f64;
        let my = y.iter().sum::<f64>() / reps as f64;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / reps as f64;
        let sx = (mx * (1.0 - mx)).sqrt();
        let sy = (my * (1.0 - my)).sqrt();
        if sx > 0.0 && sy > 0.0 {
            assert!((cov / (sx * sy)).abs() <= 4.0 / (reps as f64).sqrt());
        }
    }
}
