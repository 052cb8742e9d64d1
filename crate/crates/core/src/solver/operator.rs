use crate::error::{Error, Result};
use crate::lattice::bilaplacian_stencil;
use crate::linalg::{CsrMatrix, SymBandMatrix};

use super::region::FreeRegion;

/// `Δ²` restricted to the free sites of a region, rows and columns in free
/// order.
#[derive(Clone, Debug)]
pub struct PrecisionOperator {
    matrix: CsrMatrix,
    bandwidth: usize,
}

/// Assembles `Δ²_F`. Entries coupling to pinned or exterior sites are dropped,
/// which imposes the zero boundary condition there.
pub fn assemble(region: &FreeRegion) -> Result<PrecisionOperator> {
    if region.free_count() == 0 {
        return Err(Error::EmptyFreeRegion);
    }
    let w = region.window();
    let stencil = bilaplacian_stencil(w.dim());
    let rows: Vec<Vec<(usize, f64)>> = region
        .free_indices()
        .iter()
        .map(|&i| {
            stencil
                .iter()
                .filter_map(|s| {
                    let j = w.offset_index(i, &s.offset)?;
                    region.free_position(j).map(|p| (p, s.coefficient))
                })
                .collect()
        })
        .collect();
    let matrix = CsrMatrix::from_rows(rows);
    let bandwidth = matrix.bandwidth();
    Ok(PrecisionOperator { matrix, bandwidth })
}

impl PrecisionOperator {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn to_band(&self) -> SymBandMatrix {
        let mut band = SymBandMatrix::zeros(self.n(), self.bandwidth);
        for i in 0..self.n() {
            for (j, v) in self.matrix.row(i) {
                if j <= i {
                    band.set(i, j, v);
                }
            }
        }
        band
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeWindow, Site};

    #[test]
    fn single_and_two_site_blocks_in_five_dimensions() {
        let w = LatticeWindow::cube(5, 1).unwrap();
        let o = Site::origin(5);
        let one = assemble(&FreeRegion::with_free(w.clone(), [o.clone()].iter()).unwrap()).unwrap();
        assert_eq!(one.to_dense(), vec![vec![1.1]]);
        let e = Site::on_axis(5, 2, 1);
        let two = assemble(&FreeRegion::with_free(w, [o, e].iter()).unwrap()).unwrap();
        assert_eq!(two.to_dense(), vec![vec![1.1, -0.2], vec![-0.2, 1.1]]);
    }

    #[test]
    fn symmetric_with_bounded_row_support() {
        for dim in 1..=4 {
            let w = LatticeWindow::cube(dim, 2).unwrap();
            let mask: Vec<bool> = (0..w.len()).map(|i| i % 7 == 3).collect();
            let op = assemble(&FreeRegion::from_mask(w.clone(), mask).unwrap()).unwrap();
            assert_eq!(op.csr().max_asymmetry(), 0.0);
            let diag = (2 * dim + 1) as f64 / (2 * dim) as f64;
            for i in 0..op.n() {
                assert_eq!(op.get(i, i), diag);
                assert!(op.csr().row(i).count() <= 1 + 2 * dim + 2 * dim * dim);
            }
            assert!(op.bandwidth() <= w.index_bandwidth(2));
            let band = op.to_band();
            for i in 0..op.n() {
                for j in 0..op.n() {
                    assert_eq!(band.get(i, j), op.get(i, j));
                }
            }
        }
    }

    #[test]
    fn empty_region_is_rejected() {
        let w = LatticeWindow::cube(2, 1).unwrap();
        let n = w.len();
        let r = FreeRegion::from_mask(w, vec![true; n]).unwrap();
        assert!(matches!(assemble(&r), Err(Error::EmptyFreeRegion)));
    }
}
