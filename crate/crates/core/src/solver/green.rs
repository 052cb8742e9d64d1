use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ScalarField, Site};
use crate::linalg::{conjugate_gradient, BandedCholesky, DenseMatrix};

use super::operator::{assemble, PrecisionOperator};
use super::region::FreeRegion;

/// Largest free region for which a full inverse is formed.
pub const DEFAULT_DENSE_LIMIT: usize = 6000;

/// Default relative residual for iterative solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// How Green columns are computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Backend {
    /// Full inverse, then column extraction.
    Dense,
    /// Banded Cholesky factor and a pair of triangular solves.
    Banded,
    /// Jacobi-preconditioned conjugate gradients.
    Iterative { tol: f64, max_iter: Option<usize> },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Banded
    }
}

impl Backend {
    pub fn iterative() -> Self {
        Backend::Iterative {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Iteration cap `50 |F|^{1/d} N`, `N` the longest window side.
pub fn default_iteration_cap(region: &FreeRegion) -> usize {
    let w = region.window();
    let side = (0..w.dim()).map(|a| w.side(a)).max().unwrap_or(1) as f64;
    let f = region.free_count() as f64;
    (50.0 * f.powf(1.0 / w.dim() as f64) * side).ceil() as usize
}

/// Scatters a vector over free sites into a field on the window.
pub fn field_from_free(region: &FreeRegion, values: &[f64]) -> ScalarField {
    let mut out = vec![0.0; region.window().len()];
    for (&i, &v) in region.free_indices().iter().zip(values) {
        out[i] = v;
    }
    ScalarField::new(region.window().clone(), out).expect("solver output is finite")
}

/// Cholesky factor of `Δ²_F`; reusable for many columns.
#[derive(Clone, Debug)]
pub struct GreenFactor {
    region: FreeRegion,
    chol: BandedCholesky,
}

impl GreenFactor {
    pub fn new(region: &FreeRegion) -> Result<Self> {
        let op = assemble(region)?;
        Self::from_operator(region, &op)
    }

    pub fn from_operator(region: &FreeRegion, op: &PrecisionOperator) -> Result<Self> {
        Ok(GreenFactor {
            region: region.clone(),
            chol: BandedCholesky::factor(&op.to_band())?,
        })
    }

    pub fn region(&self) -> &FreeRegion {
        &self.region
    }

    pub fn cholesky(&self) -> &BandedCholesky {
        &self.chol
    }

    /// `log det Δ²_F`.
    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    /// Column `pos` of `G`, indexed by free position.
    pub fn column_free(&self, pos: usize) -> Vec<f64> {
        self.chol.inverse_column(pos)
    }

    pub fn diagonal_free(&self, pos: usize) -> f64 {
        self.chol.inverse_diagonal(pos)
    }

    pub fn column(&self, source: &Site) -> Result<ScalarField> {
        let pos = self.region.require_free(source)?;
        Ok(field_from_free(&self.region, &self.column_free(pos)))
    }

    /// `G(x, x)` for a site; zero if `x` is pinned or outside.
    pub fn variance(&self, x: &Site) -> f64 {
        self.region.free_position_of(x).map_or(0.0, |p| self.diagonal_free(p))
    }
}

/// The full inverse `G = (Δ²_F)⁻¹`, stored densely over free positions.
#[derive(Clone, Debug)]
pub struct GreenMatrix {
    region: FreeRegion,
    g: DenseMatrix,
}

/// Dense Green matrix of a free region of at most `limit` sites.
pub fn green_dense(region: &FreeRegion, limit: usize) -> Result<GreenMatrix> {
    let n = region.free_count();
    if n > limit {
        return Err(Error::SizeLimit {
            what: "dense Green matrix",
            size: n,
            limit,
        });
    }
    let factor = GreenFactor::new(region)?;
    let mut g = DenseMatrix::from_columns(n, |j| factor.column_free(j));
    // Average out round-off asymmetry.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g.get(i, j) + g.get(j, i));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    Ok(GreenMatrix {
        region: region.clone(),
        g,
    })
}

impl GreenMatrix {
    pub fn region(&self) -> &FreeRegion {
        &self.region
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// `G(x, y)`, zero unless both sites are free.
    pub fn get(&self, x: &Site, y: &Site) -> f64 {
        match (self.region.free_position_of(x), self.region.free_position_of(y)) {
            (Some(i), Some(j)) => self.g.get(i, j),
            _ => 0.0,
        }
    }

    pub fn column(&self, source: &Site) -> Result<ScalarField> {
        let j = self.region.require_free(source)?;
        Ok(field_from_free(&self.region, &self.g.column(j)))
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.g.max_asymmetry()
    }
}

/// The function `h` with `Δ²h = δ_source` on the free sites and `h = 0`
/// elsewhere.
pub fn green_column(region: &FreeRegion, source: &Site, backend: Backend) -> Result<ScalarField> {
    let pos = region.require_free(source)?;
    match backend {
        Backend::Dense => green_dense(region, DEFAULT_DENSE_LIMIT)?.column(source),
        Backend::Banded => GreenFactor::new(region)?.column(source),
        Backend::Iterative { tol, max_iter } => {
            let op = assemble(region)?;
            let mut b = vec![0.0; region.free_count()];
            b[pos] = 1.0;
            let cap = max_iter.unwrap_or_else(|| default_iteration_cap(region));
            let sol = conjugate_gradient(op.csr(), &b, tol, cap)?;
            Ok(field_from_free(region, &sol.x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{bilaplacian, LatticeWindow};

    fn five_dim_pair() -> (FreeRegion, Site, Site) {
        let w = LatticeWindow::cube(5, 1).unwrap();
        let o = Site::origin(5);
        let e = Site::on_axis(5, 0, 1);
        (FreeRegion::with_free(w, [o.clone(), e.clone()].iter()).unwrap(), o, e)
    }

    #[test]
    fn single_site_green_value() {
        let w = LatticeWindow::cube(5, 1).unwrap();
        let o = Site::origin(5);
        let r = FreeRegion::with_free(w, [o.clone()].iter()).unwrap();
        for backend in [Backend::Dense, Backend::Banded, Backend::iterative()] {
            let h = green_column(&r, &o, backend).unwrap();
            assert!((h.get(&o) - 10.0 / 11.0).abs() < 1e-12);
            assert_eq!(h.values().iter().filter(|v| **v != 0.0).count(), 1);
        }
    }

    #[test]
    fn two_site_green_values() {
        let (r, o, e) = five_dim_pair();
        let g = green_dense(&r, 10).unwrap();
        assert!((g.get(&o, &o) - 1.1 / 1.17).abs() < 1e-14);
        assert!((g.get(&o, &e) - 0.2 / 1.17).abs() < 1e-14);
        let h = green_column(&r, &o, Backend::iterative()).unwrap();
        assert!((h.get(&e) - 0.2 / 1.17).abs() < 1e-12);
    }

    #[test]
    fn column_solves_the_boundary_value_problem() {
        let w = LatticeWindow::cube(2, 4).unwrap();
        let mask: Vec<bool> = (0..w.len()).map(|i| i % 5 == 1).collect();
        let r = FreeRegion::from_mask(w.clone(), mask).unwrap();
        let src = Site::new(vec![0, 0]);
        let h = green_column(&r, &src, Backend::Banded).unwrap();
        let bh = bilaplacian(&h);
        for s in r.free_sites() {
            let want = if s == src { 1.0 } else { 0.0 };
            assert!((bh.get(&s) - want).abs() < 1e-12);
        }
        for s in r.pinned_sites() {
            assert_eq!(h.get(&s), 0.0);
        }
    }

    #[test]
    fn backends_agree() {
        let w = LatticeWindow::from_extents(&[(-6, 6), (-1, 1), (-1, 1)]).unwrap();
        let r = FreeRegion::all_free(w);
        let src = Site::new(vec![1, 0, -1]);
        let dense = green_column(&r, &src, Backend::Dense).unwrap();
        let it = green_column(&r, &src, Backend::iterative()).unwrap();
        let diff = dense
            .values()
            .iter()
            .zip(it.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 10.0 * DEFAULT_TOL, "{diff}");
    }

    #[test]
    fn pinned_source_and_size_limit() {
        let (r, _, _) = five_dim_pair();
        let far = Site::new(vec![1, 1, 1, 1, 1]);
        assert!(matches!(green_column(&r, &far, Backend::Banded), Err(Error::NotFree(_))));
        assert!(matches!(green_dense(&r, 1), Err(Error::SizeLimit { .. })));
    }
}
