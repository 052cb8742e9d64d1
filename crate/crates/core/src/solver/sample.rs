use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::lattice::ScalarField;

use super::green::{field_from_free, GreenFactor};
use super::region::FreeRegion;

/// Exact sampler for the centred Gaussian with precision `Δ²_F`: with
/// `Δ²_F = L Lᵀ`, the vector `L⁻ᵀ z` has covariance `(Δ²_F)⁻¹`.
#[derive(Clone, Debug)]
pub struct FieldSampler {
    factor: GreenFactor,
}

impl FieldSampler {
    pub fn new(region: &FreeRegion) -> Result<Self> {
        Ok(FieldSampler {
            factor: GreenFactor::new(region)?,
        })
    }

    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.factor.region().free_count())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        self.factor.cholesky().backward_solve(&mut z);
        z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ScalarField {
        field_from_free(self.factor.region(), &self.sample_free(rng))
    }
}

/// One draw of the field on `region`, zero on pinned and exterior sites.
pub fn sample_field(region: &FreeRegion, seed: u64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(FieldSampler::new(region)?.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeWindow, Site};
    use crate::solver::green_dense;

    #[test]
    fn single_site_mean_and_variance() {
        let w = LatticeWindow::cube(5, 1).unwrap();
        let o = Site::origin(5);
        let r = FreeRegion::with_free(w, [o.clone()].iter()).unwrap();
        let s = FieldSampler::new(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let (mut m, mut v) = (0.0, 0.0);
        for _ in 0..n {
            let f = s.sample(&mut rng);
            let x = f.get(&o);
            assert_eq!(f.get(&Site::new(vec![2, 0, 0, 0, 0])), 0.0);
            m += x;
            v += x * x;
        }
        m /= n as f64;
        v /= n as f64;
        let g = 10.0 / 11.0;
        assert!(m.abs() < 4.0 * (g / n as f64).sqrt());
        assert!((v - g).abs() < 4.0 * (2.0 / n as f64).sqrt() * g);
    }

    #[test]
    fn empirical_covariance_matches_green_matrix() {
        let w = LatticeWindow::from_extents(&[(0, 5), (0, 4)]).unwrap();
        let mask: Vec<bool> = (0..w.len()).map(|i| i % 6 == 0).collect();
        let r = FreeRegion::from_mask(w, mask).unwrap();
        let g = green_dense(&r, 100).unwrap();
        let s = FieldSampler::new(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = r.free_count();
        let reps = 10_000;
        let mut acc = vec![0.0; n * n];
        for _ in 0..reps {
            let x = s.sample_free(&mut rng);
            for i in 0..n {
                for j in 0..n {
                    acc[i * n + j] += x[i] * x[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let est = acc[i * n + j] / reps as f64;
                let gij = g.matrix().get(i, j);
                let gii = g.matrix().get(i, i);
                let gjj = g.matrix().get(j, j);
                let se = ((gii * gjj + gij * gij) / reps as f64).sqrt();
                assert!((est - gij).abs() <= 5.0 * se, "({i},{j}) {est} vs {gij}");
            }
        }
    }
}
