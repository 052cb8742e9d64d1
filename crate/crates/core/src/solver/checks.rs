use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::green::{green_dense, GreenMatrix};
use super::operator::assemble;
use super::region::FreeRegion;

/// Tolerance for the Schur-complement identity.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

/// Allowed negative slack in the variance comparison.
pub const MONOTONICITY_SLACK: f64 = -1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub size_outer: usize,
    pub size_inner: usize,
    /// Largest entry of the conditional-mean covariance.
    pub conditional_mean_scale: f64,
    /// `max |G_A|_BB - G_B - Cov(E[φ_B | φ_{A\B}])|`.
    pub max_error: f64,
    pub pass: bool,
}

fn check_nested(inner: &FreeRegion, outer: &FreeRegion) -> Result<()> {
    if !inner.is_subregion_of(outer) {
        return Err(Error::InvalidArgument(
            "inner free region must be contained in the outer one on the same window".into(),
        ));
    }
    Ok(())
}

/// Positions in `outer` of the free sites of `inner`, and of the rest.
fn split_positions(inner: &FreeRegion, outer: &FreeRegion) -> (Vec<usize>, Vec<usize>) {
    let mut b = Vec::new();
    let mut c = Vec::new();
    for (pos, &idx) in outer.free_indices().iter().enumerate() {
        if inner.free_position(idx).is_some() {
            b.push(pos);
        } else {
            c.push(pos);
        }
    }
    (b, c)
}

/// Under `P_A`, `φ_B = E[φ_B | φ_{A\B}] + φ'` with `φ' ~ P_B` independent;
/// in matrix form `G_A|_BB = G_B + M G_A|_CC Mᵀ` with `M = -G_B Q_BC`.
pub fn conditional_decomposition_check(
    outer: &FreeRegion,
    inner: &FreeRegion,
    limit: usize,
) -> Result<DecompositionReport> {
    check_nested(inner, outer)?;
    if inner.free_count() == 0 {
        return Ok(DecompositionReport {
            size_outer: outer.free_count(),
            size_inner: 0,
            conditional_mean_scale: 0.0,
            max_error: 0.0,
            pass: true,
        });
    }
    let ga = green_dense(outer, limit)?;
    let gb = green_dense(inner, limit)?;
    let q = assemble(outer)?;
    let (bpos, cpos) = split_positions(inner, outer);
    let nb = bpos.len();
    let nc = cpos.len();
    // M = -G_B Q_BC, nb x nc.
    let mut m = vec![0.0; nb * nc];
    for (i, _) in bpos.iter().enumerate() {
        for (k, &ck) in cpos.iter().enumerate() {
            let mut acc = 0.0;
            for (j, &bj) in bpos.iter().enumerate() {
                let qjk = q.get(bj, ck);
                if qjk != 0.0 {
                    acc += gb.matrix().get(i, j) * qjk;
                }
            }
            m[i * nc + k] = -acc;
        }
    }
    // T = M G_CC, then Cov = T Mᵀ.
    let mut t = vec![0.0; nb * nc];
    for i in 0..nb {
        for l in 0..nc {
            t[i * nc + l] = (0..nc)
                .map(|k| m[i * nc + k] * ga.matrix().get(cpos[k], cpos[l]))
                .sum();
        }
    }
    let mut max_error = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..nb {
        for j in 0..nb {
            let cov: f64 = (0..nc).map(|l| t[i * nc + l] * m[j * nc + l]).sum();
            scale = scale.max(cov.abs());
            let lhs = ga.matrix().get(bpos[i], bpos[j]);
            max_error = max_error.max((lhs - gb.matrix().get(i, j) - cov).abs());
        }
    }
    Ok(DecompositionReport {
        size_outer: outer.free_count(),
        size_inner: nb,
        conditional_mean_scale: scale,
        max_error,
        pass: max_error <= DECOMPOSITION_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub combinations: usize,
    /// `min (var_A - var_B)` over the tested coefficient vectors.
    pub min_slack: f64,
    /// `min (G_A(x,x) - G_B(x,x))` over the free sites of `B`.
    pub min_diagonal_slack: f64,
    pub pass: bool,
}

fn restricted(ga: &GreenMatrix, pos: &[usize]) -> DenseMatrix {
    let n = pos.len();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, ga.matrix().get(pos[i], pos[j]));
        }
    }
    out
}

fn quadratic(g: &DenseMatrix, l: &[f64]) -> f64 {
    (0..g.n())
        .map(|i| l[i] * g.row(i).iter().zip(l).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Compares `var(Σ λ_i φ_{x_i})` under `P_B` and `P_A` for unit vectors and
/// `samples` Gaussian coefficient vectors over the free sites of `B ⊆ A`.
pub fn variance_monotonicity_check(
    outer: &FreeRegion,
    inner: &FreeRegion,
    samples: usize,
    seed: u64,
    limit: usize,
) -> Result<MonotonicityReport> {
    check_nested(inner, outer)?;
    let nb = inner.free_count();
    if nb == 0 {
        return Ok(MonotonicityReport {
            combinations: 0,
            min_slack: 0.0,
            min_diagonal_slack: 0.0,
            pass: true,
        });
    }
    let ga = green_dense(outer, limit)?;
    let gb = green_dense(inner, limit)?;
    let (bpos, _) = split_positions(inner, outer);
    let ga_bb = restricted(&ga, &bpos);
    let min_diagonal_slack = (0..nb)
        .map(|i| ga_bb.get(i, i) - gb.matrix().get(i, i))
        .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = min_diagonal_slack;
    for _ in 0..samples {
        let l: Vec<f64> = (0..nb).map(|_| rng.sample(StandardNormal)).collect();
        min_slack = min_slack.min(quadratic(&ga_bb, &l) - quadratic(gb.matrix(), &l));
    }
    Ok(MonotonicityReport {
        combinations: nb + samples,
        min_slack,
        min_diagonal_slack,
        pass: min_slack >= MONOTONICITY_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeWindow;

    fn random_nested(seed: u64) -> (FreeRegion, FreeRegion) {
        let w = LatticeWindow::from_extents(&[(0, 9), (0, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a_mask: Vec<bool> = (0..w.len()).map(|_| rng.random::<f64>() < 0.25).collect();
        let b_mask: Vec<bool> = a_mask.iter().map(|&p| p || rng.random::<f64>() < 0.4).collect();
        (
            FreeRegion::from_mask(w.clone(), a_mask).unwrap(),
            FreeRegion::from_mask(w, b_mask).unwrap(),
        )
    }

    #[test]
    fn schur_identity_on_random_nested_regions() {
        for seed in 0..5 {
            let (a, b) = random_nested(seed);
            assert!(a.free_count() <= 50);
            let r = conditional_decomposition_check(&a, &b, 1000).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.conditional_mean_scale > 0.0);
        }
    }

    #[test]
    fn degenerate_nestings() {
        let (a, _) = random_nested(1);
        let same = conditional_decomposition_check(&a, &a, 1000).unwrap();
        assert_eq!(same.conditional_mean_scale, 0.0);
        assert!(same.max_error < 1e-12);
        let w = a.window().clone();
        let n = w.len();
        let empty = FreeRegion::from_mask(w, vec![true; n]).unwrap();
        assert!(conditional_decomposition_check(&a, &empty, 1000).unwrap().pass);
        let eq = variance_monotonicity_check(&a, &a, 10, 0, 1000).unwrap();
        assert!(eq.min_diagonal_slack.abs() < 1e-12);
    }

    #[test]
    fn variance_grows_with_the_region() {
        for seed in 0..5 {
            let (a, b) = random_nested(seed);
            let r = variance_monotonicity_check(&a, &b, 50, seed, 1000).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let (a, b) = random_nested(0);
        assert!(variance_monotonicity_check(&b, &a, 1, 0, 1000).is_err() || a == b);
    }
}
