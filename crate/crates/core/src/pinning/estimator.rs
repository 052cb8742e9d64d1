use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{bilaplacian_stencil, LatticeWindow, Site};
use crate::solver::{FreeRegion, GreenFactor};

use super::gibbs::{GibbsChain, GibbsOptions};
use super::measure::{check_eps, pin_prob_from_variance, ExactPinMeasure};

/// Source of pinned sets for the mixture estimator.
#[derive(Clone, Debug)]
pub enum PinSampler<'a> {
    /// No pinning: the estimator returns `G_W(x, y)`.
    Unpinned,
    /// Independent draws from an enumerated measure.
    Exact(&'a ExactPinMeasure),
    /// States of a heat-bath chain.
    Gibbs {
        options: GibbsOptions,
        burnin: u64,
        thin: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Mean and standard error; with `batches`, the error is computed from that
/// many batch means (for correlated sequences).
pub fn mean_and_stderr(values: &[f64], batches: Option<usize>) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let groups: Vec<f64> = match batches {
        Some(b) if b >= 2 && n >= 2 * b => {
            let size = n / b;
            values
                .chunks(size)
                .take(b)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect()
        }
        _ => values.to_vec(),
    };
    let m = groups.len() as f64;
    let gm = groups.iter().sum::<f64>() / m;
    let var = groups.iter().map(|v| (v - gm).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Estimates `E^ε[φ_x φ_y] = Σ_A ζ(A) G^A_W(x, y)` by averaging the Green
/// function over sampled pinned sets; `G^A(x, ·)` vanishes when `x ∈ A`.
pub fn pinned_cov_estimator(
    window: &LatticeWindow,
    eps: f64,
    x: &Site,
    y: &Site,
    n_samples: usize,
    sampler: &PinSampler<'_>,
    seed: u64,
) -> Result<CovEstimate> {
    for s in [x, y] {
        if !window.contains(s) {
            return Err(Error::InvalidArgument(format!("{s} is outside the window")));
        }
    }
    let values: Vec<f64> = match sampler {
        PinSampler::Unpinned => {
            let f = GreenFactor::new(&FreeRegion::all_free(window.clone()))?;
            return Ok(CovEstimate {
                mean: f.column(x)?.get(y),
                stderr: 0.0,
                samples: 1,
            });
        }
        PinSampler::Exact(measure) => {
            check_eps(eps)?;
            if measure.window() != window {
                return Err(Error::InvalidArgument("measure lives on another window".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_samples)
                .map(|_| {
                    let a = measure.sample(&mut rng);
                    if a.contains(x) {
                        return Ok(0.0);
                    }
                    Ok(GreenFactor::new(&a.free_region())?.column(x)?.get(y))
                })
                .collect::<Result<_>>()?
        }
        PinSampler::Gibbs { options, burnin, thin } => {
            let mut chain = GibbsChain::new(window.clone(), eps, seed, *options)?;
            for _ in 0..*burnin {
                chain.sweep()?;
            }
            let mut out = Vec::with_capacity(n_samples);
            for _ in 0..n_samples {
                for _ in 0..(*thin).max(1) {
                    chain.sweep()?;
                }
                out.push(chain.green_column(x)?.get(y));
            }
            out
        }
    };
    if values.is_empty() {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let batches = matches!(sampler, PinSampler::Gibbs { .. }).then_some(20);
    let (mean, stderr) = mean_and_stderr(&values, batches);
    Ok(CovEstimate {
        mean,
        stderr,
        samples: values.len(),
    })
}

/// `E^ε[G^A(x, y) 1_{x,y ∉ A} | A \ {x, y}]` for each target `y`, with `A`
/// the pinned mask. The pin states of `x` and `y` are summed out exactly from
/// the 2×2 block of `G^{A \ {x,y}}`, so averaging over sampled `A` estimates
/// the same covariance as `G^A(x, y)` with smaller variance.
pub fn endpoint_conditioned(
    window: &LatticeWindow,
    pinned: &[bool],
    eps: f64,
    source: &Site,
    targets: &[Site],
) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let xi = window
        .index_of(source)
        .ok_or_else(|| Error::InvalidArgument(format!("{source} is outside the window")))?;
    let mut mask = pinned.to_vec();
    mask[xi] = false;
    let region = FreeRegion::from_mask(window.clone(), mask)?;
    let factor = GreenFactor::new(&region)?;
    let px = region.free_position(xi).expect("source was freed");
    let col = factor.column_free(px);
    let g_xx = col[px];
    let stencil = bilaplacian_stencil(window.dim());
    let q_yy = stencil[0].coefficient;
    targets
        .iter()
        .map(|y| {
            let yi = window
                .index_of(y)
                .ok_or_else(|| Error::InvalidArgument(format!("{y} is outside the window")))?;
            if yi == xi {
                return Ok((1.0 - pin_prob_from_variance(eps, g_xx)) * g_xx);
            }
            let (a, b, c) = match region.free_position(yi) {
                Some(py) => (g_xx, col[py], factor.diagonal_free(py)),
                None => {
                    // Unpin `y` by a Schur complement against its precision row.
                    let mut row = vec![0.0; region.free_count()];
                    for s in &stencil[1..] {
                        if let Some(p) = window.offset_index(yi, &s.offset).and_then(|j| region.free_position(j)) {
                            row[p] = s.coefficient;
                        }
                    }
                    let mut v = row.clone();
                    factor.cholesky().solve(&mut v);
                    let schur = q_yy - row.iter().zip(&v).map(|(r, v)| r * v).sum::<f64>();
                    (g_xx + v[px] * v[px] / schur, -v[px] / schur, 1.0 / schur)
                }
            };
            let det = a * c - b * b;
            let both_free = 2.0 * PI * det.sqrt();
            let total = both_free + eps * (2.0 * PI * det / a).sqrt() + eps * (2.0 * PI * det / c).sqrt() + eps * eps;
            Ok(both_free / total * b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinning::measure::zeta_exact;

    fn segment(len: i64) -> LatticeWindow {
        LatticeWindow::from_extents(&[(0, len - 1), (0, 0), (0, 0), (0, 0), (0, 0)]).unwrap()
    }

    #[test]
    fn single_site_mixture() {
        let w = segment(1);
        let o = Site::origin(5);
        let z = zeta_exact(&w, 1.0).unwrap();
        let exact = z.prob_mask(0) * 10.0 / 11.0;
        assert!((exact - 0.640_923).abs() < 1e-5);
        let est = pinned_cov_estimator(&w, 1.0, &o, &o, 4000, &PinSampler::Exact(&z), 3).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr);
        let base = pinned_cov_estimator(&w, 0.0, &o, &o, 1, &PinSampler::Unpinned, 0).unwrap();
        assert!((base.mean - 10.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn gibbs_mixture_matches_enumeration() {
        let w = segment(8);
        let z = zeta_exact(&w, 1.0).unwrap();
        let x = Site::origin(5);
        let y = Site::on_axis(5, 0, 2);
        let exact = z.expectation(|m| {
            let a = crate::pinning::PinConfiguration::from_bits_u64(w.clone(), m as u64).unwrap();
            if a.contains(&x) {
                0.0
            } else {
                GreenFactor::new(&a.free_region()).unwrap().column(&x).unwrap().get(&y)
            }
        });
        let sampler = PinSampler::Gibbs {
            options: GibbsOptions::default(),
            burnin: 50,
            thin: 2,
        };
        let est = pinned_cov_estimator(&w, 1.0, &x, &y, 4000, &sampler, 8).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn endpoint_conditioning_is_unbiased() {
        let w = segment(6);
        let eps = 0.7;
        let z = zeta_exact(&w, eps).unwrap();
        let x = Site::on_axis(5, 0, 1);
        let targets: Vec<Site> = (0..6).map(|r| Site::on_axis(5, 0, r)).collect();
        for y in &targets {
            let plain = z.expectation(|m| {
                let a = crate::pinning::PinConfiguration::from_bits_u64(w.clone(), m as u64).unwrap();
                if a.contains(&x) || a.contains(y) {
                    0.0
                } else {
                    GreenFactor::new(&a.free_region()).unwrap().column(&x).unwrap().get(y)
                }
            });
            let conditioned = z.expectation(|m| {
                let a = crate::pinning::PinConfiguration::from_bits_u64(w.clone(), m as u64).unwrap();
                endpoint_conditioned(&w, a.mask(), eps, &x, std::slice::from_ref(y)).unwrap()[0]
            });
            assert!((plain - conditioned).abs() <= 1e-12 * (1.0 + plain.abs()), "{y}: {plain} vs {conditioned}");
        }
    }

    #[test]
    fn batch_means() {
        let v: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let (m, se) = mean_and_stderr(&v, None);
        assert_eq!(m, 0.5);
        assert!(se > 0.0);
        let (_, se_b) = mean_and_stderr(&v, Some(10));
        assert_eq!(se_b, 0.0);
    }
}
