use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{graph_distance, Site};

/// Largest step count accepted by the convolution (memory is linear in it).
pub const MAX_STEPS: usize = 20_000_000;

/// Binomial weights below this fraction of the mode are dropped.
const BINOMIAL_CUTOFF: f64 = 1e-30;

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// `P_0[X_k = z]` for a one-dimensional simple walk, `k = 0..=m_max`.
fn axis_profile(z: i64, m_max: usize, lnf: &[f64]) -> Vec<f64> {
    let za = z.unsigned_abs() as usize;
    (0..=m_max)
        .map(|k| {
            if k < za || (k - za) % 2 != 0 {
                return 0.0;
            }
            let a = (k + za) / 2;
            (lnf[k] - lnf[a] - lnf[k - a] - k as f64 * std::f64::consts::LN_2).exp()
        })
        .collect()
}

/// Walk on the union of two groups of axes: at every step the first group is
/// chosen with probability `p`, so
/// `P(m) = Σ_k Bin(m, p; k) P_a(k) P_b(m - k)`.
fn merge(a: &[f64], b: &[f64], p: f64, lnf: &[f64]) -> Vec<f64> {
    let m_max = a.len() - 1;
    let ratio = p / (1.0 - p);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..=m_max)
        .map(|m| {
            let mode = (((m + 1) as f64 * p).floor() as usize).min(m);
            let pmf0 = (lnf[m] - lnf[mode] - lnf[m - mode] + mode as f64 * lp + (m - mode) as f64 * lq).exp();
            let mut acc = pmf0 * a[mode] * b[m - mode];
            let mut pmf = pmf0;
            for k in mode..m {
                pmf *= (m - k) as f64 / (k + 1) as f64 * ratio;
                if pmf < BINOMIAL_CUTOFF * pmf0 {
                    break;
                }
                acc += pmf * a[k + 1] * b[m - k - 1];
            }
            pmf = pmf0;
            for k in (1..=mode).rev() {
                pmf *= k as f64 / (m - k + 1) as f64 / ratio;
                if pmf < BINOMIAL_CUTOFF * pmf0 {
                    break;
                }
                acc += pmf * a[k - 1] * b[m - k + 1];
            }
            acc
        })
        .collect()
}

/// `P_0[S_m = z]` for the simple random walk on `Z^d`, `m = 0..=m_max`,
/// computed by convolving per-axis walks over the axis-selection law.
pub fn step_distribution(z: &[i64], m_max: usize) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if m_max > MAX_STEPS {
        return Err(Error::SizeLimit {
            what: "random-walk step count",
            size: m_max,
            limit: MAX_STEPS,
        });
    }
    let lnf = ln_factorials(m_max);
    let mut acc = axis_profile(z[0], m_max, &lnf);
    for (s, &zi) in z.iter().enumerate().skip(1) {
        let next = axis_profile(zi, m_max, &lnf);
        let p = s as f64 / (s + 1) as f64;
        acc = merge(&acc, &next, p, &lnf);
    }
    Ok(acc)
}

/// Partial sum `Σ_{m <= m_max} (m + 1) P_x[S_m = y]` of the membrane Green
/// function on `Z^d`.
pub fn rw_green(x: &Site, y: &Site, m_max: usize) -> Result<f64> {
    graph_distance(x, y)?;
    let z: Vec<i64> = y.0.iter().zip(&x.0).map(|(a, b)| a - b).collect();
    let p = step_distribution(&z, m_max)?;
    Ok(p.iter().enumerate().map(|(m, v)| (m + 1) as f64 * v).sum())
}

/// Local limit approximation of `Σ_{m > m_max} (m + 1) P_0[S_m = z]`:
/// `P_0[S_m = z] ≈ 2 (d / 2πm)^{d/2} exp(-d|z|² / 2m)` on steps of the
/// parity of `|z|_1`. Requires `d >= 5` for convergence.
pub fn lclt_tail(z: &[i64], m_max: usize) -> Result<f64> {
    let d = z.len();
    if d < 5 {
        return Err(Error::InvalidArgument(format!(
            "the Green function of Z^{d} is infinite; tails need d >= 5"
        )));
    }
    let df = d as f64;
    let r2: f64 = z.iter().map(|v| (*v as f64).powi(2)).sum();
    let parity = z.iter().map(|v| v.unsigned_abs()).sum::<u64>() % 2;
    let c = 2.0 * (df / (2.0 * PI)).powf(df / 2.0);
    let term = |m: f64| c * (m + 1.0) * m.powf(-df / 2.0) * (-df * r2 / (2.0 * m)).exp();
    let explicit_end = (m_max.max(1) as u64) * 100;
    let mut m = m_max as u64 + 1;
    if m % 2 != parity {
        m += 1;
    }
    let mut sum = 0.0;
    while m <= explicit_end {
        sum += term(m as f64);
        m += 2;
    }
    // Remaining terms: every other integer, so half the integral of c·m^{1-d/2}.
    let e = explicit_end as f64;
    sum += 0.5 * c * e.powf(2.0 - df / 2.0) / (df / 2.0 - 2.0);
    Ok(sum)
}

/// The Green function `G(0, z)` on `Z^d`, `d >= 5`, from an exact partial
/// sum plus the local limit tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwPlateau {
    pub value: f64,
    pub partial_sum: f64,
    pub m_max: usize,
    /// `|value(m_max) - value(m_max / 2)|`.
    pub uncertainty: f64,
}

pub fn rw_green_plateau(z: &[i64], m_max: usize) -> Result<RwPlateau> {
    if m_max < 2 {
        return Err(Error::InvalidArgument("plateau needs m_max >= 2".into()));
    }
    let p = step_distribution(z, m_max)?;
    let half = m_max / 2;
    let partial = |upto: usize| -> f64 { p[..=upto].iter().enumerate().map(|(m, v)| (m + 1) as f64 * v).sum() };
    let full = partial(m_max);
    let value = full + lclt_tail(z, m_max)?;
    let coarse = partial(half) + lclt_tail(z, half)?;
    Ok(RwPlateau {
        value,
        partial_sum: full,
        m_max,
        uncertainty: (value - coarse).abs(),
    })
}

/// A cached value of `G(0, 0)` on `Z^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GRef {
    pub dim: usize,
    pub value: f64,
    pub m_max: usize,
    pub tail_bound: f64,
}

const G_REF_DATA: &str = include_str!("../../data/g_ref.txt");

/// Parses the `d value m_max tail_bound` table; `#` starts a comment.
pub fn parse_g_ref_table(text: &str) -> Result<Vec<GRef>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields in {l:?}")));
            }
            let bad = |_| Error::Parse(format!("bad number in {l:?}"));
            Ok(GRef {
                dim: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                value: f[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                m_max: f[2].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                tail_bound: f[3].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            })
        })
        .collect()
}

pub fn g_ref_entry(dim: usize) -> Result<GRef> {
    parse_g_ref_table(G_REF_DATA)?
        .into_iter()
        .find(|g| g.dim == dim)
        .ok_or_else(|| Error::MissingReference(format!("G(0,0) for d = {dim}")))
}

/// Cached `G(0, 0)` on `Z^d`.
pub fn g_ref(dim: usize) -> Result<f64> {
    g_ref_entry(dim).map(|g| g.value)
}
