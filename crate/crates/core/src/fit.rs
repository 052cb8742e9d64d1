//! Weighted least-squares fits on the log scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest points a fit accepts.
pub const MIN_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = C e^{-η x}`; `rate` is `η`.
    Exponential,
    /// `y = C x^α`; `rate` is `α`.
    PowerLaw,
    /// `y = a + b log x`; `rate` is `b`.
    LogLinear,
    /// `y = a + b x`; `rate` is `b`.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub rate: f64,
    pub rate_se: f64,
    /// `C` for the multiplicative models, the intercept otherwise.
    pub prefactor: f64,
    pub prefactor_se: f64,
    pub r_squared: f64,
    /// Smallest and largest abscissa used.
    pub range: (f64, f64),
    pub points: usize,
}

struct Line {
    intercept: f64,
    slope: f64,
    intercept_se: f64,
    slope_se: f64,
    r_squared: f64,
}

fn weighted_line(u: &[f64], v: &[f64], w: &[f64]) -> Result<Line> {
    let n = u.len();
    if n < MIN_POINTS {
        return Err(Error::InsufficientRange(format!(
            "{n} usable points, at least {MIN_POINTS} required"
        )));
    }
    let sw: f64 = w.iter().sum();
    let ub = u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let vb = v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let suu: f64 = u.iter().zip(w).map(|(a, b)| b * (a - ub).powi(2)).sum();
    let suv: f64 = u.iter().zip(v).zip(w).map(|((a, c), b)| b * (a - ub) * (c - vb)).sum();
    let svv: f64 = v.iter().zip(w).map(|(a, b)| b * (a - vb).powi(2)).sum();
    if suu <= 0.0 {
        return Err(Error::InsufficientRange("abscissae are all equal".into()));
    }
    let slope = suv / suu;
    let intercept = vb - slope * ub;
    let rss: f64 = u
        .iter()
        .zip(v)
        .zip(w)
        .map(|((a, c), b)| b * (c - intercept - slope * a).powi(2))
        .sum();
    // Residual variance rescaled to the weights' normalisation.
    let s2 = rss / (n as f64 - 2.0) * n as f64 / sw;
    let scale = sw / n as f64;
    let slope_se = (s2 / (suu / scale)).sqrt();
    let intercept_se = (s2 * (1.0 / n as f64 + ub * ub / (suu / scale))).sqrt();
    let r_squared = if svv > 0.0 { (1.0 - rss / svv).clamp(0.0, 1.0) } else { 1.0 };
    Ok(Line {
        intercept,
        slope,
        intercept_se,
        slope_se,
        r_squared,
    })
}

/// Keeps points with `y > floor` (and `y > 0`); weights are `(y / se)²`, the
/// inverse delta-method variance of `log y`, or 1 without standard errors.
fn log_points(xs: &[f64], ys: &[f64], ses: Option<&[f64]>, floor: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if xs.len() != ys.len() || ses.is_some_and(|s| s.len() != ys.len()) {
        return Err(Error::InvalidArgument("fit inputs differ in length".into()));
    }
    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut w = Vec::new();
    for i in 0..xs.len() {
        let y = ys[i];
        if !(y > floor && y > 0.0) || !xs[i].is_finite() {
            continue;
        }
        u.push(xs[i]);
        v.push(y.ln());
        w.push(match ses {
            Some(s) if s[i] > 0.0 => (y / s[i]).powi(2),
            _ => 1.0,
        });
    }
    Ok((u, v, w))
}

fn range_of(x: &[f64]) -> (f64, f64) {
    (
        x.iter().copied().fold(f64::INFINITY, f64::min),
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Fits `y = C e^{-η x}` to the points above `floor`.
pub fn fit_exponential(xs: &[f64], ys: &[f64], ses: Option<&[f64]>, floor: f64) -> Result<FitResult> {
    let (u, v, w) = log_points(xs, ys, ses, floor)?;
    let l = weighted_line(&u, &v, &w)?;
    let c = l.intercept.exp();
    Ok(FitResult {
        model: FitModel::Exponential,
        rate: -l.slope,
        rate_se: l.slope_se,
        prefactor: c,
        prefactor_se: c * l.intercept_se,
        r_squared: l.r_squared,
        range: range_of(&u),
        points: u.len(),
    })
}

/// Fits `y = C x^α` to the points above `floor` with `x > 0`.
pub fn fit_powerlaw(xs: &[f64], ys: &[f64], ses: Option<&[f64]>, floor: f64) -> Result<FitResult> {
    let (x, v, w) = log_points(xs, ys, ses, floor)?;
    let keep: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
    let u: Vec<f64> = keep.iter().map(|&i| x[i].ln()).collect();
    let v: Vec<f64> = keep.iter().map(|&i| v[i]).collect();
    let w: Vec<f64> = keep.iter().map(|&i| w[i]).collect();
    let l = weighted_line(&u, &v, &w)?;
    let c = l.intercept.exp();
    let xr: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
    Ok(FitResult {
        model: FitModel::PowerLaw,
        rate: l.slope,
        rate_se: l.slope_se,
        prefactor: c,
        prefactor_se: c * l.intercept_se,
        r_squared: l.r_squared,
        range: range_of(&xr),
        points: u.len(),
    })
}

/// Unweighted straight line `y = a + b x`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("fit inputs differ in length".into()));
    }
    let w = vec![1.0; xs.len()];
    let l = weighted_line(xs, ys, &w)?;
    Ok(FitResult {
        model: FitModel::Linear,
        rate: l.slope,
        rate_se: l.slope_se,
        prefactor: l.intercept,
        prefactor_se: l.intercept_se,
        r_squared: l.r_squared,
        range: range_of(xs),
        points: xs.len(),
    })
}

/// `y = a + b log x`.
pub fn fit_loglinear(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mut f = fit_linear(&lx, ys)?;
    f.model = FitModel::LogLinear;
    f.range = range_of(xs);
    Ok(f)
}
