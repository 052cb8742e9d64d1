//! Discrete calculus on `Z^d` with zero extension outside a window.
//!
//! Operators return fields on the input window enlarged by their stencil
//! radius (1 for the Laplacian, 2 for the Bilaplacian), so no value of the
//! zero-extended result is lost.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::field::ScalarField;
use super::window::{Direction, LatticeWindow, Site};

/// `D_e f(x) = f(x+e) - f(x)`.
pub fn forward_difference(f: &ScalarField, e: Direction, x: &Site) -> f64 {
    f.get(&x.step(e)) - f.get(x)
}

/// `D_{e_1} D_{e_2} ... D_{e_k} f(x)`; the last direction acts first.
pub fn iterated_difference(f: &ScalarField, dirs: &[Direction], x: &Site) -> f64 {
    match dirs.split_first() {
        None => f.get(x),
        Some((&e, rest)) => iterated_difference(f, rest, &x.step(e)) - iterated_difference(f, rest, x),
    }
}

/// `(||∇^k f(x)||_2^2, ||∇^k f(x)||_∞)` over all `(2d)^k` direction tuples.
pub fn gradient_tensor_norms(f: &ScalarField, x: &Site, k: usize) -> Result<(f64, f64)> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be in 1..=4, got {k}"
        )));
    }
    let dirs = Direction::all(x.dim());
    let m = dirs.len();
    let mut tuple = vec![dirs[0]; k];
    let mut counter = vec![0usize; k];
    let (mut sq, mut sup) = (0.0f64, 0.0f64);
    loop {
        for (slot, &c) in tuple.iter_mut().zip(&counter) {
            *slot = dirs[c];
        }
        let v = iterated_difference(f, &tuple, x);
        sq += v * v;
        sup = sup.max(v.abs());
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok((sq, sup));
            }
            counter[pos] += 1;
            if counter[pos] < m {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
    }
}

/// `Δf(x) = (1/2d) Σ_e (f(x+e) - f(x))`, on the window enlarged by 1.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let out = f.window().enlarged(1);
    let d = out.dim();
    let scale = 1.0 / (2 * d) as f64;
    let mut c = vec![0; d];
    let values = (0..out.len())
        .map(|i| {
            out.coords_into(i, &mut c);
            let center = f.get_coords(&c);
            let mut acc = 0.0;
            for axis in 0..d {
                for s in [1, -1] {
                    c[axis] += s;
                    acc += f.get_coords(&c) - center;
                    c[axis] -= s;
                }
            }
            scale * acc
        })
        .collect();
    ScalarField::new(out, values).expect("finite input gives finite output")
}

/// `Δf(x) = -(1/2d) Σ_i D_{e_i} D_{-e_i} f(x)`, on the window enlarged by 1.
pub fn laplacian_second_differences(f: &ScalarField) -> ScalarField {
    let out = f.window().enlarged(1);
    let d = out.dim();
    let scale = 1.0 / (2 * d) as f64;
    let values = out
        .sites()
        .map(|x| {
            let acc: f64 = (0..d)
                .map(|axis| {
                    iterated_difference(
                        f,
                        &[Direction::new(axis, true), Direction::new(axis, false)],
                        &x,
                    )
                })
                .sum();
            -scale * acc
        })
        .collect();
    ScalarField::new(out, values).expect("finite input gives finite output")
}

/// `Δ²f = Δ(Δf)`, on the window enlarged by 2.
pub fn bilaplacian(f: &ScalarField) -> ScalarField {
    laplacian(&laplacian(f))
}

/// One coefficient of the Bilaplacian stencil, `Δ²(x, x + offset)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilEntry {
    pub offset: Vec<i64>,
    pub numerator: i64,
    pub denominator: i64,
    pub coefficient: f64,
}

/// The `1 + 2d + 2d²` nonzero entries of `Δ² = A² - 2A + I`, where `A` is
/// the neighbor average. Coefficients are exact rationals converted once.
pub fn bilaplacian_stencil(dim: usize) -> Vec<StencilEntry> {
    let d = dim as i64;
    let mut out = Vec::with_capacity(1 + 2 * dim + 2 * dim * dim);
    let mut push = |offset: Vec<i64>, num: i64, den: i64| {
        out.push(StencilEntry {
            offset,
            numerator: num,
            denominator: den,
            coefficient: num as f64 / den as f64,
        })
    };
    push(vec![0; dim], 2 * d + 1, 2 * d);
    for e in Direction::all(dim) {
        push(e.as_offset(dim), -1, d);
    }
    for e in Direction::all(dim) {
        let mut off = e.as_offset(dim);
        off[e.axis] *= 2;
        push(off, 1, 4 * d * d);
    }
    for a in 0..dim {
        for b in (a + 1)..dim {
            for sa in [1, -1] {
                for sb in [1, -1] {
                    let mut off = vec![0; dim];
                    off[a] = sa;
                    off[b] = sb;
                    push(off, 1, 2 * d * d);
                }
            }
        }
    }
    out
}

/// `Δ²f` evaluated directly from the stencil, on the window enlarged by 2.
pub fn bilaplacian_by_stencil(f: &ScalarField) -> ScalarField {
    let out = f.window().enlarged(2);
    let stencil = bilaplacian_stencil(out.dim());
    let mut c = vec![0; out.dim()];
    let mut y = vec![0; out.dim()];
    let values = (0..out.len())
        .map(|i| {
            out.coords_into(i, &mut c);
            stencil
                .iter()
                .map(|s| {
                    for k in 0..c.len() {
                        y[k] = c[k] + s.offset[k];
                    }
                    s.coefficient * f.get_coords(&y)
                })
                .sum()
        })
        .collect();
    ScalarField::new(out, values).expect("finite input gives finite output")
}

/// `<f, g> = Σ_x f(x) g(x)`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    let w = f.window();
    let mut c = vec![0; w.dim()];
    (0..w.len())
        .map(|i| {
            let fv = f.values()[i];
            if fv == 0.0 {
                return 0.0;
            }
            w.coords_into(i, &mut c);
            fv * g.get_coords(&c)
        })
        .sum()
}

/// Pointwise product on the union of the two windows' bounding box.
pub fn product(f: &ScalarField, g: &ScalarField) -> ScalarField {
    let w = bounding_window(f.window(), g.window());
    ScalarField::from_fn(w, |x| f.get(x) * g.get(x))
}

pub(crate) fn bounding_window(a: &LatticeWindow, b: &LatticeWindow) -> LatticeWindow {
    LatticeWindow::new(
        a.lo().iter().zip(b.lo()).map(|(x, y)| *x.min(y)).collect(),
        a.hi().iter().zip(b.hi()).map(|(x, y)| *x.max(y)).collect(),
    )
    .expect("union of valid windows is valid")
}

/// `∂_k B = {y ∉ B : d(y, B) <= k}`.
pub fn outer_boundary(set: &BTreeSet<Site>, k: u32) -> BTreeSet<Site> {
    let mut out = BTreeSet::new();
    let Some(first) = set.iter().next() else {
        return out;
    };
    let offsets = l1_ball_offsets(first.dim(), k as i64);
    for b in set {
        for off in &offsets {
            let y = b.offset(off);
            if !set.contains(&y) {
                out.insert(y);
            }
        }
    }
    out
}

/// All offsets with l1 norm at most `r`.
pub fn l1_ball_offsets(dim: usize, r: i64) -> Vec<Vec<i64>> {
    fn rec(dim: usize, r: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for v in -r..=r {
            prefix.push(v);
            rec(dim, r - v.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, r, &mut Vec::with_capacity(dim), &mut out);
    out
}
