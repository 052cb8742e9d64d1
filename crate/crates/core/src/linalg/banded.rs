use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: entries `(i, j)` with `0 <= i - j <= bw`,
/// stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        SymBandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)` of the symmetric matrix; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            return 0.0;
        }
        self.data[j * (self.bw + 1) + (i - j)]
    }

    /// Sets entry `(i, j)` (and its mirror). Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        self.data[j * (self.bw + 1) + (i - j)] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let col = &self.data[j * w..(j + 1) * w];
            y[j] += col[0] * x[j];
            for (off, &a) in col.iter().enumerate().skip(1) {
                let i = j + off;
                if i >= self.n {
                    break;
                }
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite band matrix.
///
/// `L` has the same bandwidth as `A`. Besides solves, the factor supports
/// rank-one updates and the decoupling/recoupling of a single index, which
/// replaces row and column `k` of `A` by the unit vector (or restores them)
/// in `O((n - k) bw)` work.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SymBandMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut data = a.data.clone();
        // Left-looking, column oriented.
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            for k in k0..j {
                let ljk = data[k * w + (j - k)];
                if ljk == 0.0 {
                    continue;
                }
                // Column k rows j..=k+bw, column j rows j..=j+bw.
                let last = (k + bw).min(n - 1);
                let (head, tail) = data.split_at_mut(j * w);
                let colk = &head[k * w + (j - k)..k * w + (last - k) + 1];
                let colj = &mut tail[..last - j + 1];
                for (dst, src) in colj.iter_mut().zip(colk) {
                    *dst -= ljk * src;
                }
            }
            let pivot = data[j * w];
            if pivot.is_nan() || pivot <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
            }
            let d = pivot.sqrt();
            data[j * w] = d;
            let last = (j + bw).min(n - 1);
            for v in &mut data[j * w + 1..j * w + (last - j) + 1] {
                *v /= d;
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn w(&self) -> usize {
        self.bw + 1
    }

    /// Entry `L[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i < j || i - j > self.bw {
            0.0
        } else {
            self.data[j * self.w() + (i - j)]
        }
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|j| 2.0 * self.data[j * self.w()].ln()).sum()
    }

    /// Overwrites `b` with `L⁻¹ b`, assuming `b[..start]` is zero.
    pub fn forward_solve(&self, b: &mut [f64], start: usize) {
        let w = self.w();
        for j in start..self.n {
            let col = &self.data[j * w..j * w + w];
            let xj = b[j] / col[0];
            b[j] = xj;
            if xj == 0.0 {
                continue;
            }
            let last = (j + self.bw).min(self.n - 1);
            for (bi, &l) in b[j + 1..=last].iter_mut().zip(&col[1..]) {
                *bi -= l * xj;
            }
        }
    }

    /// Overwrites `y` with `L⁻ᵀ y`.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let w = self.w();
        for j in (0..self.n).rev() {
            let col = &self.data[j * w..j * w + w];
            let last = (j + self.bw).min(self.n - 1);
            let s: f64 = y[j + 1..=last]
                .iter()
                .zip(&col[1..])
                .map(|(a, b)| a * b)
                .sum();
            y[j] = (y[j] - s) / col[0];
        }
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve(&self, b: &mut [f64]) {
        let start = b.iter().position(|v| *v != 0.0).unwrap_or(self.n);
        self.forward_solve(b, start);
        self.backward_solve(b);
    }

    /// Column `k` of `A⁻¹`.
    pub fn inverse_column(&self, k: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        b[k] = 1.0;
        self.forward_solve(&mut b, k);
        self.backward_solve(&mut b);
        b
    }

    /// `(A⁻¹)_{kk} = |L⁻¹ e_k|²`.
    pub fn inverse_diagonal(&self, k: usize) -> f64 {
        let mut b = vec![0.0; self.n];
        b[k] = 1.0;
        self.forward_solve(&mut b, k);
        b[k..].iter().map(|v| v * v).sum()
    }

    /// `vᵀ A⁻¹ v = |L⁻¹ v|²` for `v` supported on `start..`.
    pub fn inverse_quadratic_form(&self, v: &mut [f64], start: usize) -> f64 {
        self.forward_solve(v, start);
        v[start..].iter().map(|x| x * x).sum()
    }

    /// Replaces the factor of `A` by that of `A + σ v vᵀ` (`σ = +1` for an
    /// update, `-1` for a downdate). `v` is consumed as workspace and must be
    /// supported on `start..=start + bw`.
    pub fn rank_one(&mut self, v: &mut [f64], start: usize, downdate: bool) -> Result<()> {
        debug_assert!(v.iter().skip(start + self.bw + 1).all(|x| *x == 0.0));
        let w = self.w();
        let sigma = if downdate { -1.0 } else { 1.0 };
        for j in start..self.n {
            let vj = v[j];
            if vj == 0.0 {
                continue;
            }
            let col = &mut self.data[j * w..j * w + w];
            let ljj = col[0];
            let arg = ljj * ljj + sigma * vj * vj;
            if arg.is_nan() || arg <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j, value: arg });
            }
            let r = arg.sqrt();
            let c = r / ljj;
            let s = vj / ljj;
            col[0] = r;
            let last = (j + self.bw).min(self.n - 1);
            for (l, vi) in col[1..=last - j].iter_mut().zip(v[j + 1..=last].iter_mut()) {
                let nl = (*l + sigma * s * *vi) / c;
                *vi = c * *vi - s * nl;
                *l = nl;
            }
            v[j] = 0.0;
        }
        Ok(())
    }

    /// True if row and column `k` of `A` are the unit vector.
    pub fn is_decoupled(&self, k: usize) -> bool {
        let w = self.w();
        self.data[k * w] == 1.0
            && self.data[k * w + 1..k * w + w].iter().all(|v| *v == 0.0)
            && (k.saturating_sub(self.bw)..k).all(|j| self.data[j * w + (k - j)] == 0.0)
    }

    /// Turns the factor of `A` into that of `A` with row and column `k`
    /// replaced by `e_k`.
    pub fn decouple(&mut self, k: usize) -> Result<()> {
        let w = self.w();
        let last = (k + self.bw).min(self.n - 1);
        let mut v = vec![0.0; self.n];
        v[k + 1..=last].copy_from_slice(&self.data[k * w + 1..k * w + (last - k) + 1]);
        for j in k.saturating_sub(self.bw)..k {
            self.data[j * w + (k - j)] = 0.0;
        }
        self.data[k * w] = 1.0;
        for x in &mut self.data[k * w + 1..k * w + w] {
            *x = 0.0;
        }
        self.rank_one(&mut v, k + 1, false)
    }

    /// Inverse of [`decouple`](Self::decouple): index `k` must currently be
    /// decoupled; `row(j)` gives the new symmetric entries `A[k][j]` for
    /// `|j - k| <= bw` (including the diagonal).
    pub fn couple(&mut self, k: usize, row: impl Fn(usize) -> f64) -> Result<()> {
        let w = self.w();
        let bw = self.bw;
        let n = self.n;
        let s0 = k.saturating_sub(bw);
        // r = L11⁻¹ a_lower, supported on s0..k.
        let mut r = vec![0.0; k - s0];
        for j in s0..k {
            let mut acc = row(j);
            for m in j.saturating_sub(bw).max(s0)..j {
                acc -= self.data[m * w + (j - m)] * r[m - s0];
            }
            r[j - s0] = acc / self.data[j * w];
        }
        let lkk2 = row(k) - r.iter().map(|x| x * x).sum::<f64>();
        if lkk2.is_nan() || lkk2 <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: k, value: lkk2 });
        }
        let lkk = lkk2.sqrt();
        let last = (k + bw).min(n - 1);
        let mut m = vec![0.0; n];
        for i in k + 1..=last {
            let mut acc = row(i);
            for j in i.saturating_sub(bw).max(s0)..k {
                acc -= self.data[j * w + (i - j)] * r[j - s0];
            }
            m[i] = acc / lkk;
        }
        for j in s0..k {
            self.data[j * w + (k - j)] = r[j - s0];
        }
        self.data[k * w] = lkk;
        for i in k + 1..=last {
            self.data[k * w + (i - k)] = m[i];
        }
        self.rank_one(&mut m, k + 1, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random SPD band matrix: diagonally dominant with random band entries.
    fn random_spd(n: usize, bw: usize, seed: u64) -> SymBandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SymBandMatrix::zeros(n, bw);
        for j in 0..n {
            for i in j + 1..=(j + a.bandwidth()).min(n - 1) {
                a.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
            a.set(i, i, off + 0.5 + rng.random::<f64>());
        }
        a
    }

    fn dense(a: &SymBandMatrix) -> Vec<Vec<f64>> {
        (0..a.n()).map(|i| (0..a.n()).map(|j| a.get(i, j)).collect()).collect()
    }

    fn reconstruct(l: &BandedCholesky) -> Vec<Vec<f64>> {
        let n = l.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| l.entry(i, k) * l.entry(j, k)).sum())
                    .collect()
            })
            .collect()
    }

    fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn factor_reconstructs_and_solves() {
        for (n, bw) in [(1, 0), (5, 4), (12, 3), (30, 7)] {
            let a = random_spd(n, bw, n as u64);
            let l = BandedCholesky::factor(&a).unwrap();
            assert!(max_diff(&reconstruct(&l), &dense(&a)) < 1e-12);
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let mut b = a.matvec(&x);
            l.solve(&mut b);
            for (u, v) in b.iter().zip(&x) {
                assert!((u - v).abs() < 1e-10);
            }
            for k in 0..n {
                let col = l.inverse_column(k);
                assert!((col[k] - l.inverse_diagonal(k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SymBandMatrix::zeros(2, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(1, 0, 2.0);
        assert!(matches!(
            BandedCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn decouple_and_couple_match_refactorisation() {
        let n = 25;
        let bw = 4;
        let a = random_spd(n, bw, 7);
        let mut l = BandedCholesky::factor(&a).unwrap();
        let mut current = a.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut decoupled = vec![false; n];
        for _ in 0..60 {
            let k = rng.random_range(0..n);
            if decoupled[k] {
                let row = |j: usize| if decoupled[j] && j != k { 0.0 } else { a.get(k, j) };
                l.couple(k, row).unwrap();
                for j in k.saturating_sub(bw)..=(k + bw).min(n - 1) {
                    current.set(k, j, if decoupled[j] && j != k { 0.0 } else { a.get(k, j) });
                }
                decoupled[k] = false;
            } else {
                l.decouple(k).unwrap();
                for j in k.saturating_sub(bw)..=(k + bw).min(n - 1) {
                    current.set(k, j, if j == k { 1.0 } else { 0.0 });
                }
                decoupled[k] = true;
                assert!(l.is_decoupled(k));
            }
            assert!(max_diff(&reconstruct(&l), &dense(&current)) < 1e-10);
        }
    }

    #[test]
    fn rank_one_update_then_downdate_round_trips() {
        let a = random_spd(15, 3, 11);
        let l0 = BandedCholesky::factor(&a).unwrap();
        let mut l = l0.clone();
        let v: Vec<f64> = (0..15).map(|i| if (4..=6).contains(&i) { 0.3 } else { 0.0 }).collect();
        l.rank_one(&mut v.clone(), 4, false).unwrap();
        l.rank_one(&mut v.clone(), 4, true).unwrap();
        assert!(max_diff(&reconstruct(&l), &reconstruct(&l0)) < 1e-12);
    }
}
