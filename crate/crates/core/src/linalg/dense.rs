/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_columns(n: usize, mut column: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            let c = column(j);
            for (i, v) in c.into_iter().enumerate() {
                m.data[i * n + j] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self += alpha · u vᵀ`.
    pub fn rank_one_add(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        let n = self.n;
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let a = alpha * ui;
            for (dst, &vj) in self.data[i * n..(i + 1) * n].iter_mut().zip(v) {
                *dst += a * vj;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `log det` of a small symmetric positive definite matrix given row-major,
/// by an in-place Cholesky factorisation; `None` if a pivot is not positive.
pub fn cholesky_log_det(a: &mut [f64], n: usize) -> Option<f64> {
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        log_det += 2.0 * d.ln();
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Some(log_det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_small_matrices() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!((cholesky_log_det(&mut a, 2).unwrap() - 8f64.ln()).abs() < 1e-14);
        let mut b = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_log_det(&mut b, 2).is_none());
        assert_eq!(cholesky_log_det(&mut [], 0), Some(0.0));
    }

    #[test]
    fn rank_one_add_matches_outer_product() {
        let mut m = DenseMatrix::zeros(3);
        m.rank_one_add(2.0, &[1.0, 0.0, -1.0], &[0.5, 1.0, 0.0]);
        assert_eq!(m.row(0), &[1.0, 2.0, 0.0]);
        assert_eq!(m.row(2), &[-1.0, -2.0, 0.0]);
        assert_eq!(m.max_asymmetry(), 2.0);
    }
}
