//! Small dense linear algebra: square matrices with cofactor/determinant
//! routines in general dimension, and vector helpers.

use std::f64::consts::PI;

/// Row-major n-by-n real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        SquareMatrix { n, data }
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
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

    /// Row i as a slice (the gradient of the i-th component for Jacobians).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Matrix-vector product M x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.get(i, j) * x[j];
            }
            out[i] = s;
        }
        out
    }

    /// M^T x without forming the transpose.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.get(i, j) * x[i];
            }
            out[j] = s;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        SquareMatrix { n: self.n, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n - 1);
        let mut r = 0;
        for i in 0..n {
            if i == drop_row {
                continue;
            }
            let mut c = 0;
            for j in 0..n {
                if j == drop_col {
                    continue;
                }
                out.set(r, c, self.get(i, j));
                c += 1;
            }
            r += 1;
        }
        out
    }

    /// Determinant by cofactor expansion along the first row.
    ///
    /// Exponential in n; fine for the n <= 4 used here and kept as the
    /// algebraic route that the LU determinant is checked against.
    pub fn det_cofactor_expansion(&self) -> f64 {
        let n = self.n;
        match n {
            0 => 1.0,
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {
                let mut det = 0.0;
                let mut sign = 1.0;
                for j in 0..n {
                    det += sign * self.get(0, j) * self.minor(0, j).det_cofactor_expansion();
                    sign = -sign;
                }
                det
            }
        }
    }

    /// Determinant by partially pivoted LU.
    pub fn det_lu(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det *= d;
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        det
    }

    pub fn det(&self) -> f64 {
        if self.n <= 3 {
            self.det_cofactor_expansion()
        } else {
            self.det_lu()
        }
    }

    /// Cofactor matrix: (cof M)_{ij} = (-1)^{i+j} det(minor_{ij}).
    ///
    /// Satisfies M (cof M)^T = det(M) I; defined for singular M too.
    pub fn cofactor(&self) -> Self {
        let n = self.n;
        if n == 1 {
            return Self::from_rows(&[&[1.0]]);
        }
        if n == 2 {
            let (a, b, c, d) = (self.data[0], self.data[1], self.data[2], self.data[3]);
            return Self::from_rows(&[&[d, -c], &[-b, a]]);
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                out.set(i, j, sign * self.minor(i, j).det_cofactor_expansion());
            }
        }
        out
    }

    /// Solve M x = b by the same pivoted LU as `det_lu`. Returns None for
    /// (numerically) singular M.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                x.swap(k, piv);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        Some(x)
    }
}

/// Volume of the n-dimensional unit ball, from the Gamma closed form
/// pi^{n/2} / Gamma(n/2 + 1) evaluated exactly at half-integers.
pub fn unit_ball_volume(n: usize) -> f64 {
    // Gamma(n/2 + 1) via Gamma(1) = 1, Gamma(3/2) = sqrt(pi)/2 and the
    // functional equation Gamma(z + 1) = z Gamma(z).
    let mut gamma = if n % 2 == 0 { 1.0 } else { PI.sqrt() / 2.0 };
    let mut z = if n % 2 == 0 { 1.0 } else { 1.5 };
    while z < n as f64 / 2.0 + 1.0 - 0.25 {
        gamma *= z;
        z += 1.0;
    }
    PI.powf(n as f64 / 2.0) / gamma
}

// --- vector helpers (points are slices of length n) ---

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale_vec(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise (tree) summation; the result depends only on element order,
/// never on how the work was split across threads.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_identity_is_identity() {
        let i2 = SquareMatrix::identity(2);
        assert_eq!(i2.cofactor(), i2);
    }

    #[test]
    fn cofactor_2x2_closed_form() {
        let m = SquareMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let c = m.cofactor();
        assert_eq!(c, SquareMatrix::from_rows(&[&[4.0, -3.0], &[-2.0, 1.0]]));
    }

    #[test]
    fn cofactor_diag_3x3() {
        let m = SquareMatrix::diag(&[2.0, 3.0, 4.0]);
        let c = m.cofactor();
        assert_eq!(c, SquareMatrix::diag(&[12.0, 8.0, 6.0]));
    }

    #[test]
    fn cofactor_product_identity() {
        // M cof(M)^T = det(M) I, entrywise within 1e-10 for moderate norms
        let cases = [
            SquareMatrix::from_rows(&[&[3.0, -1.0], &[2.0, 5.0]]),
            SquareMatrix::from_rows(&[&[1.0, 2.0, 0.5], &[-3.0, 0.0, 1.0], &[2.0, 2.0, 2.0]]),
            SquareMatrix::from_rows(&[&[1.0, 1.0], &[2.0, 2.0]]), // singular
        ];
        for m in &cases {
            let n = m.dim();
            let prod = m.matmul(&m.cofactor().transpose());
            let det = m.det();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { det } else { 0.0 };
                    assert!((prod.get(i, j) - want).abs() < 1e-10, "{prod:?} vs det {det}");
                }
            }
        }
    }

    #[test]
    fn det_routes_agree() {
        let m = SquareMatrix::from_rows(&[
            &[2.0, -1.0, 0.5, 1.0],
            &[1.0, 3.0, -2.0, 0.0],
            &[0.0, 1.0, 4.0, -1.0],
            &[1.0, 0.0, 1.0, 2.0],
        ]);
        let a = m.det_cofactor_expansion();
        let b = m.det_lu();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn cofactor_of_transpose_is_transpose_of_cofactor() {
        let m = SquareMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[0.0, -1.0, 4.0], &[2.0, 2.0, 1.0]]);
        let a = m.transpose().cofactor();
        let b = m.cofactor().transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_roundtrip() {
        let m = SquareMatrix::from_rows(&[&[4.0, 1.0], &[2.0, 3.0]]);
        let x = m.solve(&[1.0, 2.0]).unwrap();
        let b = m.apply(&x);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        let sing = SquareMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(sing.solve(&[1.0, 0.0]).is_none());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn pairwise_sum_matches_sequential() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let seq: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - seq).abs() < 1e-9);
    }
}
