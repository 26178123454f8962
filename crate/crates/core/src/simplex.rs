//! Dense tableau simplex for small LPs: maximize c.x subject to A x <= b,
//! x >= 0, with b >= 0 so the slack basis is immediately feasible. Bland's
//! rule prevents cycling. Sized for the flat-norm duality oracle (tens of
//! variables and constraints).

/// Returns (optimal value, optimal x) or None if unbounded.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m);
    for (row, &bi) in a.iter().zip(b) {
        assert_eq!(row.len(), n);
        assert!(bi >= -1e-12, "b must be nonnegative for the slack start");
    }
    // tableau: m rows of [A | I | b], objective row [-c | 0 | 0]
    let w = n + m + 1;
    let mut t = vec![vec![0.0f64; w]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][w - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = 1e-11;
    for _round in 0..10_000 {
        // Bland: entering = smallest index with negative reduced cost
        let Some(pivot_col) = (0..w - 1).find(|&j| t[m][j] < -eps) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i][w - 1];
                }
            }
            return Some((t[m][w - 1], x));
        };
        // leaving: min ratio, ties by smallest basis index
        let mut pivot_row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][pivot_col] > eps {
                let ratio = t[i][w - 1] / t[i][pivot_col];
                if ratio < best - eps
                    || (ratio < best + eps
                        && pivot_row.is_some_and(|r: usize| basis[i] < basis[r]))
                {
                    best = ratio;
                    pivot_row = Some(i);
                }
            }
        }
        let Some(r) = pivot_row else {
            return None; // unbounded
        };
        let piv = t[r][pivot_col];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i][pivot_col];
            if f.abs() < eps {
                continue;
            }
            for j in 0..w {
                t[i][j] -= f * t[r][j];
            }
        }
        basis[r] = pivot_col;
    }
    panic!("simplex did not terminate");
}
