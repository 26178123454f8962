//! Exact min-cost perfect assignment on a dense square cost matrix by
//! shortest augmenting paths with dual potentials.

/// Returns (total cost, row -> column assignment).
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0.0, vec![]);
    }
    for row in cost {
        assert_eq!(row.len(), n, "cost matrix must be square");
    }
    // 1-indexed internals; p[j] = row matched to column j
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![usize::MAX; n];
    let mut total = 0.0;
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    (total, assign)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let (total, assign) = min_cost_assignment(&cost);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn matches_bruteforce_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let cost: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
            let (total, assign) = min_cost_assignment(&cost);
            // brute force over permutations
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let c: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                if c < best {
                    best = c;
                }
            });
            assert!((total - best).abs() < 1e-9, "{total} vs {best}");
            // assignment is a permutation and reproduces the total
            let mut seen = vec![false; n];
            let mut recompute = 0.0;
            for (i, &j) in assign.iter().enumerate() {
                assert!(!seen[j]);
                seen[j] = true;
                recompute += cost[i][j];
            }
            assert!((recompute - total).abs() < 1e-12);
        }
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }
}
