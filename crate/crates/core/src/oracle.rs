//! Reference implementations used by the verification suite. Each one is an
//! independent route to a quantity the production code computes  another
//! way: a combinatorial enumeration of flat-norm matchings, the Kantorovich
//! dual as an explicit LP, and a McShane-extension realization of the dual
//! optimizer checked for feasibility on a grid. None of them share code with
//! the solvers they certify.

use crate::domain::Domain;
use crate::measures::AtomicMeasure;
use crate::simplex::simplex_max;

/// Minimum matching cost by exhaustive enumeration: every positive atom is
/// matched to an unused negative atom or to the boundary, leftovers go to
/// the boundary. Exponential, fine for the small oracle instances.
pub fn flat_norm_bruteforce(mu: &AtomicMeasure, domain: &Domain) -> f64 {
    let pos: Vec<[f64; 2]> =
        mu.atoms.iter().filter(|(_, s)| *s > 0).map(|(x, _)| *x).collect();
    let neg: Vec<[f64; 2]> =
        mu.atoms.iter().filter(|(_, s)| *s < 0).map(|(x, _)| *x).collect();
    let bdist =
        |x: &[f64; 2]| domain.distance_to_boundary(x).max(0.0);
    fn recurse(
        k: usize,
        pos: &[[f64; 2]],
        neg: &[[f64; 2]],
        used: &mut Vec<bool>,
        bdist: &dyn Fn(&[f64; 2]) -> f64,
    ) -> f64 {
        if k == pos.len() {
            // remaining negatives pay their boundary distance
            return neg
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(y, _)| bdist(y))
                .sum();
        }
        let mut best = bdist(&pos[k]) + recurse(k + 1, pos, neg, used, bdist);
        for j in 0..neg.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let d = (pos[k][0] - neg[j][0]).hypot(pos[k][1] - neg[j][1]);
            best = best.min(d + recurse(k + 1, pos, neg, used, bdist));
            used[j] = false;
        }
        best
    }
    let mut used = vec![false; neg.len()];
    mu.scale * recurse(0, &pos, &neg, &mut used, &bdist)
}

/// The Kantorovich dual as an LP: maximize sum sigma_i psi_i over potentials
/// at the atom sites subject to the pairwise Euclidean Lipschitz constraints
/// |psi_i - psi_j| <= |x_i - x_j| and the boundary caps |psi_i| <= dist(x_i,
/// boundary) that encode compact support. By duality this equals the minimum
/// matching cost.
pub fn flat_norm_lp_dual(mu: &AtomicMeasure, domain: &Domain) -> f64 {
    let m = mu.atoms.len();
    if m == 0 {
        return 0.0;
    }
    // free psi_i split into psi_i = a_i - b_i with a, b >= 0
    let nv = 2 * m;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut push = |coef: Vec<(usize, f64)>, b: f64| {
        let mut row = vec![0.0; nv];
        for (i, c) in coef {
            row[i] += c; // a_i
            row[m + i] -= c; // -b_i
        }
        rows.push(row);
        rhs.push(b);
    };
    for i in 0..m {
        for j in i + 1..m {
            let (xi, xj) = (mu.atoms[i].0, mu.atoms[j].0);
            let d = (xi[0] - xj[0]).hypot(xi[1] - xj[1]);
            push(vec![(i, 1.0), (j, -1.0)], d);
            push(vec![(i, -1.0), (j, 1.0)], d);
        }
        let cap = domain.distance_to_boundary(&mu.atoms[i].0).max(0.0);
        push(vec![(i, 1.0)], cap);
        push(vec![(i, -1.0)], cap);
    }
    let mut c = vec![0.0; nv];
    for (i, (_, s)) in mu.atoms.iter().enumerate() {
        c[i] = *s as f64;
        c[m + i] = -*s as f64;
    }
    let (val, _x) = simplex_max(&c, &rows, &rhs).expect("dual LP is bounded by the caps");
    mu.scale * val
}

/// Optimal dual potentials at the atoms (same LP, returning psi).
pub fn flat_norm_dual_potentials(mu: &AtomicMeasure, domain: &Domain) -> Vec<f64> {
    let m = mu.atoms.len();
    if m == 0 {
        return vec![];
    }
    let nv = 2 * m;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut push = |coef: Vec<(usize, f64)>, b: f64| {
        let mut row = vec![0.0; nv];
        for (i, c) in coef {
            row[i] += c;
            row[m + i] -= c;
        }
        rows.push(row);
        rhs.push(b);
    };
    for i in 0..m {
        for j in i + 1..m {
            let (xi, xj) = (mu.atoms[i].0, mu.atoms[j].0);
            let d = (xi[0] - xj[0]).hypot(xi[1] - xj[1]);
            push(vec![(i, 1.0), (j, -1.0)], d);
            push(vec![(i, -1.0), (j, 1.0)], d);
        }
        let cap = domain.distance_to_boundary(&mu.atoms[i].0).max(0.0);
        push(vec![(i, 1.0)], cap);
        push(vec![(i, -1.0)], cap);
    }
    let mut c = vec![0.0; nv];
    for (i, (_, s)) in mu.atoms.iter().enumerate() {
        c[i] = *s as f64;
        c[m + i] = -*s as f64;
    }
    let (_val, x) = simplex_max(&c, &rows, &rhs).expect("dual LP is bounded");
    (0..m).map(|i| x[i] - x[m + i]).collect()
}

/// Realizes dual potentials as a concrete Lip-1 function on the whole domain
/// (McShane extension clipped by the distance to the boundary), evaluates
/// the pairing it attains, and measures its Lipschitz constant on a grid.
/// Returns (attained pairing value, grid Lipschitz constant).
pub fn mcshane_realization(
    mu: &AtomicMeasure,
    potentials: &[f64],
    domain: &Domain,
    grid: usize,
) -> (f64, f64) {
    let psi = |x: &[f64; 2]| -> f64 {
        let mut v = f64::INFINITY;
        for ((xa, _), &p) in mu.atoms.iter().zip(potentials) {
            v = v.min(p + (x[0] - xa[0]).hypot(x[1] - xa[1]));
        }
        let cap = domain.distance_to_boundary(x).max(0.0);
        v.clamp(-cap, cap)
    };
    let attained: f64 = mu.scale
        * mu.atoms
            .iter()
            .map(|(x, s)| *s as f64 * psi(x))
            .sum::<f64>();
    let (lo, hi) = domain.bbox();
    let h = [
        (hi[0] - lo[0]) / grid as f64,
        (hi[1] - lo[1]) / grid as f64,
    ];
    let mut lip = 0.0f64;
    let mut vals = vec![0.0; (grid + 1) * (grid + 1)];
    for j in 0..=grid {
        for i in 0..=grid {
            vals[j * (grid + 1) + i] = psi(&[lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]]);
        }
    }
    for j in 0..=grid {
        for i in 0..=grid {
            let v = vals[j * (grid + 1) + i];
            if i + 1 <= grid {
                lip = lip.max((vals[j * (grid + 1) + i + 1] - v).abs() / h[0]);
            }
            if j + 1 <= grid {
                lip = lip.max((vals[(j + 1) * (grid + 1) + i] - v).abs() / h[1]);
            }
        }
    }
    (attained, lip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::flat_norm;
    use rand::{Rng, SeedableRng};

    fn random_measure(rng: &mut impl Rng, max_atoms: usize) -> AtomicMeasure {
        let n = rng.gen_range(1..=max_atoms);
        AtomicMeasure::new(
            (0..n)
                .map(|_| {
                    (
                        [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)],
                        if rng.gen_bool(0.5) { 1i8 } else { -1 },
                    )
                })
                .collect(),
            1.0,
        )
    }

    #[test]
    fn three_routes_agree() {
        let d = Domain::from_spec("square:res=8").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let mu = random_measure(&mut rng, 6);
            let solver = flat_norm(&mu, &d).value;
            let brute = flat_norm_bruteforce(&mu, &d);
            let dual = flat_norm_lp_dual(&mu, &d);
            assert!((solver - brute).abs() < 1e-9, "solver {solver} brute {brute}");
            assert!((solver - dual).abs() < 1e-7, "solver {solver} dual {dual}");
        }
    }

    #[test]
    fn mcshane_realizes_the_dual_value() {
        let d = Domain::from_spec("square:res=8").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mu = random_measure(&mut rng, 5);
            let value = flat_norm(&mu, &d).value;
            let pots = flat_norm_dual_potentials(&mu, &d);
            let (attained, lip) = mcshane_realization(&mu, &pots, &d, 60);
            assert!(lip <= 1.0 + 1e-9, "grid Lipschitz constant {lip}");
            assert!((attained - value).abs() < 1e-6, "attained {attained} vs {value}");
        }
    }

    #[test]
    fn dipole_closed_form() {
        let d = Domain::from_spec("square:res=8").unwrap();
        let mu = AtomicMeasure::new(vec![([0.2, 0.5], 1), ([0.6, 0.5], -1)], 1.0);
        let want = 0.4f64.min(0.2 + 0.4);
        assert!((flat_norm_bruteforce(&mu, &d) - want).abs() < 1e-12);
        assert!((flat_norm_lp_dual(&mu, &d) - want).abs() < 1e-9);
    }
}
