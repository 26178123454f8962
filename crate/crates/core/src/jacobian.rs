//! The vector field j u = (1/n) (cof grad u)^T u, the distributional pairing
//! <Ju, psi> by its two quadrature routes, sphere projections u^a, and the
//! cofactor identity used as an algebraic property check.

use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::linalg::{pairwise_sum, SquareMatrix};
use crate::lipset::LipschitzSet;
use crate::testfn::TestFunction;

/// j u(x) = (1/n) (cof grad u(x))^T u(x); div j u = det grad u for smooth u.
pub fn j_field(u: &VectorField, x: &[f64]) -> Vec<f64> {
    let n = u.dim() as f64;
    let grad = u.gradient(x);
    let mut v = grad.cofactor().apply_transpose(&u.value(x));
    for c in v.iter_mut() {
        *c /= n;
    }
    v
}

/// Same from precomputed value and gradient.
pub fn j_from_parts(value: &[f64], grad: &SquareMatrix) -> Vec<f64> {
    let n = value.len() as f64;
    let mut v = grad.cofactor().apply_transpose(value);
    for c in v.iter_mut() {
        *c /= n;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    /// -sum w j u . grad psi (the distributional route).
    Divergence,
    /// sum w det(grad u) psi (the classical route; agrees for smooth u).
    Direct,
}

/// <Ju, psi> over the interior quadrature of the domain.
pub fn jacobian_pairing(
    u: &VectorField,
    psi: &TestFunction,
    domain: &Domain,
    mode: PairingMode,
) -> Result<f64> {
    let nodes = domain.interior_nodes();
    match mode {
        PairingMode::Divergence => {
            let f = psi.as_smooth()?;
            let terms: Vec<f64> = nodes
                .par_iter()
                .map(|(p, w)| {
                    let g = f.gradient(p);
                    if g[0] == 0.0 && g[1] == 0.0 {
                        return 0.0;
                    }
                    let j = j_field(u, p);
                    -w * (j[0] * g[0] + j[1] * g[1])
                })
                .collect();
            Ok(pairwise_sum(&terms))
        }
        PairingMode::Direct => {
            let terms: Vec<f64> = nodes
                .par_iter()
                .map(|(p, w)| {
                    let v = psi.value(p);
                    if v == 0.0 {
                        return 0.0;
                    }
                    w * u.gradient(p).det() * v
                })
                .collect();
            Ok(pairwise_sum(&terms))
        }
    }
}

/// <Jv, chi_E> computed as the boundary integral of j v . nu over the edge
/// quadrature of E (the divergence theorem applied to the indicator).
pub fn pairing_indicator(v: &VectorField, set: &LipschitzSet) -> f64 {
    let terms: Vec<f64> = set
        .boundary_nodes()
        .par_iter()
        .map(|b| {
            let j = j_field(v, &b.point);
            b.weight * (j[0] * b.normal[0] + j[1] * b.normal[1])
        })
        .collect();
    pairwise_sum(&terms)
}

/// Max over rows of | sum_j (cof grad u)_{ij} d_j psi - det(grad u with row i
/// replaced by grad psi) |; algebraically zero for any u, psi.
pub fn cofactor_identity_residual(u: &VectorField, psi_grad: &[f64], x: &[f64]) -> f64 {
    let grad = u.gradient(x);
    let n = grad.dim();
    let cof = grad.cofactor();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut lhs = 0.0;
        for j in 0..n {
            lhs += cof.get(i, j) * psi_grad[j];
        }
        let mut replaced = grad.clone();
        for j in 0..n {
            replaced.set(i, j, psi_grad[j]);
        }
        let rhs = replaced.det_cofactor_expansion();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// The sphere projection u^a(x) = (u(x) - a)/|u(x) - a| with analytic
/// chain-rule gradient. Evaluations inside the near-fiber threshold are
/// flagged so quadratures can exclude and count them.
#[derive(Debug, Clone)]
pub struct SphereProjection {
    base: VectorField,
    pub target: Vec<f64>,
    pub eps_sing: f64,
}

impl SphereProjection {
    /// `range_diameter` scales the singular-fiber threshold
    /// eps_sing = 1e-8 * range_diameter.
    pub fn new(base: VectorField, target: Vec<f64>, range_diameter: f64) -> Self {
        assert_eq!(base.dim(), target.len());
        SphereProjection { base, target, eps_sing: 1e-8 * range_diameter }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.base.value(x);
        for (vi, ai) in v.iter_mut().zip(&self.target) {
            *vi -= ai;
        }
        v
    }

    /// True when |u(x) - a| falls below the singular-fiber threshold.
    pub fn is_near_fiber(&self, x: &[f64]) -> bool {
        let v = self.shifted(x);
        v.iter().map(|c| c * c).sum::<f64>().sqrt() < self.eps_sing
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.shifted(x);
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint(x[0], x[1]));
        }
        for c in v.iter_mut() {
            *c /= r;
        }
        Ok(v)
    }

    /// grad u^a = (1/r) (I - v v^T) grad u with v = u^a(x), r = |u(x) - a|.
    pub fn gradient(&self, x: &[f64]) -> Result<SquareMatrix> {
        let shifted = self.shifted(x);
        let r = shifted.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::SingularPoint(x[0], x[1]));
        }
        let n = shifted.len();
        let vhat: Vec<f64> = shifted.iter().map(|c| c / r).collect();
        let gu = self.base.gradient(x);
        let mut proj = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                proj.set(i, j, (id - vhat[i] * vhat[j]) / r);
            }
        }
        Ok(proj.matmul(&gu))
    }

    /// j(u^a)(x), from the projected value and gradient.
    pub fn j_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.value(x)?;
        let g = self.gradient(x)?;
        Ok(j_from_parts(&v, &g))
    }
}

/// <Ju^a, chi_E> = boundary integral of j u^a . nu over the edge quadrature
/// of E. Nodes flagged near the fiber are skipped; the skip count is
/// returned alongside the value.
pub fn pairing_indicator_projected(proj: &SphereProjection, set: &LipschitzSet) -> (f64, usize) {
    let results: Vec<(f64, usize)> = set
        .boundary_nodes()
        .par_iter()
        .map(|b| {
            if proj.is_near_fiber(&b.point) {
                return (0.0, 1);
            }
            match proj.j_at(&b.point) {
                Ok(j) => (b.weight * (j[0] * b.normal[0] + j[1] * b.normal[1]), 0),
                Err(_) => (0.0, 1),
            }
        })
        .collect();
    let vals: Vec<f64> = results.iter().map(|r| r.0).collect();
    let skipped = results.iter().map(|r| r.1).sum();
    (pairwise_sum(&vals), skipped)
}
