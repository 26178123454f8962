//! Vector fields u: R^n -> R^n with value and gradient access, and the
//! named test-field library.

use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::maps::MapR2;
use crate::specstr::SpecStr;

/// Regularity class a field is declared to belong to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Smooth,
    Holder(f64),
    Sobolev { s: f64, p: f64 },
}

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> SquareMatrix + Send + Sync;

/// A map u: R^n -> R^n. Evaluators are pure functions; the struct is
/// immutable and cheap to clone (shared closures).
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    pub smoothness: Smoothness,
    fd_step: f64,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl VectorField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad: Option<Arc<GradFn>>,
        smoothness: Smoothness,
    ) -> Self {
        VectorField {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            grad,
            smoothness,
            fd_step: 1e-4,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Sets the central-difference step used when no analytic gradient is
    /// available (callers pass `domain.fd_step()`).
    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// Gradient matrix with entries (grad u)_{ij} = d_j u_i. Analytic when
    /// the field provides one, otherwise central differences.
    pub fn gradient(&self, x: &[f64]) -> SquareMatrix {
        match &self.grad {
            Some(g) => g(x),
            None => self.gradient_fd(x, self.fd_step),
        }
    }

    pub fn gradient_analytic(&self, x: &[f64]) -> Option<SquareMatrix> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn gradient_fd(&self, x: &[f64], h: f64) -> SquareMatrix {
        let n = self.dim;
        let mut m = SquareMatrix::zeros(n);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            let up = (self.eval)(&xp);
            let um = (self.eval)(&xm);
            for i in 0..n {
                m.set(i, j, (up[i] - um[i]) / (2.0 * h));
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        m
    }

    /// Finite-difference gradient with a boundary-proximity check: the
    /// stencil must stay inside the domain.
    pub fn gradient_fd_checked(&self, x: &[f64], h: f64, domain: &Domain) -> Result<SquareMatrix> {
        if domain.distance_to_boundary(x) <= h {
            return Err(Error::BoundaryProximity { x: x[0], y: x[1], h });
        }
        Ok(self.gradient_fd(x, h))
    }

    // --- constructors ---

    pub fn identity(n: usize) -> Self {
        VectorField::new(
            "identity",
            n,
            |x: &[f64]| x.to_vec(),
            Some(Arc::new(move |x: &[f64]| SquareMatrix::identity(x.len()))),
            Smoothness::Smooth,
        )
    }

    /// x -> A x + b in any dimension.
    pub fn affine(a: SquareMatrix, b: Vec<f64>) -> Self {
        let n = a.dim();
        assert_eq!(b.len(), n);
        let a2 = a.clone();
        VectorField::new(
            "affine",
            n,
            move |x: &[f64]| {
                let mut v = a.apply(x);
                for i in 0..v.len() {
                    v[i] += b[i];
                }
                v
            },
            Some(Arc::new(move |_x: &[f64]| a2.clone())),
            Smoothness::Smooth,
        )
    }

    /// Winding map w_k(r, theta) = r (cos k theta, sin k theta) in the plane.
    pub fn winding(k: i32) -> Self {
        let kf = k as f64;
        VectorField::new(
            format!("winding({k})"),
            2,
            move |x: &[f64]| {
                let r = x[0].hypot(x[1]);
                if r < 1e-300 {
                    return vec![0.0, 0.0];
                }
                let th = x[1].atan2(x[0]);
                vec![r * (kf * th).cos(), r * (kf * th).sin()]
            },
            Some(Arc::new(move |x: &[f64]| {
                let r = x[0].hypot(x[1]).max(1e-300);
                let (c, s) = (x[0] / r, x[1] / r);
                let th = x[1].atan2(x[0]);
                let (ck, sk) = ((kf * th).cos(), (kf * th).sin());
                SquareMatrix::from_rows(&[
                    &[ck * c + kf * sk * s, ck * s - kf * sk * c],
                    &[sk * c - kf * ck * s, sk * s + kf * ck * c],
                ])
            })),
            Smoothness::Smooth,
        )
    }

    /// x + eps (sin(pi x2), sin(pi x1)).
    pub fn perturbation(eps: f64) -> Self {
        use std::f64::consts::PI;
        VectorField::new(
            format!("perturbation({eps})"),
            2,
            move |x: &[f64]| vec![x[0] + eps * (PI * x[1]).sin(), x[1] + eps * (PI * x[0]).sin()],
            Some(Arc::new(move |x: &[f64]| {
                SquareMatrix::from_rows(&[
                    &[1.0, eps * PI * (PI * x[1]).cos()],
                    &[eps * PI * (PI * x[0]).cos(), 1.0],
                ])
            })),
            Smoothness::Smooth,
        )
    }

    /// Lacunary series field with Holder exponent `alpha`: component-wise
    /// partial sums of sum_j 2^{-alpha j} sin(2^j x) up to `level`.
    pub fn holder(alpha: f64, level: u32, amp: f64) -> Self {
        let freqs: Vec<f64> = (0..=level).map(|j| (2.0f64).powi(j as i32)).collect();
        let amps: Vec<f64> = (0..=level).map(|j| amp * (2.0f64).powf(-alpha * j as f64)).collect();
        let (f1, a1) = (freqs.clone(), amps.clone());
        VectorField::new(
            format!("holder({alpha},{level})"),
            2,
            move |x: &[f64]| {
                let mut u = [0.0, 0.0];
                for (f, a) in freqs.iter().zip(&amps) {
                    u[0] += a * (f * x[0]).sin();
                    u[1] += a * (f * x[1]).cos();
                }
                u.to_vec()
            },
            Some(Arc::new(move |x: &[f64]| {
                let mut d = [0.0, 0.0];
                for (f, a) in f1.iter().zip(&a1) {
                    d[0] += a * f * (f * x[0]).cos();
                    d[1] -= a * f * (f * x[1]).sin();
                }
                SquareMatrix::diag(&d)
            })),
            Smoothness::Holder(alpha),
        )
    }

    /// Radial fold x -> c (1 - |x|) x: non-injective, degree 0 off the
    /// critical circle |x| = 1/2.
    pub fn fold(c: f64) -> Self {
        VectorField::new(
            format!("fold({c})"),
            2,
            move |x: &[f64]| {
                let r = x[0].hypot(x[1]);
                vec![c * (1.0 - r) * x[0], c * (1.0 - r) * x[1]]
            },
            Some(Arc::new(move |x: &[f64]| {
                let r = x[0].hypot(x[1]);
                if r < 1e-12 {
                    return SquareMatrix::diag(&[c, c]);
                }
                let g = c * (1.0 - r);
                let q = -c / r;
                SquareMatrix::from_rows(&[
                    &[g + q * x[0] * x[0], q * x[0] * x[1]],
                    &[q * x[1] * x[0], g + q * x[1] * x[1]],
                ])
            })),
            Smoothness::Smooth,
        )
    }

    /// F o u for a change of variables F.
    pub fn compose(map: &MapR2, u: &VectorField) -> Self {
        assert_eq!(u.dim(), 2);
        let m = map.clone();
        let m2 = map.clone();
        let uu = u.clone();
        let u2 = u.clone();
        VectorField::new(
            format!("{}.{}", map.name, u.name),
            2,
            move |x: &[f64]| m.value(&uu.value(x)),
            Some(Arc::new(move |x: &[f64]| {
                let y = u2.value(x);
                m2.gradient(&y).matmul(&u2.gradient(x))
            })),
            u.smoothness,
        )
        .with_fd_step(u.fd_step)
    }

    /// u + c w, with the gradient combined the same way.
    pub fn add_scaled(u: &VectorField, w: &VectorField, c: f64) -> Self {
        assert_eq!(u.dim(), w.dim());
        let n = u.dim();
        let (ua, wa) = (u.clone(), w.clone());
        let (ub, wb) = (u.clone(), w.clone());
        let smooth = match (u.smoothness, w.smoothness) {
            (Smoothness::Smooth, Smoothness::Smooth) => Smoothness::Smooth,
            (Smoothness::Holder(a), _) | (_, Smoothness::Holder(a)) => Smoothness::Holder(a),
            (s, _) => s,
        };
        VectorField::new(
            format!("{}+{}*{}", u.name, c, w.name),
            n,
            move |x: &[f64]| {
                let mut v = ua.value(x);
                let wv = wa.value(x);
                for i in 0..v.len() {
                    v[i] += c * wv[i];
                }
                v
            },
            Some(Arc::new(move |x: &[f64]| {
                let mut g = ub.gradient(x);
                let wg = wb.gradient(x);
                for i in 0..g.dim() {
                    for j in 0..g.dim() {
                        g.set(i, j, g.get(i, j) + c * wg.get(i, j));
                    }
                }
                g
            })),
            smooth,
        )
        .with_fd_step(u.fd_step)
    }

    pub fn difference(u: &VectorField, v: &VectorField) -> Self {
        Self::add_scaled(u, v, -1.0).rename(format!("{}-{}", u.name, v.name))
    }

    fn rename(mut self, name: String) -> Self {
        self.name = name;
        self
    }

    /// Look up a field by spec string, e.g. `winding:k=2` or
    /// `holder:alpha=0.6:level=8`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let s = SpecStr::parse(spec)?;
        match s.name.as_str() {
            "identity" => {
                s.check_keys(&["n"])?;
                Ok(VectorField::identity(s.usize("n", 2)?))
            }
            "affine" => {
                s.check_keys(&["a11", "a12", "a21", "a22", "b1", "b2"])?;
                let a = SquareMatrix::from_rows(&[
                    &[s.f64("a11", 0.9)?, s.f64("a12", 0.25)?],
                    &[s.f64("a21", -0.2)?, s.f64("a22", 0.8)?],
                ]);
                Ok(VectorField::affine(a, vec![s.f64("b1", 0.05)?, s.f64("b2", -0.1)?]))
            }
            "winding" => {
                s.check_keys(&["k"])?;
                Ok(VectorField::winding(s.i64("k", 1)? as i32))
            }
            "perturbation" => {
                s.check_keys(&["eps"])?;
                Ok(VectorField::perturbation(s.f64("eps", 0.1)?))
            }
            "holder" => {
                s.check_keys(&["alpha", "level", "amp"])?;
                let alpha = s.f64("alpha", 0.6)?;
                if !(0.0 < alpha && alpha <= 1.0) {
                    return Err(Error::InvalidParameter(format!("holder alpha {alpha}")));
                }
                Ok(VectorField::holder(alpha, s.usize("level", 8)? as u32, s.f64("amp", 1.0)?))
            }
            "fold" => {
                s.check_keys(&["c"])?;
                Ok(VectorField::fold(s.f64("c", 1.4)?))
            }
            other => Err(Error::UnknownName(format!("field {other:?}"))),
        }
    }
}

/// The named collection of library fields used throughout the experiments.
pub fn field_library() -> Vec<VectorField> {
    let mut lib = vec![
        VectorField::identity(2),
        VectorField::from_spec("affine").unwrap(),
    ];
    for k in -2..=3 {
        lib.push(VectorField::winding(k));
    }
    lib.push(VectorField::perturbation(0.1));
    lib.push(VectorField::holder(0.6, 8, 1.0));
    lib.push(VectorField::fold(1.4));
    lib
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gradient() {
        let u = VectorField::identity(2);
        let g = u.gradient(&[0.3, -0.7]);
        assert_eq!(g, SquareMatrix::identity(2));
        assert_eq!(u.value(&[0.3, -0.7]), vec![0.3, -0.7]);
    }

    #[test]
    fn hand_differentiated_example() {
        // u(x) = (x1^2, x2) at (1, 1)
        let u = VectorField::new(
            "sq",
            2,
            |x: &[f64]| vec![x[0] * x[0], x[1]],
            Some(Arc::new(|x: &[f64]| {
                SquareMatrix::from_rows(&[&[2.0 * x[0], 0.0], &[0.0, 1.0]])
            })),
            Smoothness::Smooth,
        );
        let g = u.gradient(&[1.0, 1.0]);
        assert_eq!(g, SquareMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]));
    }

    #[test]
    fn winding_values_and_dets() {
        let w2 = VectorField::winding(2);
        // (r, theta) = (1, pi/4) -> (cos(pi/2), sin(pi/2)) = (0, 1)
        let p = [std::f64::consts::FRAC_PI_4.cos(), std::f64::consts::FRAC_PI_4.sin()];
        let v = w2.value(&p);
        assert!((v[0] - 0.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
        for k in [-2i32, -1, 1, 2, 3] {
            let w = VectorField::winding(k);
            for p in [[0.5, 0.1], [-0.3, 0.4], [0.2, -0.6]] {
                let det = w.gradient(&p).det();
                assert!((det - k as f64).abs() < 1e-12, "k={k} det={det}");
            }
        }
        // winding(1) is the identity in Cartesian form
        let w1 = VectorField::winding(1);
        let v = w1.value(&[0.3, -0.2]);
        assert!((v[0] - 0.3).abs() < 1e-14 && (v[1] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn fd_matches_analytic_at_second_order() {
        // halving h cuts the max discrepancy by a factor in [3.5, 4.5]
        let u = VectorField::new(
            "smooth",
            2,
            |x: &[f64]| vec![(x[0]).sin() * (x[1]).cos(), x[0] * x[1]],
            Some(Arc::new(|x: &[f64]| {
                SquareMatrix::from_rows(&[
                    &[x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()],
                    &[x[1], x[0]],
                ])
            })),
            Smoothness::Smooth,
        );
        let pts = [[0.3, 0.4], [1.0, -0.5], [-0.7, 0.2]];
        let gap = |h: f64| -> f64 {
            pts.iter()
                .map(|p| {
                    let a = u.gradient_analytic(p).unwrap();
                    let f = u.gradient_fd(p, h);
                    let mut m = 0.0f64;
                    for i in 0..2 {
                        for j in 0..2 {
                            m = m.max((a.get(i, j) - f.get(i, j)).abs());
                        }
                    }
                    m
                })
                .fold(0.0, f64::max)
        };
        let (g1, g2) = (gap(1e-3), gap(5e-4));
        let ratio = g1 / g2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fd_boundary_proximity() {
        let d = Domain::from_spec("square:res=8").unwrap();
        let u = VectorField::new(
            "nograd",
            2,
            |x: &[f64]| vec![x[0], x[1]],
            None,
            Smoothness::Smooth,
        );
        assert!(u.gradient_fd_checked(&[0.5, 0.5], 0.01, &d).is_ok());
        assert!(matches!(
            u.gradient_fd_checked(&[0.005, 0.5], 0.01, &d),
            Err(Error::BoundaryProximity { .. })
        ));
    }

    #[test]
    fn library_and_spec_lookup() {
        let lib = field_library();
        assert!(lib.iter().any(|f| f.name == "identity"));
        assert!(lib.iter().any(|f| f.name == "winding(-2)"));
        assert!(lib.iter().any(|f| f.name == "winding(3)"));
        assert!(VectorField::from_spec("vortex").is_err());
        let h = VectorField::from_spec("holder:alpha=0.6:level=8").unwrap();
        assert_eq!(h.smoothness, Smoothness::Holder(0.6));
        assert!(VectorField::from_spec("holder:alpha=1.5").is_err());
    }

    #[test]
    fn fold_gradient_consistent_with_fd() {
        let f = VectorField::fold(1.4);
        for p in [[0.3, 0.2], [0.6, -0.1], [-0.4, 0.5]] {
            let a = f.gradient_analytic(&p).unwrap();
            let fd = f.gradient_fd(&p, 1e-6);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a.get(i, j) - fd.get(i, j)).abs() < 1e-7);
                }
            }
            let r = p[0].hypot(p[1]);
            let want = 1.4 * 1.4 * (1.0 - 2.0 * r) * (1.0 - r);
            assert!((a.det() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_chain_rule() {
        let u = VectorField::perturbation(0.1);
        let f = MapR2::from_spec("sinshear:eps=0.2").unwrap();
        let fu = VectorField::compose(&f, &u);
        for p in [[0.3, 0.4], [0.7, 0.2]] {
            let a = fu.gradient_analytic(&p).unwrap();
            let fd = fu.gradient_fd(&p, 1e-6);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a.get(i, j) - fd.get(i, j)).abs() < 1e-7);
                }
            }
        }
    }
}
