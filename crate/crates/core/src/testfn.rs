//! Test functions: compactly supported smooth bumps and indicators of
//! Lipschitz sets.

use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::lipset::LipschitzSet;
use crate::specstr::SpecStr;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> [f64; 2] + Send + Sync;

/// A smooth compactly supported test function with gradient access.
#[derive(Clone)]
pub struct SmoothTestFn {
    pub name: String,
    eval: Arc<ScalarFn>,
    grad: Arc<GradFn>,
    /// Declared sup-norm bound.
    pub sup_bound: f64,
    /// Analytic integral over the plane, when known.
    pub integral: Option<f64>,
    /// Support center and radius for bump-like functions.
    pub support: Option<([f64; 2], f64)>,
}

impl std::fmt::Debug for SmoothTestFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmoothTestFn({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum TestFunction {
    Smooth(SmoothTestFn),
    Indicator(LipschitzSet),
}

impl SmoothTestFn {
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        (self.grad)(x)
    }

    /// amp (1 - |x-c|^2/r^2)^3 inside the ball of radius r, zero outside.
    pub fn bump(center: [f64; 2], radius: f64, amp: f64) -> Self {
        let (c, r) = (center, radius);
        let r2 = r * r;
        SmoothTestFn {
            name: format!("bump(c=({},{}),r={r},amp={amp})", c[0], c[1]),
            eval: Arc::new(move |x: &[f64]| {
                let rho2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / r2;
                if rho2 >= 1.0 {
                    0.0
                } else {
                    amp * (1.0 - rho2).powi(3)
                }
            }),
            grad: Arc::new(move |x: &[f64]| {
                let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                let rho2 = (dx * dx + dy * dy) / r2;
                if rho2 >= 1.0 {
                    [0.0, 0.0]
                } else {
                    let f = -6.0 * amp * (1.0 - rho2).powi(2) / r2;
                    [f * dx, f * dy]
                }
            }),
            sup_bound: amp.abs(),
            // int (1-rho^2)^3 over the ball = pi r^2 / 4
            integral: Some(amp * std::f64::consts::PI * r2 / 4.0),
            support: Some((c, r)),
        }
    }

    /// C^1 plateau on an axis-aligned rectangle: smoothstep ramps of width
    /// `ramp` on each side, identically `amp` in the middle, zero outside.
    pub fn plateau(lo: [f64; 2], hi: [f64; 2], ramp: f64, amp: f64) -> Self {
        fn edge(v: f64, lo: f64, hi: f64, w: f64) -> (f64, f64) {
            // value and derivative of the 1d plateau profile
            if v <= lo || v >= hi {
                (0.0, 0.0)
            } else if v < lo + w {
                let t = (v - lo) / w;
                (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t) / w)
            } else if v > hi - w {
                let t = (hi - v) / w;
                (t * t * (3.0 - 2.0 * t), -6.0 * t * (1.0 - t) / w)
            } else {
                (1.0, 0.0)
            }
        }
        let w = ramp.min(0.49 * (hi[0] - lo[0])).min(0.49 * (hi[1] - lo[1]));
        let (l, h) = (lo, hi);
        SmoothTestFn {
            name: format!("plateau([{},{}]x[{},{}])", l[0], h[0], l[1], h[1]),
            eval: Arc::new(move |x: &[f64]| {
                let (fx, _) = edge(x[0], l[0], h[0], w);
                let (fy, _) = edge(x[1], l[1], h[1], w);
                amp * fx * fy
            }),
            grad: Arc::new(move |x: &[f64]| {
                let (fx, dx) = edge(x[0], l[0], h[0], w);
                let (fy, dy) = edge(x[1], l[1], h[1], w);
                [amp * dx * fy, amp * fx * dy]
            }),
            sup_bound: amp.abs(),
            integral: None,
            support: None,
        }
    }

    /// Checks compact support inside the domain: the function and gradient
    /// vanish on all boundary quadrature nodes and |psi| stays within the
    /// declared bound on interior nodes.
    pub fn check_support(&self, domain: &Domain) -> Result<()> {
        if let Some((c, r)) = self.support {
            if domain.distance_to_boundary(&c) <= r {
                return Err(Error::InvalidGeometry(format!(
                    "support ball of {} reaches the boundary",
                    self.name
                )));
            }
        }
        for b in domain.boundary_nodes() {
            let v = self.value(&b.point);
            let g = self.gradient(&b.point);
            if v.abs() > 1e-12 || g[0].abs() > 1e-12 || g[1].abs() > 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "{} does not vanish at boundary node ({}, {})",
                    self.name, b.point[0], b.point[1]
                )));
            }
        }
        for (p, _) in domain.interior_nodes() {
            if self.value(p).abs() > self.sup_bound * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "{} exceeds its declared sup bound at ({}, {})",
                    self.name, p[0], p[1]
                )));
            }
        }
        Ok(())
    }
}

impl TestFunction {
    pub fn bump(center: [f64; 2], radius: f64, amp: f64) -> Self {
        TestFunction::Smooth(SmoothTestFn::bump(center, radius, amp))
    }

    pub fn indicator(set: LipschitzSet) -> Self {
        TestFunction::Indicator(set)
    }

    pub fn as_smooth(&self) -> Result<&SmoothTestFn> {
        match self {
            TestFunction::Smooth(f) => Ok(f),
            TestFunction::Indicator(_) => Err(Error::Unsupported(
                "indicator test function where a smooth one is required".into(),
            )),
        }
    }

    /// Pointwise value (indicator kind evaluates the membership function).
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Smooth(f) => f.value(x),
            TestFunction::Indicator(e) => {
                if e.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `bump:cx=0.5:cy=0.5:r=0.3:amp=1`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let s = SpecStr::parse(spec)?;
        match s.name.as_str() {
            "bump" => {
                s.check_keys(&["cx", "cy", "r", "amp"])?;
                Ok(TestFunction::bump(
                    [s.f64("cx", 0.5)?, s.f64("cy", 0.5)?],
                    s.f64("r", 0.3)?,
                    s.f64("amp", 1.0)?,
                ))
            }
            other => Err(Error::UnknownName(format!("test function {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_gradient_matches_fd() {
        let f = SmoothTestFn::bump([0.5, 0.5], 0.3, 2.0);
        let h = 1e-6;
        for p in [[0.5, 0.5], [0.6, 0.45], [0.72, 0.5]] {
            let g = f.gradient(&p);
            let gx = (f.value(&[p[0] + h, p[1]]) - f.value(&[p[0] - h, p[1]])) / (2.0 * h);
            let gy = (f.value(&[p[0], p[1] + h]) - f.value(&[p[0], p[1] - h])) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
        }
    }

    #[test]
    fn bump_integral_matches_quadrature() {
        let d = Domain::from_spec("square:res=64").unwrap();
        let f = SmoothTestFn::bump([0.5, 0.5], 0.3, 1.5);
        let quad: f64 = d.interior_nodes().iter().map(|(p, w)| w * f.value(p)).sum();
        let exact = f.integral.unwrap();
        // the profile is C^2 at the support edge, so the rule is not spectral
        assert!((quad - exact).abs() < 1e-4 * exact, "{quad} vs {exact}");
    }

    #[test]
    fn support_check() {
        let d = Domain::from_spec("square:res=16").unwrap();
        assert!(SmoothTestFn::bump([0.5, 0.5], 0.3, 1.0).check_support(&d).is_ok());
        assert!(SmoothTestFn::bump([0.9, 0.5], 0.3, 1.0).check_support(&d).is_err());
    }

    #[test]
    fn plateau_profile() {
        let f = SmoothTestFn::plateau([0.0, 0.0], [1.0, 1.0], 0.1, 1.0);
        assert_eq!(f.value(&[0.5, 0.5]), 1.0);
        assert_eq!(f.value(&[-0.1, 0.5]), 0.0);
        assert!(f.value(&[0.05, 0.5]) > 0.0 && f.value(&[0.05, 0.5]) < 1.0);
        // C^1 at the seams: fd gradient continuous through the ramp edge
        let h = 1e-7;
        let g = f.gradient(&[0.05, 0.5]);
        let fd = (f.value(&[0.05 + h, 0.5]) - f.value(&[0.05 - h, 0.5])) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-5);
    }

    #[test]
    fn spec_and_indicator() {
        let t = TestFunction::from_spec("bump:cx=0:cy=0:r=0.5").unwrap();
        assert!(t.as_smooth().is_ok());
        assert!(TestFunction::from_spec("spike").is_err());
        let d = Domain::from_spec("disk:r=1:res=16").unwrap();
        let e = LipschitzSet::circle([0.0, 0.0], 0.4, 64, &d).unwrap();
        let ind = TestFunction::indicator(e);
        assert_eq!(ind.value(&[0.0, 0.0]), 1.0);
        assert_eq!(ind.value(&[0.9, 0.0]), 0.0);
        assert!(ind.as_smooth().is_err());
    }
}
