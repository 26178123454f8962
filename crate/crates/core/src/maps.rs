//! Globally Lipschitz changes of variables F: R^2 -> R^2 used by the chain
//! rule experiments.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::specstr::SpecStr;

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> SquareMatrix + Send + Sync;

/// A C^1, globally Lipschitz map with analytic gradient.
#[derive(Clone)]
pub struct MapR2 {
    pub name: String,
    eval: Arc<EvalFn>,
    grad: Arc<GradFn>,
    /// Declared global Lipschitz bound.
    pub lipschitz: f64,
}

impl std::fmt::Debug for MapR2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MapR2({}, Lip<={})", self.name, self.lipschitz)
    }
}

impl MapR2 {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> SquareMatrix + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Self {
        MapR2 { name: name.into(), eval: Arc::new(eval), grad: Arc::new(grad), lipschitz }
    }

    pub fn value(&self, y: &[f64]) -> Vec<f64> {
        (self.eval)(y)
    }

    pub fn gradient(&self, y: &[f64]) -> SquareMatrix {
        (self.grad)(y)
    }

    pub fn det_gradient(&self, y: &[f64]) -> f64 {
        self.gradient(y).det()
    }

    pub fn identity() -> Self {
        MapR2::new(
            "identity",
            |y: &[f64]| y.to_vec(),
            |y: &[f64]| SquareMatrix::identity(y.len()),
            1.0,
        )
    }

    /// Linear map diag(c, 1): det = c everywhere.
    pub fn linear(c: f64) -> Self {
        MapR2::new(
            format!("linear({c})"),
            move |y: &[f64]| vec![c * y[0], y[1]],
            move |_y: &[f64]| SquareMatrix::diag(&[c, 1.0]),
            c.abs().max(1.0),
        )
    }

    /// y + eps (sin y2, sin y1).
    pub fn sin_shear(eps: f64) -> Self {
        MapR2::new(
            format!("sinshear({eps})"),
            move |y: &[f64]| vec![y[0] + eps * y[1].sin(), y[1] + eps * y[0].sin()],
            move |y: &[f64]| {
                SquareMatrix::from_rows(&[&[1.0, eps * y[1].cos()], &[eps * y[0].cos(), 1.0]])
            },
            1.0 + eps.abs(),
        )
    }

    /// (y1 + eps tanh y2, y2 + eps tanh y1).
    pub fn tanh_shear(eps: f64) -> Self {
        MapR2::new(
            format!("tanhshear({eps})"),
            move |y: &[f64]| vec![y[0] + eps * y[1].tanh(), y[1] + eps * y[0].tanh()],
            move |y: &[f64]| {
                let s2 = |t: f64| {
                    let c = t.cosh();
                    1.0 / (c * c)
                };
                SquareMatrix::from_rows(&[&[1.0, eps * s2(y[1])], &[eps * s2(y[0]), 1.0]])
            },
            1.0 + eps.abs(),
        )
    }

    /// Component-wise arctangent; det = 1 / ((1+y1^2)(1+y2^2)).
    pub fn atan() -> Self {
        MapR2::new(
            "atan",
            |y: &[f64]| vec![y[0].atan(), y[1].atan()],
            |y: &[f64]| {
                SquareMatrix::diag(&[1.0 / (1.0 + y[0] * y[0]), 1.0 / (1.0 + y[1] * y[1])])
            },
            1.0,
        )
    }

    pub fn from_spec(spec: &str) -> Result<Self> {
        let s = SpecStr::parse(spec)?;
        match s.name.as_str() {
            "identity" => Ok(MapR2::identity()),
            "linear" => {
                s.check_keys(&["c"])?;
                Ok(MapR2::linear(s.f64("c", 2.0)?))
            }
            "sinshear" => {
                s.check_keys(&["eps"])?;
                Ok(MapR2::sin_shear(s.f64("eps", 0.1)?))
            }
            "tanhshear" => {
                s.check_keys(&["eps"])?;
                Ok(MapR2::tanh_shear(s.f64("eps", 0.2)?))
            }
            "atan" => Ok(MapR2::atan()),
            other => Err(Error::UnknownName(format!("map {other:?}"))),
        }
    }

    /// Samples random point pairs and checks |F(x)-F(y)| <= L |x-y|.
    pub fn check_lipschitz(&self, pairs: usize, box_half: f64, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pairs {
            let a = [rng.gen_range(-box_half..box_half), rng.gen_range(-box_half..box_half)];
            let b = [rng.gen_range(-box_half..box_half), rng.gen_range(-box_half..box_half)];
            let (fa, fb) = (self.value(&a), self.value(&b));
            let dv = ((fa[0] - fb[0]).powi(2) + (fa[1] - fb[1]).powi(2)).sqrt();
            let dx = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if dv > self.lipschitz * dx * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "map {} violates its Lipschitz bound {}: ratio {}",
                    self.name,
                    self.lipschitz,
                    dv / dx
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_bounds_hold_on_samples() {
        for spec in ["identity", "linear:c=3", "sinshear:eps=0.1", "tanhshear:eps=0.2", "atan"] {
            let f = MapR2::from_spec(spec).unwrap();
            f.check_lipschitz(10_000, 5.0, 7).unwrap();
        }
    }

    #[test]
    fn gradients_match_fd() {
        for spec in ["sinshear:eps=0.15", "tanhshear:eps=0.3", "atan"] {
            let f = MapR2::from_spec(spec).unwrap();
            let h = 1e-6;
            for p in [[0.3, -0.8], [1.2, 0.4]] {
                let g = f.gradient(&p);
                for j in 0..2 {
                    let mut pp = p;
                    let mut pm = p;
                    pp[j] += h;
                    pm[j] -= h;
                    let (vp, vm) = (f.value(&pp), f.value(&pm));
                    for i in 0..2 {
                        let fd = (vp[i] - vm[i]) / (2.0 * h);
                        assert!((g.get(i, j) - fd).abs() < 1e-7, "{spec} d{i}{j}");
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_map_rejected() {
        assert!(MapR2::from_spec("mobius").is_err());
    }
}
