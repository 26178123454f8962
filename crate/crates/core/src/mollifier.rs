//! Radial mollifiers and the half-cylinder extension U(x,t) = (eta_t * u~)(x).
//!
//! The convolution is a midpoint rule over the kernel support, written in the
//! scaled variable z = t zhat so one precomputed reference quadrature serves
//! every t. Value weights are normalized to unit mass and derivative weights
//! are centered, so constants are reproduced exactly and affine fields up to
//! the kernel quadrature error. Spatial and t derivatives fall on the kernel
//! side: evaluating them needs only field values, never field derivatives,
//! which keeps everything well defined for rough fields.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::domain::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::field::{Smoothness, VectorField};
use crate::linalg::SquareMatrix;

/// Normalization of exp(-1/(1-|x|^2)) on the plane, fixed once at high
/// quadrature resolution.
const EXP_BUMP_NORM_2D: f64 = 2.143_565_775_792_236_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierProfile {
    /// c exp(-1/(1-|x|^2)) on |x| < 1.
    ExpBump,
    /// (4/pi)(1-|x|^2)^3 on |x| < 1.
    PolyBump,
}

/// A radial bump with unit mass supported in the unit ball; eta_t is the
/// rescaling t^{-n} eta(./t).
#[derive(Debug, Clone, Copy)]
pub struct Mollifier {
    pub profile: MollifierProfile,
}

impl Mollifier {
    pub fn standard() -> Self {
        Mollifier { profile: MollifierProfile::ExpBump }
    }

    pub fn polynomial() -> Self {
        Mollifier { profile: MollifierProfile::PolyBump }
    }

    /// eta(zhat) on the reference ball.
    pub fn density(&self, zhat: &[f64; 2]) -> f64 {
        let r2 = zhat[0] * zhat[0] + zhat[1] * zhat[1];
        if r2 >= 1.0 {
            return 0.0;
        }
        match self.profile {
            MollifierProfile::ExpBump => EXP_BUMP_NORM_2D * (-1.0 / (1.0 - r2)).exp(),
            MollifierProfile::PolyBump => {
                (4.0 / std::f64::consts::PI) * (1.0 - r2).powi(3)
            }
        }
    }

    /// grad eta(zhat).
    pub fn density_grad(&self, zhat: &[f64; 2]) -> [f64; 2] {
        let r2 = zhat[0] * zhat[0] + zhat[1] * zhat[1];
        if r2 >= 1.0 {
            return [0.0, 0.0];
        }
        match self.profile {
            MollifierProfile::ExpBump => {
                let e = EXP_BUMP_NORM_2D * (-1.0 / (1.0 - r2)).exp();
                let f = -2.0 / ((1.0 - r2) * (1.0 - r2));
                [e * f * zhat[0], e * f * zhat[1]]
            }
            MollifierProfile::PolyBump => {
                let f = -(24.0 / std::f64::consts::PI) * (1.0 - r2).powi(2);
                [f * zhat[0], f * zhat[1]]
            }
        }
    }

    /// Mass of eta_t by an independent midpoint quadrature over its support.
    pub fn mass_quadrature(&self, t: f64, npts: usize) -> f64 {
        let h = 2.0 * t / npts as f64;
        let mut mass = 0.0;
        for i in 0..npts {
            let z0 = -t + (i as f64 + 0.5) * h;
            for j in 0..npts {
                let z1 = -t + (j as f64 + 0.5) * h;
                mass += h * h * self.density(&[z0 / t, z1 / t]) / (t * t);
            }
        }
        mass
    }
}

/// Reference-ball kernel quadrature shared by all evaluation points.
struct KernelQuad {
    zhat: Vec<[f64; 2]>,
    w_val: Vec<f64>,
    w_grad: Vec<[f64; 2]>,
    w_dt: Vec<f64>,
}

impl KernelQuad {
    fn build(mollifier: &Mollifier, kpts: usize) -> Self {
        let h = 2.0 / kpts as f64;
        let mut zhat = Vec::new();
        let mut w_val = Vec::new();
        let mut w_grad = Vec::new();
        let mut w_dt = Vec::new();
        for i in 0..kpts {
            for j in 0..kpts {
                let z = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
                if z[0] * z[0] + z[1] * z[1] >= 1.0 {
                    continue;
                }
                let eta = mollifier.density(&z);
                let grad = mollifier.density_grad(&z);
                zhat.push(z);
                w_val.push(h * h * eta);
                w_grad.push([h * h * grad[0], h * h * grad[1]]);
                w_dt.push(h * h * (2.0 * eta + z[0] * grad[0] + z[1] * grad[1]));
            }
        }
        // unit discrete mass: constants are mollified to themselves
        let mass: f64 = w_val.iter().sum();
        for w in w_val.iter_mut() {
            *w /= mass;
        }
        // match the zeroth and first moments of the derivative kernels so
        // constants map to zero and affine fields are reproduced exactly;
        // corrections live in the span of w_val, w_val z1, w_val z2
        let s = [
            zhat.iter().zip(&w_val).map(|(z, w)| w * z[0] * z[0]).sum::<f64>(),
            zhat.iter().zip(&w_val).map(|(z, w)| w * z[1] * z[1]).sum::<f64>(),
        ];
        let fix = |weights: &mut [f64], targets: [f64; 3], zhat: &[[f64; 2]], w_val: &[f64]| {
            let m0: f64 = weights.iter().sum();
            let m1: f64 = zhat.iter().zip(weights.iter()).map(|(z, w)| w * z[0]).sum();
            let m2: f64 = zhat.iter().zip(weights.iter()).map(|(z, w)| w * z[1]).sum();
            let a = targets[0] - m0;
            let b = (targets[1] - m1) / s[0];
            let c = (targets[2] - m2) / s[1];
            for i in 0..weights.len() {
                weights[i] += (a + b * zhat[i][0] + c * zhat[i][1]) * w_val[i];
            }
        };
        let mut g0: Vec<f64> = w_grad.iter().map(|g| g[0]).collect();
        let mut g1: Vec<f64> = w_grad.iter().map(|g| g[1]).collect();
        // int d_j eta z_l dz = -delta_jl
        fix(&mut g0, [0.0, -1.0, 0.0], &zhat, &w_val);
        fix(&mut g1, [0.0, 0.0, -1.0], &zhat, &w_val);
        for (g, (a, b)) in w_grad.iter_mut().zip(g0.into_iter().zip(g1)) {
            *g = [a, b];
        }
        fix(&mut w_dt, [0.0, 0.0, 0.0], &zhat, &w_val);
        KernelQuad { zhat, w_val, w_grad, w_dt }
    }
}

/// Full jet of the extension at one point of the half-cylinder.
#[derive(Debug, Clone)]
pub struct ExtensionJet {
    pub value: [f64; 2],
    /// grad_x U, 2x2.
    pub grad_x: SquareMatrix,
    /// dU/dt.
    pub dt: [f64; 2],
}

impl ExtensionJet {
    /// Rows of the joint 2x3 gradient (grad_x | d_t).
    pub fn joint_rows(&self) -> [[f64; 3]; 2] {
        [
            [self.grad_x.get(0, 0), self.grad_x.get(0, 1), self.dt[0]],
            [self.grad_x.get(1, 0), self.grad_x.get(1, 1), self.dt[1]],
        ]
    }

    /// Coarea factor |JU| of the map (x,t) -> U: the norm of the cross
    /// product of the two joint gradient rows (square root of the sum of
    /// squared 2x2 minors).
    pub fn coarea_factor(&self) -> f64 {
        let c = self.joint_cross();
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    /// Cross product of the joint gradient rows; tangent to the level set,
    /// with third component det grad_x U.
    pub fn joint_cross(&self) -> [f64; 3] {
        let [r, s] = self.joint_rows();
        [
            r[1] * s[2] - r[2] * s[1],
            r[2] * s[0] - r[0] * s[2],
            r[0] * s[1] - r[1] * s[0],
        ]
    }
}

struct ExtInner {
    base: VectorField,
    domain: Domain,
    mollifier: Mollifier,
    quad: KernelQuad,
    slices: RwLock<HashMap<u64, Arc<Vec<[f64; 2]>>>>,
}

/// The extension U(x,t) of a field to the half-cylinder domain x (0,1).
/// Cheap to clone; per-slice node samples are cached behind a read-write
/// lock and shared as immutable snapshots.
#[derive(Clone)]
pub struct ExtensionField {
    inner: Arc<ExtInner>,
}

impl std::fmt::Debug for ExtensionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExtensionField({})", self.inner.base.name)
    }
}

/// Reflect a point into the domain: even reflection across rectangle edges
/// (constant beyond one width), constant radial extension for disks, radial
/// clamp for annuli.
pub fn extend_point(domain: &Domain, x: [f64; 2]) -> [f64; 2] {
    fn fold1(v: f64, lo: f64, hi: f64) -> f64 {
        if v < lo {
            (2.0 * lo - v).min(hi)
        } else if v > hi {
            (2.0 * hi - v).max(lo)
        } else {
            v
        }
    }
    match domain.kind {
        DomainKind::Rectangle { lo, hi } => {
            [fold1(x[0], lo[0], hi[0]), fold1(x[1], lo[1], hi[1])]
        }
        DomainKind::Disk { center, r } => {
            let d = [x[0] - center[0], x[1] - center[1]];
            let rho = d[0].hypot(d[1]);
            if rho <= r {
                x
            } else {
                [center[0] + d[0] * r / rho, center[1] + d[1] * r / rho]
            }
        }
        DomainKind::Annulus { center, r0, r1 } => {
            let d = [x[0] - center[0], x[1] - center[1]];
            let rho = d[0].hypot(d[1]).max(1e-300);
            let clamped = rho.clamp(r0, r1);
            [center[0] + d[0] * clamped / rho, center[1] + d[1] * clamped / rho]
        }
    }
}

impl ExtensionField {
    /// Builds the extension; `kpts` is the number of kernel quadrature
    /// points per axis across the support (>= 16).
    pub fn new(base: VectorField, mollifier: Mollifier, domain: Domain, kpts: usize) -> Self {
        assert!(kpts >= 16, "kernel quadrature needs >= 16 points per t across the support");
        assert_eq!(base.dim(), 2);
        let quad = KernelQuad::build(&mollifier, kpts);
        ExtensionField {
            inner: Arc::new(ExtInner {
                base,
                domain,
                mollifier,
                quad,
                slices: RwLock::new(HashMap::new()),
            }),
        }
    }

    pub fn base(&self) -> &VectorField {
        &self.inner.base
    }

    pub fn domain(&self) -> &Domain {
        &self.inner.domain
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.inner.mollifier
    }

    fn check_t(t: f64) -> Result<()> {
        if !(0.0 < t && t < 1.0) {
            return Err(Error::InvalidParameter(format!("t = {t} outside (0, 1)")));
        }
        Ok(())
    }

    /// U(x, t).
    pub fn value(&self, x: &[f64], t: f64) -> Result<[f64; 2]> {
        Self::check_t(t)?;
        let q = &self.inner.quad;
        let mut out = [0.0, 0.0];
        for (z, w) in q.zhat.iter().zip(&q.w_val) {
            let y = extend_point(&self.inner.domain, [x[0] - t * z[0], x[1] - t * z[1]]);
            let v = self.inner.base.value(&y);
            out[0] += w * v[0];
            out[1] += w * v[1];
        }
        Ok(out)
    }

    /// Value, spatial gradient and t-derivative in one pass over the kernel.
    pub fn jet(&self, x: &[f64], t: f64) -> Result<ExtensionJet> {
        Self::check_t(t)?;
        let q = &self.inner.quad;
        let mut val = [0.0, 0.0];
        let mut grad = [[0.0; 2]; 2];
        let mut dt = [0.0, 0.0];
        for i in 0..q.zhat.len() {
            let z = q.zhat[i];
            let y = extend_point(&self.inner.domain, [x[0] - t * z[0], x[1] - t * z[1]]);
            let v = self.inner.base.value(&y);
            let wv = q.w_val[i];
            let wg = q.w_grad[i];
            let wd = q.w_dt[i];
            for k in 0..2 {
                val[k] += wv * v[k];
                grad[k][0] += wg[0] * v[k];
                grad[k][1] += wg[1] * v[k];
                dt[k] -= wd * v[k];
            }
        }
        let inv_t = 1.0 / t;
        Ok(ExtensionJet {
            value: val,
            grad_x: SquareMatrix::from_rows(&[
                &[grad[0][0] * inv_t, grad[0][1] * inv_t],
                &[grad[1][0] * inv_t, grad[1][1] * inv_t],
            ]),
            dt: [dt[0] * inv_t, dt[1] * inv_t],
        })
    }

    /// The slice u_t = U(., t) as a vector field with analytic-by-kernel
    /// gradient; this is the mollification u * eta_t.
    pub fn slice_field(&self, t: f64) -> Result<VectorField> {
        Self::check_t(t)?;
        let inner = self.inner.clone();
        let inner2 = self.inner.clone();
        let this = ExtensionField { inner };
        let this2 = ExtensionField { inner: inner2 };
        Ok(VectorField::new(
            format!("mollified({}, t={t})", self.inner.base.name),
            2,
            move |x: &[f64]| this.value(x, t).expect("t validated").to_vec(),
            Some(Arc::new(move |x: &[f64]| {
                this2.jet(x, t).expect("t validated").grad_x
            })),
            Smoothness::Smooth,
        ))
    }

    /// Cached slice samples at the domain's interior quadrature nodes.
    pub fn slice_samples(&self, t: f64) -> Result<Arc<Vec<[f64; 2]>>> {
        Self::check_t(t)?;
        let key = t.to_bits();
        if let Some(hit) = self.inner.slices.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let vals: Vec<[f64; 2]> = self
            .inner
            .domain
            .interior_nodes()
            .iter()
            .map(|(p, _)| self.value(p, t).unwrap())
            .collect();
        let arc = Arc::new(vals);
        self.inner.slices.write().unwrap().insert(key, arc.clone());
        Ok(arc)
    }
}
