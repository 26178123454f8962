//! Predictor-corrector tracing of the level sets U^{-1}(a) inside a slab
//! Omega x (t_lo, t_hi) of the half-cylinder, endpoint classification, and
//! the coarea / Cauchy-estimate checks built on the traced curves.
//!
//! The tangent at a point is the cross product of the two rows of the joint
//! 2x3 gradient; its third component is det grad_x U, so following one
//! continuous orientation reproduces the sign bookkeeping of the slice
//! measures: a curve that returns to the bottom slice arrives with the
//! opposite sign, one that reaches the top arrives with the same sign.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::degree::PreimageFinder;
use crate::domain::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::linalg::unit_ball_volume;
use crate::measures::{flat_norm, AtomicMeasure};
use crate::mollifier::ExtensionField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointClass {
    Bottom { sign: i8 },
    Top { sign: i8 },
    Lateral,
}

/// A traced connected component of U^{-1}(a) in the slab.
#[derive(Debug, Clone)]
pub struct LevelCurve {
    /// Polyline vertices (x, y, t).
    pub vertices: Vec<[f64; 3]>,
    pub length: f64,
    /// None for closed loops.
    pub endpoints: Option<(EndpointClass, EndpointClass)>,
}

pub fn curve_length(c: &LevelCurve) -> f64 {
    c.length
}

fn polyline_length(v: &[[f64; 3]], closed: bool) -> f64 {
    let mut len = 0.0;
    for w in v.windows(2) {
        len += dist3(&w[0], &w[1]);
    }
    if closed && v.len() > 2 {
        len += dist3(v.last().unwrap(), &v[0]);
    }
    len
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone)]
pub struct TraceOutcome {
    pub curves: Vec<LevelCurve>,
    pub warnings: Vec<String>,
}

impl TraceOutcome {
    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(|c| c.length).sum()
    }
}

/// One lateral wall of the slab with an arclength parameterization.
struct Wall {
    length: f64,
    point: Box<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    tangent: Box<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    normal: Box<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
}

fn walls_of(domain: &Domain) -> Vec<Wall> {
    match domain.kind {
        DomainKind::Rectangle { lo, hi } => {
            let corners = [
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ];
            (0..4)
                .map(|e| {
                    let a = corners[e];
                    let b = corners[(e + 1) % 4];
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                    let nrm = [dir[1], -dir[0]];
                    Wall {
                        length: len,
                        point: Box::new(move |s| [a[0] + s * dir[0], a[1] + s * dir[1]]),
                        tangent: Box::new(move |_s| dir),
                        normal: Box::new(move |_s| nrm),
                    }
                })
                .collect()
        }
        DomainKind::Disk { center, r } => vec![circle_wall(center, r, 1.0)],
        DomainKind::Annulus { center, r0, r1 } => {
            vec![circle_wall(center, r1, 1.0), circle_wall(center, r0, -1.0)]
        }
    }
}

fn circle_wall(center: [f64; 2], r: f64, orient: f64) -> Wall {
    Wall {
        length: 2.0 * std::f64::consts::PI * r,
        point: Box::new(move |s| {
            let th = s / r;
            [center[0] + r * th.cos(), center[1] + r * th.sin()]
        }),
        tangent: Box::new(move |s| {
            let th = s / r;
            [-th.sin(), th.cos()]
        }),
        normal: Box::new(move |s| {
            let th = s / r;
            [orient * th.cos(), orient * th.sin()]
        }),
    }
}

/// Precomputed slab machinery for one (extension, t_lo, t_hi): slice
/// preimage finders at the ends and at interior levels (loop seeds), and
/// a-independent samples of U on the lateral walls.
pub struct SlabWorkspace {
    ext: ExtensionField,
    pub t_lo: f64,
    pub t_hi: f64,
    finder_lo: PreimageFinder,
    finder_hi: PreimageFinder,
    mid_finders: Vec<(f64, PreimageFinder)>,
    walls: Vec<Wall>,
    wall_ns: usize,
    wall_nt: usize,
    /// wall sample values, indexed [wall][it * ns + is].
    wall_values: Vec<Vec<[f64; 2]>>,
    step_max: f64,
    tol: f64,
    pub range_diameter: f64,
}

impl SlabWorkspace {
    pub fn new(ext: &ExtensionField, t_lo: f64, t_hi: f64, n_mid: usize) -> Result<Self> {
        if !(0.0 < t_lo && t_lo < t_hi && t_hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "slab ({t_lo}, {t_hi}) outside 0 < t_lo < t_hi < 1"
            )));
        }
        let domain = ext.domain().clone();
        let finder_lo = PreimageFinder::new(&ext.slice_field(t_lo)?, &domain);
        let finder_hi = PreimageFinder::new(&ext.slice_field(t_hi)?, &domain);
        let mut mid_finders = Vec::new();
        for k in 1..=n_mid {
            let t = t_lo + (t_hi - t_lo) * k as f64 / (n_mid as f64 + 1.0);
            mid_finders.push((t, PreimageFinder::new(&ext.slice_field(t)?, &domain)));
        }
        let walls = walls_of(&domain);
        let (wall_ns, wall_nt) = (48usize, 9usize);
        let mut wall_values = Vec::with_capacity(walls.len());
        for w in &walls {
            let mut vals = Vec::with_capacity(wall_ns * wall_nt);
            for it in 0..wall_nt {
                let t = t_lo + (t_hi - t_lo) * it as f64 / (wall_nt - 1) as f64;
                let t = t.clamp(t_lo + 1e-12, t_hi - 1e-12).max(1e-12);
                for is in 0..wall_ns {
                    let s = w.length * is as f64 / wall_ns as f64;
                    let p = (w.point)(s);
                    vals.push(ext.value(&p, t)?);
                }
            }
            wall_values.push(vals);
        }
        let range_diameter = finder_lo.range_diameter.max(finder_hi.range_diameter);
        Ok(SlabWorkspace {
            ext: ext.clone(),
            t_lo,
            t_hi,
            finder_lo,
            finder_hi,
            mid_finders,
            walls,
            wall_ns,
            wall_nt,
            wall_values,
            step_max: 0.01,
            tol: 1e-9 * range_diameter,
            range_diameter,
        })
    }

    /// Halve the continuation step (refinement-stability checks).
    pub fn with_step(mut self, step: f64) -> Self {
        self.step_max = step;
        self
    }

    pub fn bottom_finder(&self) -> &PreimageFinder {
        &self.finder_lo
    }

    pub fn top_finder(&self) -> &PreimageFinder {
        &self.finder_hi
    }

    /// Atomic slice measure J u_t^a at the bottom or top of the slab.
    pub fn slice_measure(&self, top: bool, a: &[f64; 2]) -> Result<AtomicMeasure> {
        let finder = if top { &self.finder_hi } else { &self.finder_lo };
        AtomicMeasure::from_regular_value(finder, a)
    }

    /// Bounding box of the slab image (union over sampled slices), inflated
    /// by the given margin fraction.
    pub fn image_box(&self, margin: f64) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut take = |(l, h): ([f64; 2], [f64; 2])| {
            for k in 0..2 {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
            }
        };
        take(self.finder_lo.image_bbox());
        take(self.finder_hi.image_bbox());
        for (_, f) in &self.mid_finders {
            take(f.image_bbox());
        }
        let pad = [
            margin * (hi[0] - lo[0]),
            margin * (hi[1] - lo[1]),
        ];
        ([lo[0] - pad[0], lo[1] - pad[1]], [hi[0] + pad[0], hi[1] + pad[1]])
    }

    fn newton_in_slice(&self, x0: [f64; 2], t: f64, a: &[f64; 2]) -> Option<[f64; 2]> {
        let mut x = x0;
        for _ in 0..30 {
            let jet = self.ext.jet(&x, t).ok()?;
            let r = [jet.value[0] - a[0], jet.value[1] - a[1]];
            let step = jet.grad_x.solve(&r)?;
            x[0] -= step[0];
            x[1] -= step[1];
            if step[0].hypot(step[1]) < 1e-12 {
                break;
            }
        }
        let v = self.ext.value(&x, t).ok()?;
        ((v[0] - a[0]).hypot(v[1] - a[1]) < 10.0 * self.tol).then_some(x)
    }

    fn wall_seeds(&self, a: &[f64; 2]) -> Vec<([f64; 3], [f64; 2])> {
        let mut seeds = Vec::new();
        for (wi, w) in self.walls.iter().enumerate() {
            let vals = &self.wall_values[wi];
            let (ns, nt) = (self.wall_ns, self.wall_nt);
            for it in 0..nt - 1 {
                for is in 0..ns {
                    // cell corners in (s, t) space, s wraps around
                    let corners = [
                        vals[it * ns + is],
                        vals[it * ns + (is + 1) % ns],
                        vals[(it + 1) * ns + is],
                        vals[(it + 1) * ns + (is + 1) % ns],
                    ];
                    let mut lo = [f64::INFINITY; 2];
                    let mut hi = [f64::NEG_INFINITY; 2];
                    for c in corners {
                        for k in 0..2 {
                            lo[k] = lo[k].min(c[k]);
                            hi[k] = hi[k].max(c[k]);
                        }
                    }
                    // inflate for curvature between samples
                    let pad = [0.75 * (hi[0] - lo[0]) + 1e-12, 0.75 * (hi[1] - lo[1]) + 1e-12];
                    if a[0] < lo[0] - pad[0]
                        || a[0] > hi[0] + pad[0]
                        || a[1] < lo[1] - pad[1]
                        || a[1] > hi[1] + pad[1]
                    {
                        continue;
                    }
                    // Newton in (s, t) on the wall
                    let mut s = w.length * (is as f64 + 0.5) / ns as f64;
                    let mut t = self.t_lo
                        + (self.t_hi - self.t_lo) * (it as f64 + 0.5) / (nt - 1) as f64;
                    let mut ok = false;
                    for _ in 0..30 {
                        let p = (w.point)(s);
                        let Ok(jet) = self.ext.jet(&p, t) else { break };
                        let r = [jet.value[0] - a[0], jet.value[1] - a[1]];
                        let tan = (w.tangent)(s);
                        let ds = [
                            jet.grad_x.get(0, 0) * tan[0] + jet.grad_x.get(0, 1) * tan[1],
                            jet.grad_x.get(1, 0) * tan[0] + jet.grad_x.get(1, 1) * tan[1],
                        ];
                        let det = ds[0] * jet.dt[1] - ds[1] * jet.dt[0];
                        if det.abs() < 1e-14 {
                            break;
                        }
                        let dels = (r[0] * jet.dt[1] - r[1] * jet.dt[0]) / det;
                        let delt = (ds[0] * r[1] - ds[1] * r[0]) / det;
                        s -= dels;
                        t -= delt;
                        s = s.rem_euclid(w.length);
                        if !(self.t_lo..=self.t_hi).contains(&t) {
                            break;
                        }
                        if dels.abs() + delt.abs() < 1e-12 {
                            ok = true;
                            break;
                        }
                    }
                    if !ok || !(self.t_lo + 1e-9..self.t_hi - 1e-9).contains(&t) {
                        continue;
                    }
                    let p = (w.point)(s);
                    let Ok(v) = self.ext.value(&p, t) else { continue };
                    if (v[0] - a[0]).hypot(v[1] - a[1]) > 10.0 * self.tol {
                        continue;
                    }
                    let n = (w.normal)(s);
                    seeds.push(([p[0], p[1], t], [-n[0], -n[1]]));
                }
            }
        }
        seeds
    }

    /// Traces all components of U^{-1}(a) in the slab found from end-slice
    /// atoms, lateral wall crossings, and interior-slice loop seeds.
    pub fn trace(&self, a: &[f64; 2]) -> Result<TraceOutcome> {
        let mut curves: Vec<LevelCurve> = Vec::new();
        let mut warnings = Vec::new();
        let covered = |curves: &[LevelCurve], p: &[f64; 3], tolxy: f64| {
            curves.iter().any(|c| c.vertices.iter().any(|v| dist3(v, p) < tolxy))
        };
        let merge_tol = 1.2 * self.step_max;

        // tracing needs a to be regular for the slices and the slab; the
        // degree-style boundary-image rejection does not apply (curves may
        // legitimately enter and leave through the lateral wall)
        let bottom = self.finder_lo.preimages(a)?;
        let top = self.finder_hi.preimages(a)?;

        for r in &bottom {
            let p = [r.x[0], r.x[1], self.t_lo];
            if covered(&curves, &p, merge_tol) {
                continue;
            }
            let c = self.trace_one(p, [0.0, 0.0, 1.0], a)?;
            curves.push(c);
        }
        for r in &top {
            let p = [r.x[0], r.x[1], self.t_hi];
            if covered(&curves, &p, merge_tol) {
                continue;
            }
            let c = self.trace_one(p, [0.0, 0.0, -1.0], a)?;
            curves.push(c);
        }
        for (p, inward) in self.wall_seeds(a) {
            if covered(&curves, &p, merge_tol) {
                continue;
            }
            let c = self.trace_one(p, [inward[0], inward[1], 0.0], a)?;
            curves.push(c);
        }
        // interior seeds catch closed loops missed by the boundary scans
        for (t, finder) in &self.mid_finders {
            let Ok(roots) = finder.preimages(a) else { continue };
            for r in &roots {
                let p = [r.x[0], r.x[1], *t];
                if covered(&curves, &p, merge_tol) {
                    continue;
                }
                let forward = self.trace_one(p, [0.0, 0.0, 1.0], a)?;
                if forward.endpoints.is_none() {
                    curves.push(forward);
                    continue;
                }
                let backward = self.trace_one(p, [0.0, 0.0, -1.0], a)?;
                // join: reverse the backward half and append the forward one
                let mut verts: Vec<[f64; 3]> =
                    backward.vertices.iter().rev().cloned().collect();
                verts.extend(forward.vertices.iter().skip(1).cloned());
                let len = polyline_length(&verts, false);
                let (be, fe) = (
                    backward.endpoints.expect("open").1,
                    forward.endpoints.expect("open").1,
                );
                curves.push(LevelCurve {
                    vertices: verts,
                    length: len,
                    endpoints: Some((be, fe)),
                });
            }
        }

        // endpoint audit: every end-slice atom must be hit by exactly one
        // curve endpoint
        let mut bottom_hits = vec![0usize; bottom.len()];
        let mut top_hits = vec![0usize; top.len()];
        for c in &curves {
            if c.endpoints.is_none() {
                continue;
            }
            let first = c.vertices.first().unwrap();
            let last = c.vertices.last().unwrap();
            for v in [first, last] {
                if (v[2] - self.t_lo).abs() < 1e-9 {
                    for (k, r) in bottom.iter().enumerate() {
                        if (r.x[0] - v[0]).hypot(r.x[1] - v[1]) < merge_tol {
                            bottom_hits[k] += 1;
                        }
                    }
                }
                if (v[2] - self.t_hi).abs() < 1e-9 {
                    for (k, r) in top.iter().enumerate() {
                        if (r.x[0] - v[0]).hypot(r.x[1] - v[1]) < merge_tol {
                            top_hits[k] += 1;
                        }
                    }
                }
            }
        }
        for (k, &h) in bottom_hits.iter().enumerate() {
            if h != 1 {
                warnings.push(format!(
                    "bottom atom at ({}, {}) covered by {h} endpoints",
                    bottom[k].x[0], bottom[k].x[1]
                ));
            }
        }
        for (k, &h) in top_hits.iter().enumerate() {
            if h != 1 {
                warnings.push(format!(
                    "top atom at ({}, {}) covered by {h} endpoints",
                    top[k].x[0], top[k].x[1]
                ));
            }
        }
        Ok(TraceOutcome { curves, warnings })
    }

    /// Follows one component from a seed point in one continuous
    /// orientation until it exits the slab, exits the domain laterally, or
    /// closes into a loop.
    fn trace_one(&self, start: [f64; 3], dir0: [f64; 3], a: &[f64; 2]) -> Result<LevelCurve> {
        let domain = self.ext.domain();
        let mut verts = vec![start];
        let mut dir = dir0;
        let mut p = start;
        let max_steps = 50_000;
        for step_i in 0..max_steps {
            let jet = self
                .ext
                .jet(&[p[0], p[1]], p[2].clamp(1e-12, 1.0 - 1e-12))?;
            let cross = jet.joint_cross();
            let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            // smallest singular value of the 2x3 joint gradient
            let rows = jet.joint_rows();
            let g11: f64 = rows[0].iter().map(|v| v * v).sum();
            let g22: f64 = rows[1].iter().map(|v| v * v).sum();
            let g12: f64 = rows[0].iter().zip(rows[1]).map(|(x, y)| x * y).sum();
            let tr = g11 + g22;
            let disc = ((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).sqrt();
            let sv_min = (0.5 * (tr - disc)).max(0.0).sqrt();
            if sv_min < 1e-6 {
                return Err(Error::SingularCurve { x: p[0], y: p[1], t: p[2] });
            }
            let mut tau = [cross[0] / cn, cross[1] / cn, cross[2] / cn];
            if tau[0] * dir[0] + tau[1] * dir[1] + tau[2] * dir[2] < 0.0 {
                tau = [-tau[0], -tau[1], -tau[2]];
            }
            let grad_norm = jet.grad_x.max_abs().max(jet.dt[0].abs().max(jet.dt[1].abs()));
            let step = self.step_max.min(0.2 / grad_norm.max(1e-9));
            let mut q = [p[0] + step * tau[0], p[1] + step * tau[1], p[2] + step * tau[2]];
            // Gauss-Newton corrector back to the level set
            for _ in 0..12 {
                let tq = q[2].clamp(1e-12, 1.0 - 1e-12);
                let Ok(jq) = self.ext.jet(&[q[0], q[1]], tq) else { break };
                let r = [jq.value[0] - a[0], jq.value[1] - a[1]];
                if r[0].hypot(r[1]) < self.tol {
                    break;
                }
                let rows = jq.joint_rows();
                // delta = J^T (J J^T)^{-1} r
                let g11: f64 = rows[0].iter().map(|v| v * v).sum();
                let g22: f64 = rows[1].iter().map(|v| v * v).sum();
                let g12: f64 = rows[0].iter().zip(rows[1]).map(|(x, y)| x * y).sum();
                let det = g11 * g22 - g12 * g12;
                if det.abs() < 1e-18 {
                    break;
                }
                let lam = [
                    (g22 * r[0] - g12 * r[1]) / det,
                    (g11 * r[1] - g12 * r[0]) / det,
                ];
                for k in 0..3 {
                    q[k] -= rows[0][k] * lam[0] + rows[1][k] * lam[1];
                }
            }
            // exits
            if q[2] <= self.t_lo || q[2] >= self.t_hi {
                let t_end = if q[2] <= self.t_lo { self.t_lo } else { self.t_hi };
                let f = ((t_end - p[2]) / (q[2] - p[2])).clamp(0.0, 1.0);
                let xg = [p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])];
                let x = self.newton_in_slice(xg, t_end.max(1e-12), a).unwrap_or(xg);
                let endpoint = [x[0], x[1], t_end];
                verts.push(endpoint);
                let jet_end = self.ext.jet(&x, t_end.max(1e-12))?;
                let sign = if jet_end.joint_cross()[2] >= 0.0 { 1 } else { -1 };
                let end_class = if q[2] <= self.t_lo {
                    EndpointClass::Bottom { sign }
                } else {
                    EndpointClass::Top { sign }
                };
                return Ok(self.finish_open(verts, dir0, end_class, a));
            }
            if !domain.contains(&[q[0], q[1]]) {
                // bisect the segment [p, q] to the lateral crossing
                let (mut good, mut bad) = (p, q);
                for _ in 0..60 {
                    let mid = [
                        0.5 * (good[0] + bad[0]),
                        0.5 * (good[1] + bad[1]),
                        0.5 * (good[2] + bad[2]),
                    ];
                    if domain.contains(&[mid[0], mid[1]]) {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                verts.push(good);
                return Ok(self.finish_open(verts, dir0, EndpointClass::Lateral, a));
            }
            // loop closure
            if step_i >= 4 && dist3(&q, &start) < 0.9 * step {
                verts.push(q);
                let length = polyline_length(&verts, true);
                return Ok(LevelCurve { vertices: verts, length, endpoints: None });
            }
            dir = tau;
            verts.push(q);
            p = q;
        }
        Err(Error::SingularCurve { x: p[0], y: p[1], t: p[2] })
    }

    fn finish_open(
        &self,
        verts: Vec<[f64; 3]>,
        dir0: [f64; 3],
        end: EndpointClass,
        a: &[f64; 2],
    ) -> LevelCurve {
        let start = verts[0];
        let start_class = if (start[2] - self.t_lo).abs() < 1e-9 && dir0[2] > 0.0 {
            let sign = self.sign_at(&[start[0], start[1]], self.t_lo, a);
            EndpointClass::Bottom { sign }
        } else if (start[2] - self.t_hi).abs() < 1e-9 && dir0[2] < 0.0 {
            let sign = self.sign_at(&[start[0], start[1]], self.t_hi, a);
            EndpointClass::Top { sign }
        } else {
            EndpointClass::Lateral
        };
        let length = polyline_length(&verts, false);
        LevelCurve { vertices: verts, length, endpoints: Some((start_class, end)) }
    }

    fn sign_at(&self, x: &[f64; 2], t: f64, _a: &[f64; 2]) -> i8 {
        match self.ext.jet(x, t.max(1e-12)) {
            Ok(jet) => {
                if jet.joint_cross()[2] >= 0.0 {
                    1
                } else {
                    -1
                }
            }
            Err(_) => 1,
        }
    }

    /// Lemma-style Cauchy gap: lhs = flat norm of the difference of the end
    /// slice measures, rhs = omega_n times the traced H^1 length.
    pub fn cauchy_gap(&self, a: &[f64; 2]) -> Result<CauchyGap> {
        let mu_lo = self.slice_measure(false, a)?;
        let mu_hi = self.slice_measure(true, a)?;
        let lhs = flat_norm(&mu_lo.difference(&mu_hi), self.ext.domain()).value;
        let outcome = self.trace(a)?;
        let omega = unit_ball_volume(2);
        let rhs = omega * outcome.total_length();
        Ok(CauchyGap { lhs, rhs, outcome })
    }
}

#[derive(Debug)]
pub struct CauchyGap {
    pub lhs: f64,
    pub rhs: f64,
    pub outcome: TraceOutcome,
}

/// Convenience one-shot tracer (builds the slab workspace internally).
pub fn trace_level_set(
    ext: &ExtensionField,
    a: &[f64; 2],
    t_lo: f64,
    t_hi: f64,
) -> Result<TraceOutcome> {
    SlabWorkspace::new(ext, t_lo, t_hi, 3)?.trace(a)
}

/// Both sides of the Cauchy estimate for one target.
pub fn cauchy_gap_check(
    ext: &ExtensionField,
    a: &[f64; 2],
    t_k: f64,
    t_l: f64,
) -> Result<CauchyGap> {
    if t_k == t_l {
        return Ok(CauchyGap {
            lhs: 0.0,
            rhs: 0.0,
            outcome: TraceOutcome { curves: vec![], warnings: vec![] },
        });
    }
    SlabWorkspace::new(ext, t_k, t_l, 3)?.cauchy_gap(a)
}

#[derive(Debug, Clone)]
pub struct CoareaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub mc_stderr: f64,
    pub skip_fraction: f64,
    pub samples_used: usize,
    pub warnings: Vec<String>,
}

/// Monte Carlo check of int H^1(U^{-1}(a)) da = int |JU| over the slab:
/// lhs from traced lengths at sampled targets, rhs by quadrature of the
/// coarea factor.
pub fn coarea_extension_check(
    ext: &ExtensionField,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
    n_t_levels: usize,
    seed: u64,
) -> Result<CoareaCheck> {
    if t_hi <= t_lo {
        return Ok(CoareaCheck {
            lhs: 0.0,
            rhs: 0.0,
            mc_stderr: 0.0,
            skip_fraction: 0.0,
            samples_used: 0,
            warnings: vec![],
        });
    }
    let ws = SlabWorkspace::new(ext, t_lo, t_hi, 3)?;
    let (lo, hi) = ws.image_box(0.2);
    let boxvol = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<[f64; 2]> = (0..n_samples)
        .map(|_| [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])])
        .collect();
    let lengths: Vec<Option<f64>> = samples
        .par_iter()
        .map(|a| ws.trace(a).ok().map(|o| o.total_length()))
        .collect();
    let used: Vec<f64> = lengths.iter().flatten().copied().collect();
    let n_used = used.len();
    let skip_fraction = 1.0 - n_used as f64 / n_samples as f64;
    let mean = used.iter().sum::<f64>() / n_used.max(1) as f64;
    let var = used.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (n_used.max(2) - 1) as f64;
    let lhs = boxvol * mean;
    let mc_stderr = boxvol * (var / n_used.max(1) as f64).sqrt();
    // quadrature of the coarea factor over the slab
    let dt = (t_hi - t_lo) / n_t_levels as f64;
    let domain = ext.domain();
    let levels: Vec<f64> = (0..n_t_levels)
        .map(|k| t_lo + (k as f64 + 0.5) * dt)
        .collect();
    let rhs: f64 = levels
        .par_iter()
        .map(|&t| {
            domain
                .interior_nodes()
                .iter()
                .map(|(p, w)| w * dt * ext.jet(p, t).map(|j| j.coarea_factor()).unwrap_or(0.0))
                .sum::<f64>()
        })
        .sum();
    let mut warnings = vec![];
    if skip_fraction > 0.1 {
        warnings.push(format!(
            "unreliable estimate: skip fraction {skip_fraction:.3} exceeds 10%"
        ));
    }
    Ok(CoareaCheck { lhs, rhs, mc_stderr, skip_fraction, samples_used: n_used, warnings })
}
