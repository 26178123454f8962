//! Brouwer degree by three routes: signed preimage counting with Newton
//! polishing, the boundary integral of j u^a . nu, and the change of
//! variables quadrature; plus sphere-projection pairings over Lipschitz
//! sets and sublevel-set extraction.

use rayon::prelude::*;

use crate::contour::extract_contours;
use crate::domain::{Domain, Lattice};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::jacobian::{pairing_indicator_projected, SphereProjection};
use crate::linalg::{pairwise_sum, unit_ball_volume};
use crate::lipset::LipschitzSet;
use crate::testfn::SmoothTestFn;

/// Minimum |det grad u| at a preimage for the target to count as regular.
pub const REGULAR_DET_MIN: f64 = 1e-8;

/// One Newton-polished preimage of a regular target.
#[derive(Debug, Clone, Copy)]
pub struct Preimage {
    pub x: [f64; 2],
    pub det: f64,
}

impl Preimage {
    pub fn sign(&self) -> i8 {
        if self.det >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Degree evaluation summary with regularity diagnostics.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub target: [f64; 2],
    pub degree: i64,
    pub raw: f64,
    pub method: &'static str,
    /// min |det grad u| over found preimages (infinite when none).
    pub min_abs_det: f64,
    /// distance from the target to the sampled image of the boundary.
    pub dist_to_boundary_image: f64,
    /// set when |raw - round(raw)| >= 0.1.
    pub non_integer: bool,
}

fn report(target: [f64; 2], raw: f64, method: &'static str, min_det: f64, dist: f64) -> DegreeReport {
    let degree = raw.round() as i64;
    DegreeReport {
        target,
        degree,
        raw,
        method,
        min_abs_det: min_det,
        dist_to_boundary_image: dist,
        non_integer: (raw - degree as f64).abs() >= 0.1,
    }
}

/// Preimage search for one (field, domain) pair: image bounding boxes of the
/// lattice cells feed a spatial index, Newton polishes each candidate seed.
/// Build once, query many targets (queries are pure and parallelizable).
pub struct PreimageFinder {
    u: VectorField,
    domain: Domain,
    lattice: Lattice,
    cell_lo: Vec<[f64; 2]>,
    cell_hi: Vec<[f64; 2]>,
    buckets: Vec<Vec<u32>>,
    nbuckets: usize,
    image_lo: [f64; 2],
    image_hi: [f64; 2],
    boundary_images: Vec<[f64; 2]>,
    boundary_tol: f64,
    pub range_diameter: f64,
    cell_size: f64,
}

impl PreimageFinder {
    pub fn new(u: &VectorField, domain: &Domain) -> Self {
        let npts = domain.resolution + 1;
        let lattice = domain.lattice(npts);
        let [nx, ny] = lattice.npts;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let v = u.value(&lattice.point(i, j));
                values.push([v[0], v[1]]);
            }
        }
        let ncells = (nx - 1) * (ny - 1);
        let mut cell_lo = vec![[f64::INFINITY; 2]; ncells];
        let mut cell_hi = vec![[f64::NEG_INFINITY; 2]; ncells];
        let mut image_lo = [f64::INFINITY; 2];
        let mut image_hi = [f64::NEG_INFINITY; 2];
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let c = j * (nx - 1) + i;
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let v = values[(j + dj) * nx + (i + di)];
                    for k in 0..2 {
                        cell_lo[c][k] = cell_lo[c][k].min(v[k]);
                        cell_hi[c][k] = cell_hi[c][k].max(v[k]);
                    }
                }
                // inflate by half the box size to absorb curvature
                for k in 0..2 {
                    let pad = 0.5 * (cell_hi[c][k] - cell_lo[c][k]) + 1e-12;
                    cell_lo[c][k] -= pad;
                    cell_hi[c][k] += pad;
                    image_lo[k] = image_lo[k].min(cell_lo[c][k]);
                    image_hi[k] = image_hi[k].max(cell_hi[c][k]);
                }
            }
        }
        let range_diameter =
            ((image_hi[0] - image_lo[0]).powi(2) + (image_hi[1] - image_lo[1]).powi(2))
                .sqrt()
                .max(1e-12);
        // bucket the cells over image space
        let nbuckets = 48usize;
        let mut buckets = vec![Vec::new(); nbuckets * nbuckets];
        let span = [
            (image_hi[0] - image_lo[0]).max(1e-300),
            (image_hi[1] - image_lo[1]).max(1e-300),
        ];
        for c in 0..ncells {
            let bx0 = (((cell_lo[c][0] - image_lo[0]) / span[0]) * nbuckets as f64).floor() as i64;
            let bx1 = (((cell_hi[c][0] - image_lo[0]) / span[0]) * nbuckets as f64).floor() as i64;
            let by0 = (((cell_lo[c][1] - image_lo[1]) / span[1]) * nbuckets as f64).floor() as i64;
            let by1 = (((cell_hi[c][1] - image_lo[1]) / span[1]) * nbuckets as f64).floor() as i64;
            for by in by0.max(0)..=by1.min(nbuckets as i64 - 1) {
                for bx in bx0.max(0)..=bx1.min(nbuckets as i64 - 1) {
                    buckets[by as usize * nbuckets + bx as usize].push(c as u32);
                }
            }
        }
        // a target must be farther from the sampled boundary image than two
        // adjacent image samples are from each other; a refined boundary
        // sampling keeps this margin from dominating the sample box
        let boundary_images: Vec<[f64; 2]> = domain
            .boundary_samples(16 * domain.resolution)
            .iter()
            .map(|p| {
                let v = u.value(p);
                [v[0], v[1]]
            })
            .collect();
        let mut max_gap = 0.0f64;
        for w in boundary_images.windows(2) {
            max_gap = max_gap.max((w[0][0] - w[1][0]).hypot(w[0][1] - w[1][1]));
        }
        let boundary_tol = (2.0 * max_gap).max(1e-6 * range_diameter);
        let cell_size = lattice.h[0].hypot(lattice.h[1]);
        PreimageFinder {
            u: u.clone(),
            domain: domain.clone(),
            lattice,
            cell_lo,
            cell_hi,
            buckets,
            nbuckets,
            image_lo,
            image_hi,
            boundary_images,
            boundary_tol,
            range_diameter,
            cell_size,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn field(&self) -> &VectorField {
        &self.u
    }

    /// Axis-aligned bounding box of the sampled image.
    pub fn image_bbox(&self) -> ([f64; 2], [f64; 2]) {
        (self.image_lo, self.image_hi)
    }

    pub fn dist_to_boundary_image(&self, a: &[f64; 2]) -> f64 {
        self.boundary_images
            .iter()
            .map(|v| (v[0] - a[0]).hypot(v[1] - a[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rejects targets too close to the image of the domain boundary.
    pub fn check_target(&self, a: &[f64; 2]) -> Result<f64> {
        let dist = self.dist_to_boundary_image(a);
        if dist < self.boundary_tol {
            return Err(Error::BoundaryValue { dist, tol: self.boundary_tol });
        }
        Ok(dist)
    }

    fn candidate_cells(&self, a: &[f64; 2]) -> &[u32] {
        if a[0] < self.image_lo[0]
            || a[0] > self.image_hi[0]
            || a[1] < self.image_lo[1]
            || a[1] > self.image_hi[1]
        {
            return &[];
        }
        let span = [
            (self.image_hi[0] - self.image_lo[0]).max(1e-300),
            (self.image_hi[1] - self.image_lo[1]).max(1e-300),
        ];
        let bx = (((a[0] - self.image_lo[0]) / span[0]) * self.nbuckets as f64)
            .floor()
            .min(self.nbuckets as f64 - 1.0) as usize;
        let by = (((a[1] - self.image_lo[1]) / span[1]) * self.nbuckets as f64)
            .floor()
            .min(self.nbuckets as f64 - 1.0) as usize;
        &self.buckets[by * self.nbuckets + bx]
    }

    /// All Newton-polished preimages of a regular target, deduplicated.
    /// Errors when any converged preimage has |det| below `REGULAR_DET_MIN`.
    pub fn preimages(&self, a: &[f64; 2]) -> Result<Vec<Preimage>> {
        let [nx, _] = self.lattice.npts;
        let step_tol = 1e-12 * self.domain.diameter().max(1.0);
        let residual_tol = 1e-9 * self.range_diameter;
        let max_step = 3.0 * self.cell_size;
        let mut roots: Vec<Preimage> = Vec::new();
        for &c in self.candidate_cells(a) {
            let c = c as usize;
            if a[0] < self.cell_lo[c][0]
                || a[0] > self.cell_hi[c][0]
                || a[1] < self.cell_lo[c][1]
                || a[1] > self.cell_hi[c][1]
            {
                continue;
            }
            let (i, j) = (c % (nx - 1), c / (nx - 1));
            let mut x = [
                self.lattice.origin[0] + (i as f64 + 0.5) * self.lattice.h[0],
                self.lattice.origin[1] + (j as f64 + 0.5) * self.lattice.h[1],
            ];
            let mut converged = false;
            for _ in 0..30 {
                let v = self.u.value(&x);
                let r = [v[0] - a[0], v[1] - a[1]];
                let g = self.u.gradient(&x);
                let Some(step) = g.solve(&r) else { break };
                let norm = step[0].hypot(step[1]);
                let scale = if norm > max_step { max_step / norm } else { 1.0 };
                x[0] -= scale * step[0];
                x[1] -= scale * step[1];
                if !x[0].is_finite() || !x[1].is_finite() {
                    break;
                }
                if norm < step_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                continue;
            }
            let v = self.u.value(&x);
            if (v[0] - a[0]).hypot(v[1] - a[1]) > residual_tol {
                continue;
            }
            if !self.domain.contains(&x) {
                continue;
            }
            if roots
                .iter()
                .any(|r| (r.x[0] - x[0]).hypot(r.x[1] - x[1]) < self.cell_size)
            {
                continue;
            }
            let det = self.u.gradient(&x).det();
            if det.abs() <= REGULAR_DET_MIN {
                return Err(Error::SingularValue { det: det.abs(), min: REGULAR_DET_MIN });
            }
            roots.push(Preimage { x, det });
        }
        Ok(roots)
    }

    /// Signed preimage count.
    pub fn degree(&self, a: &[f64; 2]) -> Result<DegreeReport> {
        let dist = self.check_target(a)?;
        let roots = self.preimages(a)?;
        let raw: f64 = roots.iter().map(|r| r.sign() as f64).sum();
        let min_det = roots
            .iter()
            .map(|r| r.det.abs())
            .fold(f64::INFINITY, f64::min);
        Ok(report(*a, raw, "preimage", min_det, dist))
    }
}

/// deg(u, Omega, a) by signed preimages (builds a finder; for repeated
/// queries construct a `PreimageFinder` once and call its methods).
pub fn degree_preimage(u: &VectorField, domain: &Domain, a: &[f64; 2]) -> Result<DegreeReport> {
    PreimageFinder::new(u, domain).degree(a)
}

/// deg(u, Omega, a) = (1/omega_n) int_{boundary} j u^a . nu dH^{n-1}.
pub fn degree_boundary(u: &VectorField, domain: &Domain, a: &[f64; 2]) -> Result<DegreeReport> {
    let images: Vec<[f64; 2]> = domain
        .boundary_nodes()
        .iter()
        .map(|b| {
            let v = u.value(&b.point);
            [v[0], v[1]]
        })
        .collect();
    let mut dist = f64::INFINITY;
    let mut max_gap = 0.0f64;
    for (k, v) in images.iter().enumerate() {
        dist = dist.min((v[0] - a[0]).hypot(v[1] - a[1]));
        if k + 1 < images.len() {
            let w = images[k + 1];
            max_gap = max_gap.max((v[0] - w[0]).hypot(v[1] - w[1]));
        }
    }
    let tol = (2.0 * max_gap).max(1e-12);
    if dist < tol {
        return Err(Error::BoundaryValue { dist, tol });
    }
    let proj = SphereProjection::new(u.clone(), a.to_vec(), diameter_of(&images));
    let omega_n = unit_ball_volume(domain.dimension());
    let terms: Vec<f64> = domain
        .boundary_nodes()
        .par_iter()
        .map(|b| match proj.j_at(&b.point) {
            Ok(j) => b.weight * (j[0] * b.normal[0] + j[1] * b.normal[1]),
            Err(_) => 0.0,
        })
        .collect();
    let raw = pairwise_sum(&terms) / omega_n;
    Ok(report(*a, raw, "boundary", f64::INFINITY, dist))
}

fn diameter_of(points: &[[f64; 2]]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt().max(1e-12)
}

/// int_Omega psi(u(x)) det grad u(x) dx, the right side of the change of
/// variables formula int deg(u, Omega, y) psi(y) dy.
pub fn degree_changevar(u: &VectorField, domain: &Domain, psi: &SmoothTestFn) -> f64 {
    let terms: Vec<f64> = domain
        .interior_nodes()
        .par_iter()
        .map(|(p, w)| {
            let v = u.value(p);
            let pv = psi.value(&v);
            if pv == 0.0 {
                return 0.0;
            }
            w * pv * u.gradient(p).det()
        })
        .collect();
    pairwise_sum(&terms)
}

/// <J u^a, chi_E> = int_{dE} j u^a . nu dH^{n-1}; omega_n times the degree
/// of u on E at a, for smooth u. The target must clear the sampled image of
/// the boundary of E by a margin that accounts for the sampling.
pub fn pair_jua_indicator(u: &VectorField, set: &LipschitzSet, a: &[f64; 2]) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut dist = f64::INFINITY;
    let mut lip = 0.0f64;
    let mut max_arc = 0.0f64;
    let nodes = set.boundary_nodes();
    let images: Vec<[f64; 2]> = nodes
        .iter()
        .map(|b| {
            let v = u.value(&b.point);
            [v[0], v[1]]
        })
        .collect();
    for (k, b) in nodes.iter().enumerate() {
        let v = images[k];
        dist = dist.min((v[0] - a[0]).hypot(v[1] - a[1]));
        max_arc = max_arc.max(b.weight);
        let nb = &nodes[(k + 1) % nodes.len()];
        let w = images[(k + 1) % nodes.len()];
        let dx = (b.point[0] - nb.point[0]).hypot(b.point[1] - nb.point[1]);
        if dx > 1e-12 {
            lip = lip.max((v[0] - w[0]).hypot(v[1] - w[1]) / dx);
        }
    }
    let tol = 2.0 * max_arc * lip;
    if dist < tol {
        return Err(Error::BoundaryValue { dist, tol });
    }
    let proj = SphereProjection::new(u.clone(), a.to_vec(), diameter_of(&images));
    let (val, _skipped) = pairing_indicator_projected(&proj, set);
    Ok(val)
}

/// The sublevel set E_t = { psi > t } as a Lipschitz set, via contour
/// extraction on the domain lattice with outward normals -grad psi/|grad psi|.
pub fn sublevel_set(psi: &SmoothTestFn, t: f64, domain: &Domain) -> Result<LipschitzSet> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sublevel threshold t = {t} must be positive (support would reach the boundary)"
        )));
    }
    let npts = domain.resolution + 1;
    let lattice = domain.lattice(npts);
    let [nx, ny] = lattice.npts;
    let mut values = vec![0.0; nx * ny];
    let mut sup = f64::NEG_INFINITY;
    for j in 0..ny {
        for i in 0..nx {
            let v = psi.value(&lattice.point(i, j));
            values[j * nx + i] = v;
            sup = sup.max(v);
        }
    }
    if t >= sup {
        return Ok(LipschitzSet::empty());
    }
    let contours = extract_contours(&lattice, &values, t);
    let mut loops = Vec::new();
    let mut normals = Vec::new();
    for (poly, closed) in contours {
        if !closed {
            return Err(Error::InvalidGeometry(
                "sublevel contour reaches the lattice border".into(),
            ));
        }
        let mut nrm = Vec::with_capacity(poly.len());
        for p in &poly {
            let g = psi.gradient(p);
            let gn = g[0].hypot(g[1]);
            if gn <= 1e-8 {
                return Err(Error::CriticalLevel { t, grad: gn });
            }
            // outward from {psi > t} is the direction of decrease
            nrm.push([-g[0] / gn, -g[1] / gn]);
        }
        loops.push(poly);
        normals.push(nrm);
    }
    LipschitzSet::from_contours(loops, normals, domain)
}
