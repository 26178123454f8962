//! Lipschitz sets E with closure inside the domain: circles, polygons, and
//! polygonal approximations of annulus sectors, with boundary quadrature
//! (nodes, outward normals, arc weights) and exact area/perimeter.

use crate::domain::{BoundaryNode, Domain};
use crate::error::{Error, Result};
use crate::specstr::SpecStr;

#[derive(Debug, Clone)]
enum Shape {
    Circle { center: [f64; 2], r: f64 },
    /// Closed polylines, each oriented counter-clockwise.
    Polygons(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone)]
pub struct LipschitzSet {
    shape: Shape,
    boundary: Vec<BoundaryNode>,
    perimeter: f64,
    area: f64,
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn point_in_polygon(poly: &[[f64; 2]], x: &[f64]) -> bool {
    // even-odd ray casting along +x
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let t = (x[1] - a[1]) / (b[1] - a[1]);
            if a[0] + t * (b[0] - a[0]) > x[0] {
                inside = !inside;
            }
        }
    }
    inside
}

impl LipschitzSet {
    /// Circle of radius `r`; boundary discretized into `nseg` exact arcs.
    pub fn circle(center: [f64; 2], r: f64, nseg: usize, domain: &Domain) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::InvalidGeometry(format!("circle radius {r}")));
        }
        let dtheta = 2.0 * std::f64::consts::PI / nseg as f64;
        let mut boundary = Vec::with_capacity(nseg);
        for j in 0..nseg {
            let th = (j as f64 + 0.5) * dtheta;
            let (c, s) = (th.cos(), th.sin());
            boundary.push(BoundaryNode {
                point: [center[0] + r * c, center[1] + r * s],
                normal: [c, s],
                weight: r * dtheta,
            });
        }
        let set = LipschitzSet {
            shape: Shape::Circle { center, r },
            boundary,
            perimeter: 2.0 * std::f64::consts::PI * r,
            area: std::f64::consts::PI * r * r,
        };
        set.check_inside(domain)?;
        Ok(set)
    }

    /// Simple polygon from vertices (any orientation); edges are subdivided
    /// so no boundary segment exceeds `max_seg`.
    pub fn polygon(vertices: Vec<[f64; 2]>, max_seg: f64, domain: &Domain) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs >= 3 vertices, got {}",
                vertices.len()
            )));
        }
        let mut verts = vertices;
        if shoelace(&verts) < 0.0 {
            verts.reverse();
        }
        let area = shoelace(&verts);
        if area <= 0.0 {
            return Err(Error::InvalidGeometry("degenerate polygon".into()));
        }
        let mut boundary = Vec::new();
        let mut perimeter = 0.0;
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if len == 0.0 {
                continue;
            }
            perimeter += len;
            // CCW orientation: outward normal is the direction rotated -90 deg
            let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            let pieces = (len / max_seg).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let f = (k as f64 + 0.5) / pieces as f64;
                boundary.push(BoundaryNode {
                    point: [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])],
                    normal,
                    weight: len / pieces as f64,
                });
            }
        }
        let set = LipschitzSet { shape: Shape::Polygons(vec![verts]), boundary, perimeter, area };
        set.check_inside(domain)?;
        Ok(set)
    }

    /// Polygonal annulus sector between radii r0 < r1 and angles th0 < th1.
    pub fn annulus_sector(
        center: [f64; 2],
        r0: f64,
        r1: f64,
        th0: f64,
        th1: f64,
        arcres: usize,
        domain: &Domain,
    ) -> Result<Self> {
        if r0 <= 0.0 || r1 <= r0 || th1 <= th0 {
            return Err(Error::InvalidGeometry(format!(
                "annulus sector r {r0}..{r1} theta {th0}..{th1}"
            )));
        }
        let mut verts = Vec::new();
        for k in 0..=arcres {
            let th = th0 + (th1 - th0) * k as f64 / arcres as f64;
            verts.push([center[0] + r1 * th.cos(), center[1] + r1 * th.sin()]);
        }
        for k in (0..=arcres).rev() {
            let th = th0 + (th1 - th0) * k as f64 / arcres as f64;
            verts.push([center[0] + r0 * th.cos(), center[1] + r0 * th.sin()]);
        }
        let max_seg = (r1 - r0).min(r1 * (th1 - th0) / arcres as f64);
        Self::polygon(verts, max_seg, domain)
    }

    /// Assembles a set from closed contour polylines with externally supplied
    /// outward normals (used by sublevel-set extraction). Polylines must be
    /// closed loops; normals are per-vertex.
    pub fn from_contours(
        loops: Vec<Vec<[f64; 2]>>,
        normals: Vec<Vec<[f64; 2]>>,
        domain: &Domain,
    ) -> Result<Self> {
        let mut boundary = Vec::new();
        let mut perimeter = 0.0;
        let mut area = 0.0;
        let mut comps = Vec::new();
        for (poly, nrm) in loops.into_iter().zip(normals) {
            if poly.len() < 3 {
                continue;
            }
            let n = poly.len();
            for i in 0..n {
                let prev = poly[(i + n - 1) % n];
                let next = poly[(i + 1) % n];
                let w = 0.5
                    * (((poly[i][0] - prev[0]).powi(2) + (poly[i][1] - prev[1]).powi(2)).sqrt()
                        + ((next[0] - poly[i][0]).powi(2) + (next[1] - poly[i][1]).powi(2)).sqrt());
                boundary.push(BoundaryNode { point: poly[i], normal: nrm[i], weight: w });
                perimeter += w;
            }
            area += shoelace(&poly).abs();
            comps.push(poly);
        }
        let set = LipschitzSet { shape: Shape::Polygons(comps), boundary, perimeter, area };
        set.check_inside(domain)?;
        Ok(set)
    }

    /// Empty set (e.g. a sublevel set above the sup of the function).
    pub fn empty() -> Self {
        LipschitzSet {
            shape: Shape::Polygons(vec![]),
            boundary: vec![],
            perimeter: 0.0,
            area: 0.0,
        }
    }

    fn check_inside(&self, domain: &Domain) -> Result<()> {
        let mut min_dist = f64::INFINITY;
        for b in &self.boundary {
            min_dist = min_dist.min(domain.distance_to_boundary(&b.point));
        }
        if !self.boundary.is_empty() && min_dist <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "set closure is not strictly inside the domain (min boundary distance {min_dist})"
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Circle { center, r } => {
                (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) < r * r
            }
            Shape::Polygons(comps) => {
                // even-odd across components (disjoint loops in practice)
                let mut inside = false;
                for poly in comps {
                    if point_in_polygon(poly, x) {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    /// `circle:r=0.25:cx=0:cy=0:seg=256` or `sector:r0=..:r1=..:th0=..:th1=..`.
    pub fn from_spec(spec: &str, domain: &Domain) -> Result<Self> {
        let s = SpecStr::parse(spec)?;
        match s.name.as_str() {
            "circle" => {
                s.check_keys(&["r", "cx", "cy", "seg"])?;
                LipschitzSet::circle(
                    [s.f64("cx", 0.0)?, s.f64("cy", 0.0)?],
                    s.f64("r", 0.25)?,
                    s.usize("seg", 256)?,
                    domain,
                )
            }
            "sector" => {
                s.check_keys(&["r0", "r1", "th0", "th1", "cx", "cy", "arcres"])?;
                LipschitzSet::annulus_sector(
                    [s.f64("cx", 0.0)?, s.f64("cy", 0.0)?],
                    s.f64("r0", 0.3)?,
                    s.f64("r1", 0.7)?,
                    s.f64("th0", 0.0)?,
                    s.f64("th1", std::f64::consts::PI)?,
                    s.usize("arcres", 64)?,
                    domain,
                )
            }
            other => Err(Error::UnknownName(format!("lipschitz set {other:?}"))),
        }
    }
}
