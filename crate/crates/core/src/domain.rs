//! Planar domains with interior and boundary quadrature.
//!
//! Interior rules use per-cell 2-point tensor Gauss nodes (exact for
//! quadratics, positive weights, weights summing exactly to the area).
//! Boundary rules are uniform arcs/segments with exact total length and
//! outward unit normals.

use crate::error::{Error, Result};
use crate::specstr::SpecStr;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
    Disk { center: [f64; 2], r: f64 },
    Annulus { center: [f64; 2], r0: f64, r1: f64 },
}

/// A quadrature node on the boundary: position, outward unit normal, arc weight.
#[derive(Debug, Clone)]
pub struct BoundaryNode {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub weight: f64,
}

/// Bounded planar region with quadrature. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Domain {
    pub kind: DomainKind,
    pub resolution: usize,
    interior: Vec<([f64; 2], f64)>,
    boundary: Vec<BoundaryNode>,
    cell_diameter: f64,
}

const GAUSS2: f64 = 0.5773502691896258; // 1/sqrt(3)

fn gauss2_nodes(a: f64, b: f64) -> [(f64, f64); 2] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    [(mid - half * GAUSS2, half), (mid + half * GAUSS2, half)]
}

impl Domain {
    pub fn dimension(&self) -> usize {
        2
    }

    /// Build a domain; `resolution` counts interior nodes per axis on
    /// rectangles (rounded up to even) and radial nodes on disks.
    pub fn new(kind: DomainKind, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::InvalidParameter(format!(
                "resolution must be >= 4, got {resolution}"
            )));
        }
        let cells = resolution.div_ceil(2);
        match kind {
            DomainKind::Rectangle { lo, hi } => {
                if hi[0] <= lo[0] || hi[1] <= lo[1] {
                    return Err(Error::InvalidGeometry(format!(
                        "rectangle corners ({},{}) .. ({},{}) do not bound a region",
                        lo[0], lo[1], hi[0], hi[1]
                    )));
                }
                let (dx, dy) = ((hi[0] - lo[0]) / cells as f64, (hi[1] - lo[1]) / cells as f64);
                let mut interior = Vec::with_capacity(4 * cells * cells);
                for i in 0..cells {
                    let x0 = lo[0] + i as f64 * dx;
                    for (gx, wx) in gauss2_nodes(x0, x0 + dx) {
                        for j in 0..cells {
                            let y0 = lo[1] + j as f64 * dy;
                            for (gy, wy) in gauss2_nodes(y0, y0 + dy) {
                                interior.push(([gx, gy], wx * wy));
                            }
                        }
                    }
                }
                let mut boundary = Vec::with_capacity(4 * resolution);
                let nseg = resolution;
                // four edges, midpoint nodes, exact segment weights
                let edges: [([f64; 2], [f64; 2], [f64; 2]); 4] = [
                    (lo, [hi[0], lo[1]], [0.0, -1.0]),
                    ([hi[0], lo[1]], hi, [1.0, 0.0]),
                    (hi, [lo[0], hi[1]], [0.0, 1.0]),
                    ([lo[0], hi[1]], lo, [-1.0, 0.0]),
                ];
                for (a, b, normal) in edges {
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    for s in 0..nseg {
                        let f = (s as f64 + 0.5) / nseg as f64;
                        boundary.push(BoundaryNode {
                            point: [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])],
                            normal,
                            weight: len / nseg as f64,
                        });
                    }
                }
                let cell_diameter = (dx * dx + dy * dy).sqrt();
                Ok(Domain { kind, resolution, interior, boundary, cell_diameter })
            }
            DomainKind::Disk { center, r } => {
                if r <= 0.0 {
                    return Err(Error::InvalidGeometry(format!("disk radius {r} <= 0")));
                }
                Self::polar(kind, center, 0.0, r, resolution, cells)
            }
            DomainKind::Annulus { center, r0, r1 } => {
                if r0 <= 0.0 || r1 <= r0 {
                    return Err(Error::InvalidGeometry(format!(
                        "annulus radii {r0} .. {r1} do not bound a region"
                    )));
                }
                Self::polar(kind, center, r0, r1, resolution, cells)
            }
        }
    }

    fn polar(
        kind: DomainKind,
        center: [f64; 2],
        r0: f64,
        r1: f64,
        resolution: usize,
        cells: usize,
    ) -> Result<Self> {
        let ntheta = 4 * resolution;
        let dtheta = 2.0 * std::f64::consts::PI / ntheta as f64;
        let dr = (r1 - r0) / cells as f64;
        let mut interior = Vec::with_capacity(2 * cells * ntheta);
        for i in 0..cells {
            let ra = r0 + i as f64 * dr;
            for (rg, wr) in gauss2_nodes(ra, ra + dr) {
                for j in 0..ntheta {
                    let th = (j as f64 + 0.5) * dtheta;
                    interior.push((
                        [center[0] + rg * th.cos(), center[1] + rg * th.sin()],
                        rg * wr * dtheta,
                    ));
                }
            }
        }
        let mut boundary = Vec::with_capacity(2 * ntheta);
        for j in 0..ntheta {
            let th = (j as f64 + 0.5) * dtheta;
            let (c, s) = (th.cos(), th.sin());
            boundary.push(BoundaryNode {
                point: [center[0] + r1 * c, center[1] + r1 * s],
                normal: [c, s],
                weight: r1 * dtheta,
            });
            if r0 > 0.0 {
                boundary.push(BoundaryNode {
                    point: [center[0] + r0 * c, center[1] + r0 * s],
                    normal: [-c, -s],
                    weight: r0 * dtheta,
                });
            }
        }
        let cell_diameter = (dr * dr + (r1 * dtheta) * (r1 * dtheta)).sqrt();
        Ok(Domain { kind, resolution, interior, boundary, cell_diameter })
    }

    pub fn interior_nodes(&self) -> &[([f64; 2], f64)] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            DomainKind::Rectangle { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            DomainKind::Disk { r, .. } => std::f64::consts::PI * r * r,
            DomainKind::Annulus { r0, r1, .. } => std::f64::consts::PI * (r1 * r1 - r0 * r0),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.kind {
            DomainKind::Rectangle { lo, hi } => 2.0 * (hi[0] - lo[0] + hi[1] - lo[1]),
            DomainKind::Disk { r, .. } => 2.0 * std::f64::consts::PI * r,
            DomainKind::Annulus { r0, r1, .. } => 2.0 * std::f64::consts::PI * (r0 + r1),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::Rectangle { lo, hi } => {
                ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
            }
            DomainKind::Disk { r, .. } => 2.0 * r,
            DomainKind::Annulus { r1, .. } => 2.0 * r1,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance_to_boundary(x) > 0.0
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    /// Analytic for all supported shapes.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self.kind {
            DomainKind::Rectangle { lo, hi } => {
                let dx = (x[0] - lo[0]).min(hi[0] - x[0]);
                let dy = (x[1] - lo[1]).min(hi[1] - x[1]);
                dx.min(dy)
            }
            DomainKind::Disk { center, r } => {
                r - ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt()
            }
            DomainKind::Annulus { center, r0, r1 } => {
                let rho = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
                (rho - r0).min(r1 - rho)
            }
        }
    }

    /// Axis-aligned bounding box (lo, hi).
    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match self.kind {
            DomainKind::Rectangle { lo, hi } => (lo, hi),
            DomainKind::Disk { center, r } | DomainKind::Annulus { center, r1: r, .. } => {
                ([center[0] - r, center[1] - r], [center[0] + r, center[1] + r])
            }
        }
    }

    /// Diameter of one interior quadrature cell; the near-diagonal cutoff
    /// for the fractional seminorm sums.
    pub fn cell_diameter(&self) -> f64 {
        self.cell_diameter
    }

    /// Default central-difference step for gradients sampled on this domain.
    pub fn fd_step(&self) -> f64 {
        self.diameter() / (8.0 * self.resolution as f64)
    }

    /// Uniformly spaced points exactly on the boundary (finer than the
    /// quadrature when needed, e.g. to certify distance-to-boundary-image
    /// tolerances).
    pub fn boundary_samples(&self, count: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(count);
        match self.kind {
            DomainKind::Rectangle { lo, hi } => {
                let corners = [
                    lo,
                    [hi[0], lo[1]],
                    hi,
                    [lo[0], hi[1]],
                ];
                let perim = self.perimeter();
                for k in 0..count {
                    let mut s = perim * k as f64 / count as f64;
                    for e in 0..4 {
                        let a = corners[e];
                        let b = corners[(e + 1) % 4];
                        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                        if s <= len {
                            let f = s / len;
                            out.push([a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]);
                            break;
                        }
                        s -= len;
                    }
                }
            }
            DomainKind::Disk { center, r } => {
                for k in 0..count {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                    out.push([center[0] + r * th.cos(), center[1] + r * th.sin()]);
                }
            }
            DomainKind::Annulus { center, r0, r1 } => {
                let half = count / 2;
                for k in 0..half {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / half as f64;
                    out.push([center[0] + r1 * th.cos(), center[1] + r1 * th.sin()]);
                }
                for k in 0..(count - half) {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / (count - half) as f64;
                    out.push([center[0] + r0 * th.cos(), center[1] + r0 * th.sin()]);
                }
            }
        }
        out
    }

    /// Regular point lattice over the bounding box, used for contour
    /// extraction and preimage cell seeding.
    pub fn lattice(&self, npts: usize) -> Lattice {
        let (lo, hi) = self.bbox();
        Lattice {
            origin: lo,
            h: [
                (hi[0] - lo[0]) / (npts - 1) as f64,
                (hi[1] - lo[1]) / (npts - 1) as f64,
            ],
            npts: [npts, npts],
        }
    }

    pub fn from_spec(spec: &str) -> Result<Self> {
        let s = SpecStr::parse(spec)?;
        match s.name.as_str() {
            "square" => {
                s.check_keys(&["res"])?;
                let res = s.usize("res", 64)?;
                Domain::new(DomainKind::Rectangle { lo: [0.0, 0.0], hi: [1.0, 1.0] }, res)
            }
            "rect" => {
                s.check_keys(&["x0", "y0", "x1", "y1", "res"])?;
                let lo = [s.f64("x0", 0.0)?, s.f64("y0", 0.0)?];
                let hi = [s.f64("x1", 1.0)?, s.f64("y1", 1.0)?];
                Domain::new(DomainKind::Rectangle { lo, hi }, s.usize("res", 64)?)
            }
            "disk" => {
                s.check_keys(&["r", "cx", "cy", "res"])?;
                let center = [s.f64("cx", 0.0)?, s.f64("cy", 0.0)?];
                Domain::new(DomainKind::Disk { center, r: s.f64("r", 1.0)? }, s.usize("res", 64)?)
            }
            "annulus" => {
                s.check_keys(&["r0", "r1", "cx", "cy", "res"])?;
                let center = [s.f64("cx", 0.0)?, s.f64("cy", 0.0)?];
                Domain::new(
                    DomainKind::Annulus { center, r0: s.f64("r0", 0.5)?, r1: s.f64("r1", 1.0)? },
                    s.usize("res", 64)?,
                )
            }
            other => Err(Error::UnknownName(format!("domain {other:?}"))),
        }
    }
}

/// Regular point lattice over a bounding box.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub origin: [f64; 2],
    pub h: [f64; 2],
    pub npts: [usize; 2],
}

impl Lattice {
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h[0], self.origin[1] + j as f64 * self.h[1]]
    }

    pub fn cell_count(&self) -> [usize; 2] {
        [self.npts[0] - 1, self.npts[1] - 1]
    }
}
