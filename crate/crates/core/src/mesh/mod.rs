//! Planar triangle meshes: Delaunay construction, region seeding, Laplacian
//! smoothing, quality metrics and contour extraction.

mod contour;
mod delaunay;
mod quality;
mod seed;
mod smooth;

pub use contour::{extract_contours, ContourLevel, Polyline};
pub use delaunay::{delaunay_triangulate, Triangulation};
pub use quality::{mesh_quality, surface_quality, MeshQuality};
pub use seed::{seed_region, SeedStrategy};
pub use smooth::laplacian_smooth;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("need at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("all input points are collinear")]
    Collinear,
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("invalid seeding configuration: {0}")]
    Config(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("mesh has no elevations")]
    NoElevations,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Twice the signed plan-view area of (a, b, c); positive when counter-clockwise.
/// Exact sign via adaptive-precision arithmetic.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// Positive when `d` lies strictly inside the circle through the
/// counter-clockwise triangle (a, b, c).
pub fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    robust::incircle(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
        robust::Coord { x: d.x, y: d.y },
    )
}

/// Twice the area is below `1e-8` of the squared longest side, i.e. the
/// smallest angle is around a millionth of a degree or less.
fn is_sliver([a, b, c]: [Point2; 3]) -> bool {
    let longest = a.dist(b).max(b.dist(c)).max(c.dist(a));
    orient2d(a, b, c).abs() <= 1e-8 * longest * longest
}

/// Convex quadrilateral region given by four corners in counter-clockwise
/// order. An axis-aligned rectangle is the common case; a geographic
/// rectangle projected to UTM is a slightly skewed one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub corners: [Point2; 4],
}

impl Quad {
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            corners: [
                Point2::new(min_x, min_y),
                Point2::new(max_x, min_y),
                Point2::new(max_x, max_y),
                Point2::new(min_x, max_y),
            ],
        }
    }

    /// Orders arbitrary corners counter-clockwise, starting from the corner
    /// with the smallest `x + y`.
    pub fn from_corners(corners: [Point2; 4]) -> Result<Self, MeshError> {
        let cx = corners.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let cy = corners.iter().map(|p| p.y).sum::<f64>() / 4.0;
        let mut c = corners;
        c.sort_by(|a, b| {
            let ta = (a.y - cy).atan2(a.x - cx);
            let tb = (b.y - cy).atan2(b.x - cx);
            ta.total_cmp(&tb)
        });
        let start = (0..4)
            .min_by(|&i, &j| (c[i].x + c[i].y).total_cmp(&(c[j].x + c[j].y)))
            .unwrap_or(0);
        c.rotate_left(start);
        let q = Self { corners: c };
        for i in 0..4 {
            let o = orient2d(c[i], c[(i + 1) % 4], c[(i + 2) % 4]);
            if !(o > 0.0) {
                return Err(MeshError::Config("region is not a convex quadrilateral".into()));
            }
        }
        Ok(q)
    }

    /// Bilinear map from the unit square.
    pub fn at(&self, u: f64, v: f64) -> Point2 {
        let [a, b, c, d] = self.corners;
        let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
        Point2::new(
            w[0] * a.x + w[1] * b.x + w[2] * c.x + w[3] * d.x,
            w[0] * a.y + w[1] * b.y + w[2] * c.y + w[3] * d.y,
        )
    }

    /// Mean lengths of the (bottom/top) and (left/right) side pairs.
    pub fn side_lengths(&self) -> (f64, f64) {
        let [a, b, c, d] = self.corners;
        (0.5 * (a.dist(b) + d.dist(c)), 0.5 * (a.dist(d) + b.dist(c)))
    }
}

/// Indexed triangle mesh. Triangles are counter-clockwise in plan view.
/// `elevations`, when present, lifts the mesh to 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub elevations: Option<Vec<f64>>,
}

impl TriMesh {
    /// Builds a planar mesh and checks index ranges, orientation and
    /// boundary flag count.
    pub fn new(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self, MeshError> {
        let m = Self {
            vertices,
            triangles,
            boundary,
            elevations: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len();
        if self.boundary.len() != n {
            return Err(MeshError::Invalid(format!(
                "{} boundary flags for {n} vertices",
                self.boundary.len()
            )));
        }
        if let Some(z) = &self.elevations {
            if z.len() != n {
                return Err(MeshError::Invalid(format!(
                    "{} elevations for {n} vertices",
                    z.len()
                )));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(MeshError::Invalid(format!("triangle {t} index out of range")));
            }
            if !(self.signed_area2(t) > 0.0) {
                return Err(MeshError::Invalid(format!(
                    "triangle {t} is degenerate or clockwise"
                )));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn signed_area2(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        orient2d(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Undirected edges, each once, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = HashSet::with_capacity(self.triangles.len() * 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Edge-connected neighbours of every vertex, sorted ascending.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// 3D position of vertex `i` (z = 0 for a planar mesh).
    pub fn position3(&self, i: usize) -> [f64; 3] {
        let p = self.vertices[i];
        let z = self.elevations.as_ref().map_or(0.0, |z| z[i]);
        [p.x, p.y, z]
    }

    pub fn with_elevations(mut self, z: Vec<f64>) -> Result<Self, MeshError> {
        self.elevations = Some(z);
        self.validate()?;
        Ok(self)
    }

    /// Removes near-zero-area triangles on the hull, repeatedly, and
    /// recomputes the boundary flags. Seeds on a projected straight side are
    /// only collinear to rounding error, and an exact triangulation closes
    /// them with slivers that have no geometric meaning.
    pub fn peel_boundary_slivers(&self) -> TriMesh {
        let mut tris = self.triangles.clone();
        loop {
            let mut uses: HashMap<(usize, usize), u32> = HashMap::with_capacity(tris.len() * 2);
            for t in &tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    *uses.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            let on_hull = |t: &[usize; 3]| {
                (0..3).any(|k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    uses[&(a.min(b), a.max(b))] == 1
                })
            };
            let before = tris.len();
            let vertices = &self.vertices;
            tris.retain(|t| !(on_hull(t) && is_sliver(t.map(|i| vertices[i]))));
            if tris.len() == before {
                let mut boundary = vec![false; self.vertices.len()];
                let mut used = vec![false; self.vertices.len()];
                for t in &tris {
                    for k in 0..3 {
                        used[t[k]] = true;
                        let (a, b) = (t[k], t[(k + 1) % 3]);
                        if uses[&(a.min(b), a.max(b))] == 1 {
                            boundary[a] = true;
                            boundary[b] = true;
                        }
                    }
                }
                for (b, u) in boundary.iter_mut().zip(&used) {
                    *b |= !u;
                }
                return TriMesh {
                    vertices: self.vertices.clone(),
                    triangles: tris,
                    boundary,
                    elevations: self.elevations.clone(),
                };
            }
        }
    }

    /// Euler characteristic V - E + F, counting the outer face.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64 + 1
    }
}
