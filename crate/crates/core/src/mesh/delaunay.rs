//! Incremental Bowyer–Watson triangulation.
//!
//! The convex hull is closed with "ghost" triangles that share a symbolic
//! vertex at infinity, so no super-triangle is needed and hull points are
//! handled with the same cavity logic as interior points. All geometric
//! decisions go through exact predicates.

use std::collections::HashMap;

use super::{incircle, orient2d, MeshError, Point2, TriMesh};

const GHOST: usize = usize::MAX;
const NONE: usize = usize::MAX;

/// Result of [`delaunay_triangulate`]. Mesh vertices are the distinct input
/// points in first-occurrence order.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub mesh: TriMesh,
    /// Input indices dropped as exact duplicates of an earlier point.
    pub duplicates: Vec<usize>,
    /// For every input point, the mesh vertex it ended up as.
    pub input_to_vertex: Vec<usize>,
}

struct Builder<'a> {
    pts: &'a [Point2],
    tris: Vec<[usize; 3]>,
    // nbr[t][k] is the triangle across the edge opposite tris[t][k]
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    last: usize,
    stamp: Vec<u32>,
    epoch: u32,
}

impl<'a> Builder<'a> {
    fn is_ghost(&self, t: usize) -> bool {
        self.tris[t].contains(&GHOST)
    }

    fn conflicts(&self, t: usize, p: Point2) -> bool {
        let tri = self.tris[t];
        if let Some(k) = tri.iter().position(|&v| v == GHOST) {
            // Hull edge a->b with the exterior on its left.
            let a = self.pts[tri[(k + 1) % 3]];
            let b = self.pts[tri[(k + 2) % 3]];
            let o = orient2d(a, b, p);
            if o > 0.0 {
                return true;
            }
            if o < 0.0 {
                return false;
            }
            // Collinear: conflict only strictly inside the segment.
            let dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
            let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
            dot > 0.0 && dot < len2
        } else {
            incircle(self.pts[tri[0]], self.pts[tri[1]], self.pts[tri[2]], p) > 0.0
        }
    }

    fn push(&mut self, tri: [usize; 3]) -> usize {
        self.tris.push(tri);
        self.nbr.push([NONE; 3]);
        self.alive.push(true);
        self.stamp.push(0);
        self.tris.len() - 1
    }

    /// Visibility walk from the last touched real triangle. Returns a
    /// triangle in conflict with `p`.
    fn locate(&self, p: Point2) -> usize {
        let mut t = self.last;
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > self.tris.len() + 8 {
                break;
            }
            if self.is_ghost(t) {
                return t;
            }
            let tri = self.tris[t];
            let mut moved = false;
            for k in 0..3 {
                let a = self.pts[tri[(k + 1) % 3]];
                let b = self.pts[tri[(k + 2) % 3]];
                if orient2d(a, b, p) < 0.0 {
                    t = self.nbr[t][k];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return t;
            }
        }
        // Fallback scan; not reached for a valid Delaunay triangulation.
        (0..self.tris.len())
            .find(|&t| self.alive[t] && self.conflicts(t, p))
            .expect("some triangle conflicts with a new point")
    }

    fn insert(&mut self, vi: usize) {
        let p = self.pts[vi];
        let start = self.locate(p);
        self.epoch += 1;
        let epoch = self.epoch;

        let mut cavity = vec![start];
        self.stamp[start] = epoch;
        // (u, v, outside triangle, slot in outside triangle)
        let mut boundary: Vec<(usize, usize, usize, usize)> = Vec::new();
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            for k in 0..3 {
                let n = self.nbr[t][k];
                if self.stamp[n] == epoch {
                    continue;
                }
                if self.conflicts(n, p) {
                    self.stamp[n] = epoch;
                    cavity.push(n);
                } else {
                    let u = self.tris[t][(k + 1) % 3];
                    let v = self.tris[t][(k + 2) % 3];
                    let slot = (0..3)
                        .find(|&s| self.nbr[n][s] == t)
                        .expect("adjacency is symmetric");
                    boundary.push((u, v, n, slot));
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
        }

        let mut by_start: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(u, v, n, slot) in &boundary {
            let t = self.push([u, v, vi]);
            self.nbr[t][2] = n;
            self.nbr[n][slot] = t;
            by_start.insert(u, t);
            created.push(t);
        }
        for &t in &created {
            let [_, v, _] = self.tris[t];
            // edge (v, p) is opposite u (slot 0); its twin starts at v
            let other = by_start[&v];
            self.nbr[t][0] = other;
            // and in `other` = [v, w, p] the edge (p, v) is opposite w (slot 1)
            self.nbr[other][1] = t;
        }
        if let Some(&t) = created.iter().find(|&&t| !self.is_ghost(t)) {
            self.last = t;
        }
    }

    /// Replace cocircular diagonals so each such quad uses the diagonal
    /// through its lowest-index vertex.
    fn canonicalize_ties(&mut self) {
        let mut changed = true;
        while changed {
            changed = false;
            for t in 0..self.tris.len() {
                if !self.alive[t] || self.is_ghost(t) {
                    continue;
                }
                for k in 0..3 {
                    let n = self.nbr[t][k];
                    if n == NONE || !self.alive[n] || self.is_ghost(n) {
                        continue;
                    }
                    let a = self.tris[t][k];
                    let b = self.tris[t][(k + 1) % 3];
                    let c = self.tris[t][(k + 2) % 3];
                    let kn = (0..3).find(|&s| self.nbr[n][s] == t).unwrap();
                    let d = self.tris[n][kn];
                    if incircle(self.pts[a], self.pts[b], self.pts[c], self.pts[d]) != 0.0 {
                        continue;
                    }
                    let lowest = a.min(b).min(c).min(d);
                    if lowest == b || lowest == c {
                        continue;
                    }
                    // flipping b-c to a-d must give two proper triangles
                    if !(orient2d(self.pts[a], self.pts[b], self.pts[d]) > 0.0
                        && orient2d(self.pts[a], self.pts[d], self.pts[c]) > 0.0)
                    {
                        continue;
                    }
                    self.flip(t, k, n, kn);
                    changed = true;
                }
            }
        }
    }

    // t = [a, b, c] with a at slot k, n = [d, c, b] with d at slot kn.
    fn flip(&mut self, t: usize, k: usize, n: usize, kn: usize) {
        let a = self.tris[t][k];
        let b = self.tris[t][(k + 1) % 3];
        let c = self.tris[t][(k + 2) % 3];
        let d = self.tris[n][kn];
        let t_ab = self.nbr[t][(k + 2) % 3]; // opposite c: edge a-b
        let t_ca = self.nbr[t][(k + 1) % 3]; // opposite b: edge c-a
        let n_bd = self.nbr[n][(kn + 1) % 3]; // opposite c in n: edge b-d
        let n_dc = self.nbr[n][(kn + 2) % 3]; // opposite b in n: edge d-c

        // t' = [a, b, d], n' = [a, d, c]
        self.tris[t] = [a, b, d];
        self.nbr[t] = [n_bd, n, t_ab];
        self.tris[n] = [a, d, c];
        self.nbr[n] = [n_dc, t_ca, t];
        self.relink(n_bd, n, t);
        self.relink(t_ca, t, n);
    }

    fn relink(&mut self, tri: usize, old: usize, new: usize) {
        if let Some(s) = (0..3).find(|&s| self.nbr[tri][s] == old) {
            self.nbr[tri][s] = new;
        }
    }
}

/// Delaunay triangulation of a planar point set.
///
/// Exact duplicates are merged (reported in [`Triangulation::duplicates`]).
/// Cocircular configurations resolve to the diagonal through the
/// lowest-index vertex of the quad, so the output depends only on the input
/// order, never on floating-point noise.
pub fn delaunay_triangulate(points: &[Point2]) -> Result<Triangulation, MeshError> {
    if let Some(i) = points
        .iter()
        .position(|p| !(p.x.is_finite() && p.y.is_finite()))
    {
        return Err(MeshError::NonFinite(i));
    }

    // Dedupe exact duplicates, first occurrence wins.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .x
            .total_cmp(&points[j].x)
            .then(points[i].y.total_cmp(&points[j].y))
            .then(i.cmp(&j))
    });
    let mut input_to_vertex = vec![usize::MAX; points.len()];
    let mut duplicates = Vec::new();
    let mut keep = vec![true; points.len()];
    let mut first_of_run = vec![usize::MAX; points.len()];
    let mut run_first = order.first().copied().unwrap_or(0);
    for w in 1..order.len() {
        let (i, j) = (order[w - 1], order[w]);
        if points[i] == points[j] {
            keep[j] = false;
            duplicates.push(j);
            first_of_run[j] = run_first;
        } else {
            run_first = j;
        }
    }
    duplicates.sort_unstable();
    let mut unique = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if keep[i] {
            input_to_vertex[i] = unique.len();
            unique.push(*p);
        }
    }
    for &j in &duplicates {
        input_to_vertex[j] = input_to_vertex[first_of_run[j]];
    }
    let pts = unique;
    if pts.len() < 3 {
        return Err(MeshError::TooFewPoints(pts.len()));
    }

    // Seed triangle: first two points plus the first non-collinear third.
    let (i0, i1) = (0usize, 1usize);
    let i2 = (2..pts.len())
        .find(|&k| orient2d(pts[i0], pts[i1], pts[k]) != 0.0)
        .ok_or(MeshError::Collinear)?;
    let (a, b, c) = if orient2d(pts[i0], pts[i1], pts[i2]) > 0.0 {
        (i0, i1, i2)
    } else {
        (i0, i2, i1)
    };

    let mut bld = Builder {
        pts: &pts,
        tris: Vec::with_capacity(pts.len() * 2 + 8),
        nbr: Vec::new(),
        alive: Vec::new(),
        last: 0,
        stamp: Vec::new(),
        epoch: 0,
    };
    for tri in [[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]] {
        bld.push(tri);
    }
    link_all(&mut bld);

    // Spatially coherent insertion order keeps walks short.
    let mut rest: Vec<usize> = (0..pts.len()).filter(|&k| k != i0 && k != i1 && k != i2).collect();
    sort_hilbert(&pts, &mut rest);
    for vi in rest {
        bld.insert(vi);
    }
    bld.canonicalize_ties();

    let mut boundary = vec![false; pts.len()];
    let mut triangles = Vec::with_capacity(pts.len() * 2);
    for (t, tri) in bld.tris.iter().enumerate() {
        if !bld.alive[t] {
            continue;
        }
        if tri.contains(&GHOST) {
            for &v in tri {
                if v != GHOST {
                    boundary[v] = true;
                }
            }
        } else {
            triangles.push(*tri);
        }
    }
    // Canonical ordering: rotate so the smallest index leads, then sort.
    for tri in &mut triangles {
        let m = (0..3).min_by_key(|&k| tri[k]).unwrap();
        tri.rotate_left(m);
    }
    triangles.sort_unstable();

    let mesh = TriMesh::new(pts, triangles, boundary)?;
    Ok(Triangulation {
        mesh,
        duplicates,
        input_to_vertex,
    })
}

fn link_all(bld: &mut Builder<'_>) {
    let mut edge: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for t in 0..bld.tris.len() {
        for k in 0..3 {
            let u = bld.tris[t][(k + 1) % 3];
            let v = bld.tris[t][(k + 2) % 3];
            edge.insert((u, v), (t, k));
        }
    }
    for t in 0..bld.tris.len() {
        for k in 0..3 {
            let u = bld.tris[t][(k + 1) % 3];
            let v = bld.tris[t][(k + 2) % 3];
            let (n, _) = edge[&(v, u)];
            bld.nbr[t][k] = n;
        }
    }
    bld.last = 0;
}

fn sort_hilbert(pts: &[Point2], idx: &mut [usize]) {
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &i in idx.iter() {
        min_x = min_x.min(pts[i].x);
        min_y = min_y.min(pts[i].y);
        max_x = max_x.max(pts[i].x);
        max_y = max_y.max(pts[i].y);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
    const SIDE: u32 = 1 << 16;
    let key = |i: usize| {
        let qx = (((pts[i].x - min_x) / span) * (SIDE - 1) as f64) as u32;
        let qy = (((pts[i].y - min_y) / span) * (SIDE - 1) as f64) as u32;
        hilbert_index(SIDE, qx, qy)
    };
    idx.sort_by_cached_key(|&i| (key(i), i));
}

fn hilbert_index(side: u32, mut x: u32, mut y: u32) -> u64 {
    let mut d = 0u64;
    let mut s = side / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = side - 1 - x;
                y = side - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}
