use std::collections::HashMap;

use rayon::prelude::*;

use super::{MeshError, Point2, TriMesh};

/// One contour line. `edges[k]` is the mesh edge (sorted vertex pair) that
/// `points[k]` lies on. Closed loops do not repeat their first point.
/// Walking along a polyline, higher ground is on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point2>,
    pub edges: Vec<(usize, usize)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourLevel {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

struct Segment {
    from: (usize, usize),
    to: (usize, usize),
}

/// Marching-triangles contouring of a lifted mesh.
///
/// Vertex heights that sit exactly on a level are raised by
/// `1e-9 * level spacing` first, so every crossing is a proper edge
/// crossing and polylines never pass through vertices.
pub fn extract_contours(m: &TriMesh, levels: &[f64]) -> Result<Vec<ContourLevel>, MeshError> {
    let z = m.elevations.as_ref().ok_or(MeshError::NoElevations)?;
    if levels.is_empty() {
        return Ok(Vec::new());
    }
    let nudge = 1e-9 * level_spacing(levels, z);
    Ok(levels
        .par_iter()
        .map(|&level| ContourLevel {
            level,
            polylines: contour_level(m, z, level, nudge),
        })
        .collect())
}

fn level_spacing(levels: &[f64], z: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        return gap;
    }
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi > lo {
        hi - lo
    } else {
        levels[0].abs().max(1.0)
    }
}

fn contour_level(m: &TriMesh, z: &[f64], level: f64, nudge: f64) -> Vec<Polyline> {
    let height = |i: usize| if z[i] == level { z[i] + nudge } else { z[i] };
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    let mut segments = Vec::new();
    for tri in &m.triangles {
        let mut up = None;
        let mut down = None;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (za, zb) = (height(a), height(b));
            if za < level && zb > level {
                up = Some(key(a, b));
            } else if za > level && zb < level {
                down = Some(key(a, b));
            }
        }
        if let (Some(from), Some(to)) = (down, up) {
            segments.push(Segment { from, to });
        }
    }

    let point = |(a, b): (usize, usize)| {
        let (za, zb) = (height(a), height(b));
        let t = (level - za) / (zb - za);
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        Point2::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y))
    };

    let start_at: HashMap<(usize, usize), usize> =
        segments.iter().enumerate().map(|(i, s)| (s.from, i)).collect();
    let mut has_prev = vec![false; segments.len()];
    for s in &segments {
        if let Some(&n) = start_at.get(&s.to) {
            has_prev[n] = true;
        }
    }

    let mut visited = vec![false; segments.len()];
    let mut out = Vec::new();
    let mut trace = |first: usize, closed: bool, visited: &mut Vec<bool>| {
        let mut edges = vec![segments[first].from];
        let mut cur = first;
        loop {
            visited[cur] = true;
            let to = segments[cur].to;
            match start_at.get(&to) {
                Some(&n) if !visited[n] => {
                    edges.push(to);
                    cur = n;
                }
                _ => {
                    if !closed {
                        edges.push(to);
                    }
                    break;
                }
            }
        }
        let points = edges.iter().map(|&e| point(e)).collect();
        out.push(Polyline {
            points,
            edges,
            closed,
        });
    };
    for i in 0..segments.len() {
        if !visited[i] && !has_prev[i] {
            trace(i, false, &mut visited);
        }
    }
    for i in 0..segments.len() {
        if !visited[i] {
            trace(i, true, &mut visited);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{delaunay_triangulate, seed_region, Quad, SeedStrategy};

    fn lifted(q: Quad, spacing: f64, f: impl Fn(f64, f64) -> f64) -> TriMesh {
        let pts = seed_region(&q, spacing, SeedStrategy::Jittered { seed: 42 }).unwrap();
        let m = delaunay_triangulate(&pts).unwrap().mesh;
        let z = m.vertices.iter().map(|p| f(p.x, p.y)).collect();
        m.with_elevations(z).unwrap()
    }

    #[test]
    fn plane_gives_straight_line() {
        let m = lifted(Quad::rect(0.0, 0.0, 1.0, 1.0), 0.1, |x, _| x);
        let c = extract_contours(&m, &[0.5]).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].polylines.len(), 1);
        let line = &c[0].polylines[0];
        assert!(!line.closed);
        for p in &line.points {
            // boundary vertices at x = 0.5 are nudged by 1e-9 of the spacing
            assert!((p.x - 0.5).abs() < 2e-9, "{p:?}");
        }
        let ys: Vec<f64> = line.points.iter().map(|p| p.y).collect();
        // higher ground (x > 0.5) on the left means walking south
        assert!((ys[0] - 1.0).abs() < 1e-9 && ys.last().unwrap().abs() < 1e-9);
    }

    #[test]
    fn constant_field_has_no_contours() {
        let m = lifted(Quad::rect(0.0, 0.0, 1.0, 1.0), 0.25, |_, _| 3.0);
        let c = extract_contours(&m, &[1.0, 2.0, 4.0]).unwrap();
        assert!(c.iter().all(|l| l.polylines.is_empty()));
        // a level equal to the constant is nudged away
        let c = extract_contours(&m, &[3.0]).unwrap();
        assert!(c[0].polylines.is_empty());
    }

    #[test]
    fn empty_levels() {
        let m = lifted(Quad::rect(0.0, 0.0, 1.0, 1.0), 0.25, |x, _| x);
        assert!(extract_contours(&m, &[]).unwrap().is_empty());
        let planar = delaunay_triangulate(&m.vertices).unwrap().mesh;
        assert_eq!(extract_contours(&planar, &[0.5]), Err(MeshError::NoElevations));
    }

    #[test]
    fn vertex_on_level_is_nudged() {
        // grid vertices at x = 0.5 sit exactly on the level
        let q = Quad::rect(0.0, 0.0, 1.0, 1.0);
        let pts = seed_region(&q, 0.25, SeedStrategy::Grid).unwrap();
        let m = delaunay_triangulate(&pts).unwrap().mesh;
        let z = m.vertices.iter().map(|p| p.x).collect();
        let m = m.with_elevations(z).unwrap();
        let c = extract_contours(&m, &[0.5, 0.75]).unwrap();
        assert_eq!(c[0].polylines.len(), 1);
        for p in &c[0].polylines[0].points {
            assert!((p.x - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_hill_level_is_closed_circle() {
        let (a, sigma) = (60.0, 80.0);
        let m = lifted(Quad::rect(-200.0, -200.0, 200.0, 200.0), 10.0, |x, y| {
            400.0 + a * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
        });
        let c = extract_contours(&m, &[400.0 + a / 2.0]).unwrap();
        assert_eq!(c[0].polylines.len(), 1);
        let loop_ = &c[0].polylines[0];
        assert!(loop_.closed);
        let r = sigma * (2.0 * 2f64.ln()).sqrt();
        for p in &loop_.points {
            assert!(((p.x * p.x + p.y * p.y).sqrt() - r).abs() < 10.0 * 1.5);
        }
        // every point lies on its mesh edge at the interpolated level
        let z = m.elevations.as_ref().unwrap();
        for (p, &(i, j)) in loop_.points.iter().zip(&loop_.edges) {
            let (pi, pj) = (m.vertices[i], m.vertices[j]);
            let t = pi.dist(*p) / pi.dist(pj);
            let zi = z[i] + t * (z[j] - z[i]);
            assert!((zi - (400.0 + a / 2.0)).abs() < 1e-9 * 430.0);
        }
    }
}
