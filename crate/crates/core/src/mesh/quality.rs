use super::{MeshError, TriMesh};

/// Shape statistics over the non-degenerate triangles of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuality {
    /// Smallest interior angle anywhere in the mesh, degrees.
    pub min_angle: f64,
    /// Mean over triangles of each triangle's smallest angle, degrees.
    pub mean_min_angle: f64,
    /// Largest `longest edge / (2 * inradius)`; sqrt(3) for an equilateral triangle.
    pub worst_aspect_ratio: f64,
    /// Indices of triangles skipped as degenerate.
    pub degenerate: Vec<usize>,
}

/// Plan-view quality.
pub fn mesh_quality(m: &TriMesh) -> Result<MeshQuality, MeshError> {
    quality_of(m, |i| {
        let p = m.vertices[i];
        [p.x, p.y, 0.0]
    })
}

/// Quality of the lifted 3D surface.
pub fn surface_quality(m: &TriMesh) -> Result<MeshQuality, MeshError> {
    if m.elevations.is_none() {
        return Err(MeshError::NoElevations);
    }
    quality_of(m, |i| m.position3(i))
}

fn quality_of(m: &TriMesh, pos: impl Fn(usize) -> [f64; 3]) -> Result<MeshQuality, MeshError> {
    let mut min_angle = f64::INFINITY;
    let mut sum_min = 0.0;
    let mut count = 0usize;
    let mut worst = 0.0f64;
    let mut degenerate = Vec::new();
    for (t, tri) in m.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(&pos);
        match triangle_shape(a, b, c) {
            Some((angle, aspect)) => {
                min_angle = min_angle.min(angle);
                sum_min += angle;
                worst = worst.max(aspect);
                count += 1;
            }
            None => degenerate.push(t),
        }
    }
    if count == 0 {
        return Err(MeshError::Invalid("no non-degenerate triangles".into()));
    }
    Ok(MeshQuality {
        min_angle,
        mean_min_angle: sum_min / count as f64,
        worst_aspect_ratio: worst,
        degenerate,
    })
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

// (smallest angle in degrees, aspect ratio), or None if degenerate
fn triangle_shape(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Option<(f64, f64)> {
    let corners = [(a, b, c), (b, c, a), (c, a, b)];
    let mut smallest = f64::INFINITY;
    for (p, q, r) in corners {
        let u = sub(q, p);
        let v = sub(r, p);
        let ang = norm(cross(u, v)).atan2(dot(u, v)).to_degrees();
        smallest = smallest.min(ang);
    }
    let la = norm(sub(b, c));
    let lb = norm(sub(c, a));
    let lc = norm(sub(a, b));
    let longest = la.max(lb).max(lc);
    let area = 0.5 * norm(cross(sub(b, a), sub(c, a)));
    if !(area > 1e-12 * longest * longest) {
        return None;
    }
    let inradius = area / (0.5 * (la + lb + lc));
    Some((smallest, longest / (2.0 * inradius)))
}
