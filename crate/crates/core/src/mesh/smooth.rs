use super::{orient2d, TriMesh};

/// Jacobi-style Laplacian smoothing.
///
/// Each sweep moves every interior vertex to the centroid of its
/// edge-connected neighbours, all moves computed from the previous sweep's
/// positions. Moves that would flip or flatten an incident triangle are
/// undone for that sweep. Boundary vertices and connectivity never change.
pub fn laplacian_smooth(m: &TriMesh, iterations: usize) -> TriMesh {
    let mut out = m.clone();
    if iterations == 0 {
        return out;
    }
    let adj = m.vertex_neighbors();
    let mut incident = vec![Vec::new(); m.vertices.len()];
    for (t, tri) in m.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }

    for _ in 0..iterations {
        let old = out.vertices.clone();
        let mut moved = vec![false; old.len()];
        for (v, nbrs) in adj.iter().enumerate() {
            if m.boundary[v] || nbrs.is_empty() {
                continue;
            }
            let n = nbrs.len() as f64;
            let (sx, sy) = nbrs
                .iter()
                .fold((0.0, 0.0), |(sx, sy), &w| (sx + old[w].x, sy + old[w].y));
            let target = super::Point2::new(sx / n, sy / n);
            if target != old[v] {
                out.vertices[v] = target;
                moved[v] = true;
            }
        }

        // Undo moves around inverted triangles until none remain. Each pass
        // reverts at least one vertex, so this terminates.
        let mut suspects: Vec<usize> = (0..m.triangles.len())
            .filter(|&t| m.triangles[t].iter().any(|&v| moved[v]))
            .collect();
        loop {
            let mut reverted = Vec::new();
            for &t in &suspects {
                let [a, b, c] = m.triangles[t];
                if orient2d(out.vertices[a], out.vertices[b], out.vertices[c]) > 0.0 {
                    continue;
                }
                for v in [a, b, c] {
                    if moved[v] {
                        moved[v] = false;
                        out.vertices[v] = old[v];
                        reverted.push(v);
                    }
                }
            }
            if reverted.is_empty() {
                break;
            }
            let mut next: Vec<usize> = reverted
                .iter()
                .flat_map(|&v| incident[v].iter().copied())
                .collect();
            next.sort_unstable();
            next.dedup();
            suspects = next;
        }
    }
    out
}
