use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MeshError, Point2, Quad};

/// Placement of interior seed vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStrategy {
    Grid,
    /// Grid nodes displaced by up to 0.3 x spacing, drawn from a seeded RNG.
    Jittered { seed: u64 },
}

/// Seed vertices covering `region`: the four corners, evenly spaced points
/// on every edge, and a lattice of interior points. The lattice has
/// `ceil(side / spacing)` cells along each side, so the actual cell size is
/// never larger than `spacing`.
///
/// Output is row-major, starting at `corners[0]` and running along the
/// first edge.
pub fn seed_region(
    region: &Quad,
    spacing: f64,
    strategy: SeedStrategy,
) -> Result<Vec<Point2>, MeshError> {
    let (len_u, len_v) = region.side_lengths();
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(MeshError::Config(format!("spacing must be positive, got {spacing}")));
    }
    if spacing >= len_u || spacing >= len_v {
        return Err(MeshError::Config(format!(
            "spacing {spacing} m is not smaller than the region ({len_u:.3} x {len_v:.3} m)"
        )));
    }
    let nu = cells(len_u, spacing);
    let nv = cells(len_v, spacing);
    let jitter = 0.3 * spacing.min(len_u / nu as f64).min(len_v / nv as f64);

    let mut rng = match strategy {
        SeedStrategy::Jittered { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        SeedStrategy::Grid => None,
    };
    let mut out = Vec::with_capacity((nu + 1) * (nv + 1));
    for j in 0..=nv {
        let v = j as f64 / nv as f64;
        for i in 0..=nu {
            let u = i as f64 / nu as f64;
            let interior = i > 0 && i < nu && j > 0 && j < nv;
            let mut p = if interior {
                region.at(u, v)
            } else {
                edge_point(region, i, j, nu, nv)
            };
            if let (true, Some(rng)) = (interior, rng.as_mut()) {
                let r = jitter * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                p.x += r * theta.cos();
                p.y += r * theta.sin();
            }
            out.push(p);
        }
    }
    Ok(out)
}

/// Boundary node on a straight side as `a + t (b - a)`, so nodes on an
/// axis-aligned side share its coordinate exactly and corners are exact.
fn edge_point(region: &Quad, i: usize, j: usize, nu: usize, nv: usize) -> Point2 {
    let [c0, c1, c2, c3] = region.corners;
    let lerp = |a: Point2, b: Point2, k: usize, n: usize| {
        if k == n {
            return b;
        }
        let t = k as f64 / n as f64;
        Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };
    if j == 0 {
        lerp(c0, c1, i, nu)
    } else if j == nv {
        lerp(c3, c2, i, nu)
    } else if i == 0 {
        lerp(c0, c3, j, nv)
    } else {
        lerp(c1, c2, j, nv)
    }
}

fn cells(len: f64, spacing: f64) -> usize {
    ((len / spacing) - 1e-9).ceil().max(1.0) as usize
}
