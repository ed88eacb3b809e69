use super::{canonical_order, convex_hull, cross, min_area_rect, GeomError, Point2, QuadCorners};

/// Hull sizes above this are first simplified greedily.
const EXACT_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadFit {
    pub corners: QuadCorners,
    /// Set when the hull had fewer than four vertices and the
    /// minimum-area rectangle corners were used instead.
    pub fallback: bool,
}

/// Largest-area quadrilateral with vertices on the convex hull of `points`.
///
/// For a projected rectangle this recovers the perspective quadrilateral,
/// whose internal angles carry the out-of-plane tilt.
pub fn quad_fit(points: &[Point2]) -> Result<QuadFit, GeomError> {
    let mut hull = convex_hull(points)?;
    if hull.len() < 4 {
        let b = min_area_rect(points)?;
        return Ok(QuadFit {
            corners: b.corners(),
            fallback: true,
        });
    }
    while hull.len() > EXACT_LIMIT {
        drop_cheapest_vertex(&mut hull);
    }
    let best = max_area_quad(&hull);
    Ok(QuadFit {
        corners: canonical_order(best, None)?,
        fallback: false,
    })
}

/// Removes the vertex whose removal loses the least area.
fn drop_cheapest_vertex(hull: &mut Vec<Point2>) {
    let n = hull.len();
    let idx = (0..n)
        .min_by(|&a, &b| {
            let la = cross(hull[(a + n - 1) % n], hull[a], hull[(a + 1) % n]);
            let lb = cross(hull[(b + n - 1) % n], hull[b], hull[(b + 1) % n]);
            la.total_cmp(&lb)
        })
        .unwrap_or(0);
    hull.remove(idx);
}

/// Exact search: for each diagonal `(i, k)` the best apex on each side is
/// chosen independently, which covers every 4-subset in cyclic order.
fn max_area_quad(hull: &[Point2]) -> [Point2; 4] {
    let n = hull.len();
    let mut best = (f64::MIN, [0usize, 1, 2, 3]);
    for i in 0..n {
        for k in (i + 2)..n {
            if i == 0 && k == n - 1 {
                continue;
            }
            let (mut left, mut j_best) = (f64::MIN, i + 1);
            for j in (i + 1)..k {
                let a = cross(hull[i], hull[j], hull[k]);
                if a > left {
                    left = a;
                    j_best = j;
                }
            }
            let (mut right, mut l_best) = (f64::MIN, (k + 1) % n);
            let mut l = k + 1;
            while l % n != i {
                let a = cross(hull[k], hull[l % n], hull[i]);
                if a > right {
                    right = a;
                    l_best = l % n;
                }
                l += 1;
            }
            let area = left + right;
            if area > best.0 {
                best = (area, [i, j_best, k, l_best]);
            }
        }
    }
    best.1.map(|i| hull[i])
}
