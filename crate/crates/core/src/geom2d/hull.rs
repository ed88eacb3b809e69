use super::{cross, GeomError, Point2};

/// Convex hull by Andrew's monotone chain.
///
/// Returns the hull counter-clockwise, starting at the lowest-x (then
/// lowest-y) point, with duplicate and collinear boundary points removed.
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>, GeomError> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeomError::DegenerateHull(points.len()));
    }

    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeomError::DegenerateHull(points.len()));
    }
    Ok(lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    /// O(n^3) oracle: `i` and `j` are hull vertices when every other point
    /// lies left of `i -> j` or on the closed segment `[i, j]`.
    fn brute_force_vertices(points: &[Point2]) -> BTreeSet<(i64, i64)> {
        let mut pts: Vec<Point2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        let mut out = BTreeSet::new();
        for (i, &a) in pts.iter().enumerate() {
            for (j, &b) in pts.iter().enumerate() {
                if i == j {
                    continue;
                }
                let edge = pts.iter().all(|&c| {
                    let cr = cross(a, b, c);
                    if cr > 0.0 {
                        true
                    } else if cr < 0.0 {
                        false
                    } else {
                        (c.x - a.x) * (c.x - b.x) + (c.y - a.y) * (c.y - b.y) <= 0.0
                    }
                });
                if edge {
                    out.insert((a.x as i64, a.y as i64));
                    out.insert((b.x as i64, b.y as i64));
                }
            }
        }
        out
    }

    #[test]
    fn square_with_interior_point() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]
            .map(|(x, y)| Point2::new(x, y));
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
        assert!(!h.contains(&Point2::new(0.5, 0.5)));
        assert!(super::super::signed_area(&h) > 0.0);
    }

    #[test]
    fn collinear_points_rejected() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)].map(|(x, y)| Point2::new(x, y));
        assert_eq!(convex_hull(&pts), Err(GeomError::DegenerateHull(3)));
    }

    #[test]
    fn collinear_boundary_points_removed() {
        let pts = [
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
            (0.0, 1.0),
        ]
        .map(|(x, y)| Point2::new(x, y));
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn matches_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(3..1000);
            let pts: Vec<Point2> = (0..n)
                .map(|_| {
                    Point2::new(
                        rng.random_range(0..200) as f64,
                        rng.random_range(0..200) as f64,
                    )
                })
                .collect();
            let Ok(h) = convex_hull(&pts) else { continue };
            let got: BTreeSet<(i64, i64)> = h.iter().map(|p| (p.x as i64, p.y as i64)).collect();
            assert_eq!(got.len(), h.len());
            assert_eq!(got, brute_force_vertices(&pts));
        }
    }
}
