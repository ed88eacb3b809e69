use super::{convex_hull, GeomError, OrientedBox, Point2};

/// Minimum-area enclosing rectangle by rotating calipers.
///
/// The optimal rectangle has one side collinear with a hull edge, so every
/// hull edge direction is tried and the smallest bounding rectangle in that
/// frame is kept (first minimum wins on ties).
pub fn min_area_rect(points: &[Point2]) -> Result<OrientedBox, GeomError> {
    let hull = convex_hull(points)?;
    let origin = hull[0];
    let local: Vec<Point2> = hull
        .iter()
        .map(|p| Point2::new(p.x - origin.x, p.y - origin.y))
        .collect();

    let n = local.len();
    let mut best: Option<(f64, OrientedBox)> = None;
    for i in 0..n {
        let a = local[i];
        let b = local[(i + 1) % n];
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = dx.hypot(dy);
        let (ux, uy) = (dx / len, dy / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &local {
            let u = p.x * ux + p.y * uy;
            let v = -p.x * uy + p.y * ux;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let side_u = hi_u - lo_u;
        let side_v = hi_v - lo_v;
        let area = side_u * side_v;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let mu = 0.5 * (lo_u + hi_u);
            let mv = 0.5 * (lo_v + hi_v);
            let cx = origin.x + mu * ux - mv * uy;
            let cy = origin.y + mu * uy + mv * ux;
            best = Some((area, OrientedBox::new(cx, cy, side_u, side_v, uy.atan2(ux))));
        }
    }
    best.map(|(_, b)| b)
        .ok_or(GeomError::DegenerateHull(points.len()))
}
