use nalgebra::Point2;

use super::homography::{frame_corners, Homography};

/// Fraction of the `width x height` frame covered by the quadrilateral the
/// frame corners are warped to by `h`, clipped to the frame.
///
/// Returns 0 when any warped corner has a non-positive homogeneous
/// coordinate.
pub fn visual_overlap(h: &Homography, width: f64, height: f64) -> f64 {
    assert!(width > 0.0 && height > 0.0, "frame must have positive area");
    let mut quad = Vec::with_capacity(4);
    for c in frame_corners(width, height) {
        let v = h.apply_homogeneous(&c);
        if !(v.z > 0.0) {
            return 0.0;
        }
        quad.push(Point2::new(v.x / v.z, v.y / v.z));
    }
    let clipped = clip_to_rect(&quad, width, height);
    (polygon_area(&clipped) / (width * height)).clamp(0.0, 1.0)
}

/// `min(r(H), r(H^-1))`, independent of which frame is warped onto which.
pub fn symmetric_overlap(h: &Homography, width: f64, height: f64) -> f64 {
    visual_overlap(h, width, height).min(visual_overlap(&h.inverse(), width, height))
}

/// Absolute shoelace area.
pub fn polygon_area(poly: &[Point2<f64>]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        twice += a.x * b.y - b.x * a.y;
    }
    twice.abs() / 2.0
}

/// Sutherland-Hodgman clipping against `[0, width] x [0, height]`.
pub fn clip_to_rect(poly: &[Point2<f64>], width: f64, height: f64) -> Vec<Point2<f64>> {
    // Each edge is (axis, bound, keep_below).
    let edges = [(0, 0.0, false), (0, width, true), (1, 0.0, false), (1, height, true)];
    let mut out = poly.to_vec();
    for (axis, bound, below) in edges {
        if out.is_empty() {
            break;
        }
        let inside = |p: &Point2<f64>| if below { p[axis] <= bound } else { p[axis] >= bound };
        let input = std::mem::take(&mut out);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = prev + (cur - prev) * t;
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
            prev = cur;
        }
    }
    out
}
