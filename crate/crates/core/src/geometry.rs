//! Planar polyline utilities: intersections, winding numbers, ray probes and
//! Hausdorff distance. Points are Cartesian `[x, y]`.

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Intersection of segments `p0p1` and `q0q1` as `(s, t, point)` with
/// `point = p0 + s(p1 − p0) = q0 + t(q1 − q0)`. Parallel segments give `None`.
pub fn segment_intersection(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<(f64, f64, Point)> {
    let d = sub(p1, p0);
    let e = sub(q1, q0);
    let den = cross(d, e);
    if den == 0.0 {
        return None;
    }
    let w = sub(q0, p0);
    let s = cross(w, e) / den;
    let t = cross(w, d) / den;
    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
        Some((s, t, [p0[0] + s * d[0], p0[1] + s * d[1]]))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Segment index and parameter on the first polyline.
    pub i: usize,
    pub s: f64,
    /// Segment index and parameter on the second polyline.
    pub j: usize,
    pub t: f64,
    pub point: Point,
}

fn bbox(a: Point, b: Point) -> [f64; 4] {
    [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
}

/// All proper crossings between two open polylines, ordered along the first.
pub fn polyline_intersections(a: &[Point], b: &[Point]) -> Vec<Crossing> {
    let mut out = Vec::new();
    let boxes: Vec<[f64; 4]> = b.windows(2).map(|w| bbox(w[0], w[1])).collect();
    for (i, wa) in a.windows(2).enumerate() {
        let ba = bbox(wa[0], wa[1]);
        for (j, wb) in b.windows(2).enumerate() {
            let bb = boxes[j];
            if ba[1] < bb[0] || bb[1] < ba[0] || ba[3] < bb[2] || bb[3] < ba[2] {
                continue;
            }
            if let Some((s, t, point)) = segment_intersection(wa[0], wa[1], wb[0], wb[1]) {
                out.push(Crossing { i, s, j, t, point });
            }
        }
    }
    out.sort_by(|x, y| (x.i as f64 + x.s).total_cmp(&(y.i as f64 + y.s)));
    out
}

/// Winding number of a closed polyline around `p`. The closing edge from the
/// last point back to the first is implied.
pub fn winding_number(poly: &[Point], p: Point) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let side = cross(sub(b, a), sub(p, a));
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                w += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Shoelace area; positive for counter-clockwise orientation.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|k| cross(poly[k], poly[(k + 1) % n])).sum::<f64>()
}

/// Radii at which the ray from the origin at angle `theta` meets the closed
/// polyline, ascending. Crossings at a shared vertex are reported once.
pub fn ray_crossings(poly: &[Point], theta: f64) -> Vec<f64> {
    let dir = [theta.cos(), theta.sin()];
    let n = poly.len();
    let mut radii: Vec<f64> = Vec::new();
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let (sa, sb) = (cross(dir, a), cross(dir, b));
        // half-open rule so that a vertex on the ray is counted by one edge
        if (sa > 0.0) == (sb > 0.0) {
            continue;
        }
        let s = sa / (sa - sb);
        let q = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let r = dot(q, dir);
        if r > 0.0 {
            radii.push(r);
        }
    }
    radii.sort_by(f64::total_cmp);
    radii
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(d, d);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let s = (dot(sub(p, a), d) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * d[0], a[1] + s * d[1]])
}

/// Distance from `p` to an open polyline.
pub fn point_polyline_distance(p: Point, poly: &[Point]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => dist(p, poly[0]),
        _ => poly
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| {
        x.iter().map(|&p| point_polyline_distance(p, y)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

pub fn polyline_length(poly: &[Point]) -> f64 {
    poly.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// `n ≥ 2` points equally spaced in arclength along an open polyline.
pub fn resample_polyline(poly: &[Point], n: usize) -> Vec<Point> {
    assert!(n >= 2 && poly.len() >= 2);
    let mut cum = vec![0.0];
    for w in poly.windows(2) {
        cum.push(cum.last().unwrap() + dist(w[0], w[1]));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut j = 1;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while j < poly.len() - 1 && cum[j] < target {
            j += 1;
        }
        let seg = cum[j] - cum[j - 1];
        let w = if seg > 0.0 { ((target - cum[j - 1]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (poly[j - 1], poly[j]);
        out.push([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]);
    }
    out[0] = poly[0];
    out[n - 1] = *poly.last().unwrap();
    out
}

/// Unsigned angle in `[0, π]` between two direction vectors.
pub fn angle_between(u: Point, v: Point) -> f64 {
    cross(u, v).atan2(dot(u, v)).abs()
}
