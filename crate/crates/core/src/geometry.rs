//! Planar geometry used by the scene builder: polylines, lane footprints and
//! convex polygon clipping. All coordinates are metres in a common frame.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub f64, pub f64);

impl Point {
    pub fn x(self) -> f64 {
        self.0
    }

    pub fn y(self) -> f64 {
        self.1
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.0 - other.0).hypot(self.1 - other.1)
    }

    fn sub(self, o: Point) -> Point {
        Point(self.0 - o.0, self.1 - o.1)
    }

    fn add(self, o: Point) -> Point {
        Point(self.0 + o.0, self.1 + o.1)
    }

    fn scale(self, f: f64) -> Point {
        Point(self.0 * f, self.1 * f)
    }

    fn lerp(self, o: Point, t: f64) -> Point {
        Point(self.0 + (o.0 - self.0) * t, self.1 + (o.1 - self.1) * t)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Point at arclength `s` along the polyline (clamped to its ends).
pub fn point_at(points: &[Point], s: f64) -> Point {
    let mut remaining = s.max(0.0);
    for w in points.windows(2) {
        let len = w[0].distance(w[1]);
        if remaining <= len && len > 0.0 {
            return w[0].lerp(w[1], remaining / len);
        }
        remaining -= len;
    }
    *points.last().expect("non-empty polyline")
}

/// Heading (radians) of the polyline at arclength `s`.
pub fn heading_at(points: &[Point], s: f64) -> f64 {
    let mut remaining = s.max(0.0);
    let mut last = 0.0;
    for w in points.windows(2) {
        let len = w[0].distance(w[1]);
        if len > 0.0 {
            last = (w[1].1 - w[0].1).atan2(w[1].0 - w[0].0);
            if remaining <= len {
                return last;
            }
        }
        remaining -= len;
    }
    last
}

/// Arclength midpoint, the reference "center" of a linear element.
pub fn polyline_center(points: &[Point]) -> Point {
    point_at(points, polyline_length(points) / 2.0)
}

/// The part of a polyline between arclengths `from` and `to`.
pub fn sub_polyline(points: &[Point], from: f64, to: f64) -> Vec<Point> {
    let mut out = vec![point_at(points, from)];
    let mut acc = 0.0;
    for w in points.windows(2) {
        acc += w[0].distance(w[1]);
        if acc > from && acc < to {
            out.push(w[1]);
        }
    }
    out.push(point_at(points, to));
    out.dedup_by(|a, b| a.distance(*b) < 1e-12);
    if out.len() < 2 {
        out.push(out[0]);
    }
    out
}

/// Splits a polyline into `parts` pieces of equal arclength. Piece endpoints
/// coincide, and the first/last points equal the original ends exactly.
pub fn split_equal(points: &[Point], parts: usize) -> Vec<Vec<Point>> {
    let total = polyline_length(points);
    let step = total / parts as f64;
    (0..parts)
        .map(|j| {
            let from = step * j as f64;
            let to = if j + 1 == parts { total } else { step * (j + 1) as f64 };
            let mut piece = sub_polyline(points, from, to);
            if j == 0 {
                piece[0] = points[0];
            }
            if j + 1 == parts {
                *piece.last_mut().expect("two points") = *points.last().expect("two points");
            }
            piece
        })
        .collect()
}

pub type Polygon = Vec<Point>;

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        acc += a.0 * b.1 - b.0 * a.1;
    }
    acc / 2.0
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Area centroid, falling back to the vertex mean for degenerate rings.
pub fn centroid(poly: &[Point]) -> Point {
    let a = signed_area(poly);
    if a.abs() < 1e-12 {
        let n = poly.len().max(1) as f64;
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
        return Point(sx / n, sy / n);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let f = p.0 * q.1 - q.0 * p.1;
        cx += (p.0 + q.0) * f;
        cy += (p.1 + q.1) * f;
    }
    Point(cx / (6.0 * a), cy / (6.0 * a))
}

pub fn is_convex(poly: &[Point]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let n = poly.len();
    let mut sign = 0.0;
    for i in 0..n {
        let c = cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        if c.abs() < 1e-12 {
            continue;
        }
        if sign == 0.0 {
            sign = c.signum();
        } else if c.signum() != sign {
            return false;
        }
    }
    sign != 0.0
}

/// Returns the ring in counter-clockwise order.
pub fn ccw(mut poly: Polygon) -> Polygon {
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

/// Sutherland–Hodgman clipping of an arbitrary simple `subject` against a
/// convex, counter-clockwise `clip` ring.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Polygon {
    let mut output: Polygon = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut output);
        let inside = |p: Point| cross(a, b, p) >= 0.0;
        let intersect = |p: Point, q: Point| {
            let (cp, cq) = (cross(a, b, p), cross(a, b, q));
            p.lerp(q, cp / (cp - cq))
        };
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(intersect(prev, cur)),
                (false, true) => {
                    output.push(intersect(prev, cur));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    output
}

/// Oriented rectangle centred at `center`, long axis along `heading`.
pub fn oriented_box(center: Point, heading: f64, length: f64, width: f64) -> Polygon {
    let (s, c) = (libm::sin(heading), libm::cos(heading));
    let along = Point(c, s).scale(length / 2.0);
    let across = Point(-s, c).scale(width / 2.0);
    vec![
        center.sub(along).sub(across),
        center.add(along).sub(across),
        center.add(along).add(across),
        center.sub(along).add(across),
    ]
}

/// Largest miter stretch before falling back to a plain perpendicular.
const MITER_LIMIT: f64 = 4.0;

/// Area covered by a centerline buffered by half its width, as a sequence of
/// non-overlapping quads (one per polyline piece, mitered at interior vertices,
/// flat at both ends).
#[derive(Debug, Clone)]
pub struct Footprint {
    quads: Vec<Polygon>,
}

impl Footprint {
    pub fn new(centerline: &[Point], width: f64) -> Self {
        let hw = width / 2.0;
        let pts: Vec<Point> = {
            let mut p = centerline.to_vec();
            p.dedup_by(|a, b| a.distance(*b) < 1e-12);
            p
        };
        if pts.len() < 2 {
            return Footprint { quads: Vec::new() };
        }
        let normal = |a: Point, b: Point| {
            let d = b.sub(a);
            let len = d.0.hypot(d.1);
            Point(-d.1 / len, d.0 / len)
        };
        let mut offsets = Vec::with_capacity(pts.len());
        for i in 0..pts.len() {
            let offset = if i == 0 {
                normal(pts[0], pts[1]).scale(hw)
            } else if i + 1 == pts.len() {
                normal(pts[i - 1], pts[i]).scale(hw)
            } else {
                let n1 = normal(pts[i - 1], pts[i]);
                let n2 = normal(pts[i], pts[i + 1]);
                let m = n1.add(n2);
                let mlen = m.0.hypot(m.1);
                let cos_half = if mlen > 1e-12 { (m.0 * n1.0 + m.1 * n1.1) / mlen } else { 0.0 };
                if cos_half < 1.0 / MITER_LIMIT {
                    n2.scale(hw)
                } else {
                    m.scale(hw / (mlen * cos_half))
                }
            };
            offsets.push(offset);
        }
        let quads = (0..pts.len() - 1)
            .map(|i| {
                vec![
                    pts[i].sub(offsets[i]),
                    pts[i + 1].sub(offsets[i + 1]),
                    pts[i + 1].add(offsets[i + 1]),
                    pts[i].add(offsets[i]),
                ]
            })
            .collect();
        Footprint { quads }
    }

    pub fn quads(&self) -> &[Polygon] {
        &self.quads
    }

    pub fn area(&self) -> f64 {
        self.quads.iter().map(|q| area(q)).sum()
    }

    /// Area shared with a convex counter-clockwise polygon.
    pub fn overlap(&self, convex: &[Point]) -> f64 {
        self.quads
            .iter()
            .map(|q| area(&clip_convex(q, convex)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contains(poly: &[Point], p: Point) -> bool {
        // even-odd ray cast
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + n - 1) % n]);
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Grid-sampled intersection area: independent of the clipping routine.
    fn sampled_overlap(a: &[Polygon], b: &[Point], lo: Point, hi: Point, steps: usize) -> f64 {
        let (dx, dy) = ((hi.0 - lo.0) / steps as f64, (hi.1 - lo.1) / steps as f64);
        let mut hits = 0usize;
        for i in 0..steps {
            for j in 0..steps {
                let p = Point(lo.0 + (i as f64 + 0.5) * dx, lo.1 + (j as f64 + 0.5) * dy);
                if contains(b, p) && a.iter().any(|q| contains(q, p)) {
                    hits += 1;
                }
            }
        }
        hits as f64 * dx * dy
    }

    #[test]
    fn length_and_midpoint() {
        let line = [Point(0.0, 0.0), Point(3.0, 4.0), Point(3.0, 10.0)];
        assert!((polyline_length(&line) - 11.0).abs() < 1e-12);
        let mid = polyline_center(&line);
        assert!((mid.0 - 3.0).abs() < 1e-12 && (mid.1 - 4.5).abs() < 1e-12);
    }

    #[test]
    fn split_preserves_length_and_ends() {
        let line = [Point(0.0, 0.0), Point(7.0, 1.0), Point(12.0, -3.0), Point(25.0, 0.0)];
        let total = polyline_length(&line);
        let pieces = split_equal(&line, 4);
        let sum: f64 = pieces.iter().map(|p| polyline_length(p)).sum();
        assert!((sum - total).abs() < 1e-9);
        assert_eq!(pieces[0][0], line[0]);
        assert_eq!(*pieces[3].last().unwrap(), line[3]);
        for w in pieces.windows(2) {
            assert!(w[0].last().unwrap().distance(w[1][0]) < 1e-12);
        }
        for p in &pieces {
            assert!((polyline_length(p) - total / 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clip_box_inside_box() {
        let outer = oriented_box(Point(0.0, 0.0), 0.0, 10.0, 4.0);
        let inner = oriented_box(Point(1.0, 0.5), 0.3, 2.0, 1.0);
        let clipped = clip_convex(&inner, &outer);
        assert!((area(&clipped) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_clip_is_empty() {
        let a = oriented_box(Point(0.0, 0.0), 0.0, 2.0, 2.0);
        let b = oriented_box(Point(10.0, 0.0), 0.0, 2.0, 2.0);
        assert_eq!(area(&clip_convex(&a, &b)), 0.0);
    }

    #[test]
    fn footprint_overlap_matches_sampling() {
        let line = [Point(0.0, 0.0), Point(10.0, 0.0), Point(18.0, 5.0)];
        let fp = Footprint::new(&line, 3.5);
        let actor = oriented_box(Point(9.5, 0.8), 0.4, 4.5, 1.9);
        let exact = fp.overlap(&actor);
        let sampled = sampled_overlap(fp.quads(), &actor, Point(5.0, -4.0), Point(14.0, 5.0), 900);
        assert!((exact - sampled).abs() < 0.05, "{exact} vs {sampled}");
    }

    #[test]
    fn footprint_area_of_straight_lane() {
        let fp = Footprint::new(&[Point(0.0, 0.0), Point(10.0, 0.0)], 3.5);
        assert!((fp.area() - 35.0).abs() < 1e-9);
    }

    #[test]
    fn convexity() {
        assert!(is_convex(&oriented_box(Point(0.0, 0.0), 1.0, 3.0, 2.0)));
        let dart = [Point(0.0, 0.0), Point(4.0, 0.0), Point(1.0, 1.0), Point(0.0, 4.0)];
        assert!(!is_convex(&dart));
    }

    #[test]
    fn centroid_of_rectangle() {
        let c = centroid(&[Point(0.0, 0.0), Point(4.0, 0.0), Point(4.0, 2.0), Point(0.0, 2.0)]);
        assert!((c.0 - 2.0).abs() < 1e-12 && (c.1 - 1.0).abs() < 1e-12);
    }
}
