//! Oriented closed boundary chains of segments and circular arcs.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::num::roots;
use crate::{Point2, Vec2};

/// Points closer than this to the boundary are reported as near-boundary.
pub const NEAR_BOUNDARY: f64 = 1e-12;
/// Tolerance on the coincidence of consecutive edge endpoints.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("edge {index} is degenerate: {reason}")]
    Degenerate { index: usize, reason: String },
    #[error("edges {index} and {next} do not join: gap {gap:e}")]
    Gap { index: usize, next: usize, gap: f64 },
    #[error("domain needs at least one edge")]
    Empty,
    #[error("point ({x}, {y}) is not an endpoint of the edge")]
    NotEndpoint { x: f64, y: f64 },
    #[error("boundary traversal is clockwise (signed area {area}); the domain must lie on the left")]
    Clockwise { area: f64 },
}

/// Boundary edge; traversal keeps the domain on the left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Edge {
    Segment { a: Point2, b: Point2 },
    /// Angular parameter runs from `t_start` to `t_end`; `t_end < t_start` is a clockwise arc.
    Arc { center: Point2, radius: f64, t_start: f64, t_end: f64 },
}

impl Edge {
    pub fn segment(a: Point2, b: Point2) -> Edge {
        Edge::Segment { a, b }
    }

    pub fn arc(center: Point2, radius: f64, t_start: f64, t_end: f64) -> Edge {
        Edge::Arc { center, radius, t_start, t_end }
    }

    pub fn point(&self, s: f64) -> Point2 {
        match *self {
            Edge::Segment { a, b } => a + (b - a) * s,
            Edge::Arc { center, radius, t_start, t_end } => {
                center + Vec2::from_angle(t_start + s * (t_end - t_start)) * radius
            }
        }
    }

    pub fn start(&self) -> Point2 {
        self.point(0.0)
    }

    pub fn end(&self) -> Point2 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Edge::Segment { a, b } => a.dist(b),
            Edge::Arc { radius, t_start, t_end, .. } => radius * (t_end - t_start).abs(),
        }
    }

    /// Unit tangent in the traversal direction.
    pub fn tangent(&self, s: f64) -> Vec2 {
        match *self {
            Edge::Segment { a, b } => (b - a).normalized(),
            Edge::Arc { t_start, t_end, .. } => {
                let t = t_start + s * (t_end - t_start);
                Vec2::new(-t.sin(), t.cos()) * (t_end - t_start).signum()
            }
        }
    }

    /// Unit outward normal (tangent rotated clockwise).
    pub fn normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        Vec2::new(t.y, -t.x)
    }

    /// Derivative of the outward normal with respect to arclength.
    pub fn normal_rate(&self, s: f64) -> Vec2 {
        match *self {
            Edge::Segment { .. } => Vec2::zero(),
            Edge::Arc { radius, .. } => self.tangent(s) * (1.0 / radius),
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Edge::Arc { .. })
    }

    /// Sub-edge over the parameter range `[s0, s1]`.
    pub fn sub(&self, s0: f64, s1: f64) -> Edge {
        match *self {
            Edge::Segment { .. } => Edge::Segment { a: self.point(s0), b: self.point(s1) },
            Edge::Arc { center, radius, t_start, t_end } => Edge::Arc {
                center,
                radius,
                t_start: t_start + s0 * (t_end - t_start),
                t_end: t_start + s1 * (t_end - t_start),
            },
        }
    }

    /// Parameter of the arc point at polar angle `theta`, if that angle lies on the arc.
    pub fn arc_param_of_angle(&self, theta: f64) -> Option<f64> {
        let Edge::Arc { t_start, t_end, .. } = *self else { return None };
        let sweep = t_end - t_start;
        let dir = sweep.signum();
        let mut d = (theta - t_start) * dir;
        d = d.rem_euclid(TAU);
        let span = sweep.abs();
        if span >= TAU - 1e-15 {
            return Some((d / span).min(1.0));
        }
        if d <= span {
            Some(d / span)
        } else if TAU - d < 1e-13 {
            Some(0.0)
        } else {
            None
        }
    }

    /// Closest point parameter and the distance to it.
    pub fn closest(&self, p: Point2) -> (f64, f64) {
        match *self {
            Edge::Segment { a, b } => {
                let d = b - a;
                let s = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
                (s, p.dist(self.point(s)))
            }
            Edge::Arc { center, radius, .. } => {
                let v = p - center;
                if v.norm() > 0.0 {
                    if let Some(s) = self.arc_param_of_angle(v.angle()) {
                        return (s, (v.norm() - radius).abs());
                    }
                }
                let (d0, d1) = (p.dist(self.start()), p.dist(self.end()));
                if d0 <= d1 {
                    (0.0, d0)
                } else {
                    (1.0, d1)
                }
            }
        }
    }

    /// Signed change of the polar angle of `q - p` as `q` runs along the edge.
    fn winding_angle(&self, p: Point2) -> f64 {
        match *self {
            Edge::Segment { a, b } => {
                let (u, v) = (a - p, b - p);
                u.cross(v).atan2(u.dot(v))
            }
            Edge::Arc { center, radius, t_start, t_end } => {
                let sweep = t_end - t_start;
                let inside_disk = p.dist(center) < radius;
                let pieces = ((sweep.abs() / (PI / 4.0)).ceil() as usize).max(1);
                let mut total = 0.0;
                let mut prev = self.point(0.0);
                for k in 1..=pieces {
                    let q = self.point(k as f64 / pieces as f64);
                    let (u, v) = (prev - p, q - p);
                    let mut d = u.cross(v).atan2(u.dot(v));
                    // Seen from inside the disk the angle is monotone in the sweep direction.
                    if inside_disk && d != 0.0 && d.signum() != sweep.signum() {
                        d += TAU * sweep.signum();
                    }
                    total += d;
                    prev = q;
                }
                total
            }
        }
    }
}

/// Euclidean distance from `p` to the edge.
pub fn distance_to_edge(p: Point2, e: &Edge) -> f64 {
    e.closest(p).1
}

/// Outward normal of `e` at parameter `s`.
pub fn outward_normal(e: &Edge, s: f64) -> Vec2 {
    e.normal(s)
}

/// Unit tangent at the endpoint `m` of `edge`, pointing into the edge.
pub fn tangent_toward_gamma_minus(m: Point2, edge: &Edge) -> Result<Vec2, GeometryError> {
    if m.dist(edge.start()) <= CLOSURE_TOL {
        Ok(edge.tangent(0.0))
    } else if m.dist(edge.end()) <= CLOSURE_TOL {
        Ok(-edge.tangent(1.0))
    } else {
        Err(GeometryError::NotEndpoint { x: m.x, y: m.y })
    }
}

/// Junction between edge `index - 1` and edge `index`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexInfo {
    pub point: Point2,
    pub inner_angle: f64,
}

/// Result of the inside test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub inside: bool,
    pub near_boundary: bool,
}

impl Location {
    /// Interior or within the near-boundary band.
    pub fn in_closure(&self) -> bool {
        self.inside || self.near_boundary
    }
}

/// Nearest boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryHit {
    pub edge: usize,
    pub s: f64,
    pub point: Point2,
    pub distance: f64,
}

/// Simply connected domain bounded by a closed chain of edges.
#[derive(Clone, Debug)]
pub struct Domain {
    pub edges: Vec<Edge>,
    pub vertices: Vec<VertexInfo>,
}

impl Domain {
    pub fn new(edges: Vec<Edge>) -> Result<Domain, GeometryError> {
        if edges.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (i, e) in edges.iter().enumerate() {
            match *e {
                Edge::Segment { a, b } => {
                    if !(a.is_finite() && b.is_finite()) || a.dist(b) <= CLOSURE_TOL {
                        return Err(GeometryError::Degenerate { index: i, reason: "zero-length segment".into() });
                    }
                }
                Edge::Arc { radius, t_start, t_end, center } => {
                    if !(radius > 0.0) || !center.is_finite() {
                        return Err(GeometryError::Degenerate { index: i, reason: "arc radius must be positive".into() });
                    }
                    let sweep = (t_end - t_start).abs();
                    if !(sweep > 0.0) || sweep > TAU + 1e-12 {
                        return Err(GeometryError::Degenerate { index: i, reason: "arc sweep must lie in (0, 2π]".into() });
                    }
                }
            }
        }
        let n = edges.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let gap = edges[i].end().dist(edges[j].start());
            if gap > CLOSURE_TOL {
                return Err(GeometryError::Gap { index: i, next: j, gap });
            }
        }
        let vertices = (0..n)
            .map(|i| {
                let prev = &edges[(i + n - 1) % n];
                let next = &edges[i];
                let (tin, tout) = (prev.tangent(1.0), next.tangent(0.0));
                let turn = tin.cross(tout).atan2(tin.dot(tout));
                let inner_angle = if turn.abs() < 1e-12 { PI } else { PI - turn };
                VertexInfo { point: next.start(), inner_angle }
            })
            .collect();
        let d = Domain { edges, vertices };
        let area = d.signed_area();
        if area <= 0.0 {
            return Err(GeometryError::Clockwise { area });
        }
        Ok(d)
    }

    /// Signed area by the boundary integral ½∮(x dy − y dx).
    pub fn signed_area(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| match *e {
                Edge::Segment { a, b } => 0.5 * a.cross(b),
                Edge::Arc { center, radius, t_start, t_end } => {
                    let (c, r) = (center, radius);
                    let (s0, c0, s1, c1) = (t_start.sin(), t_start.cos(), t_end.sin(), t_end.cos());
                    // ½∫ (c + r e(t)) × r e'(t) dt
                    0.5 * (r * r * (t_end - t_start) + r * (c.x * (s1 - s0) + c.y * (c1 - c0)))
                }
            })
            .sum()
    }

    pub fn locate(&self, p: Point2) -> Location {
        if self.distance_to_boundary(p) <= NEAR_BOUNDARY {
            return Location { inside: false, near_boundary: true };
        }
        let w: f64 = self.edges.iter().map(|e| e.winding_angle(p)).sum();
        Location { inside: (w / TAU).round() != 0.0, near_boundary: false }
    }

    /// Strict interior test (winding number); near-boundary points are outside.
    pub fn inside(&self, p: Point2) -> bool {
        self.locate(p).inside
    }

    pub fn nearest_boundary(&self, p: Point2) -> BoundaryHit {
        let mut best = BoundaryHit { edge: 0, s: 0.0, point: self.edges[0].start(), distance: f64::INFINITY };
        for (i, e) in self.edges.iter().enumerate() {
            let (s, d) = e.closest(p);
            if d < best.distance {
                best = BoundaryHit { edge: i, s, point: e.point(s), distance: d };
            }
        }
        best
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.edges.iter().map(|e| distance_to_edge(p, e)).fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut add = |q: Point2| {
            lo = Point2::new(lo.x.min(q.x), lo.y.min(q.y));
            hi = Point2::new(hi.x.max(q.x), hi.y.max(q.y));
        };
        for e in &self.edges {
            add(e.start());
            add(e.end());
            if let Edge::Arc { center, radius, .. } = *e {
                for k in 0..4 {
                    let th = k as f64 * PI / 2.0;
                    if e.arc_param_of_angle(th).is_some() {
                        add(center + Vec2::from_angle(th) * radius);
                    }
                }
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(Edge::length).sum()
    }

    pub fn is_polygon(&self) -> bool {
        self.edges.iter().all(|e| !e.is_arc())
    }

    /// Convex iff no vertex turns right and arcs are traversed counterclockwise.
    pub fn is_convex(&self) -> bool {
        self.vertices.iter().all(|v| v.inner_angle <= PI + 1e-12)
            && self.edges.iter().all(|e| match *e {
                Edge::Arc { t_start, t_end, .. } => t_end > t_start,
                Edge::Segment { .. } => true,
            })
    }

    /// Deterministic interior sample points on a lattice over the bounding box.
    pub fn interior_lattice(&self, n: usize) -> Vec<Point2> {
        let (lo, hi) = self.bbox();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let p = Point2::new(
                    lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / n as f64,
                    lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / n as f64,
                );
                if self.inside(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// x-coordinates where the horizontal line at height `y` crosses the boundary, sorted.
    pub fn horizontal_crossings(&self, y: f64) -> Vec<f64> {
        let mut xs = Vec::new();
        for e in &self.edges {
            match *e {
                Edge::Segment { a, b } => {
                    if (a.y - y) * (b.y - y) < 0.0 {
                        xs.push(a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y));
                    } else if a.y == y && b.y != y {
                        xs.push(a.x);
                    } else if b.y == y && a.y != y {
                        xs.push(b.x);
                    }
                }
                Edge::Arc { center, radius, .. } => {
                    let dy = y - center.y;
                    if dy.abs() < radius {
                        let dx = (radius * radius - dy * dy).sqrt();
                        for x in [center.x - dx, center.x + dx] {
                            let th = dy.atan2(x - center.x);
                            if e.arc_param_of_angle(th).is_some() {
                                xs.push(x);
                            }
                        }
                    }
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        xs
    }

    /// Maximal x-intervals of the interior along the horizontal line at height `y`.
    pub fn chords(&self, y: f64) -> Vec<(f64, f64)> {
        let xs = self.horizontal_crossings(y);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in xs.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            if w[1] - w[0] > 1e-14 && self.inside(Point2::new(m, y)) {
                match out.last_mut() {
                    Some((_, b)) if (*b - w[0]).abs() < 1e-13 => *b = w[1],
                    _ => out.push((w[0], w[1])),
                }
            }
        }
        out
    }
}

/// Exact distance between two segments.
pub fn segment_distance(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    let orient = |p: Point2, q: Point2, r: Point2| (q - p).cross(r - p);
    let (d1, d2) = (orient(a0, a1, b0), orient(a0, a1, b1));
    let (d3, d4) = (orient(b0, b1, a0), orient(b0, b1, a1));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    let sa = Edge::segment(a0, a1);
    let sb = Edge::segment(b0, b1);
    [
        distance_to_edge(b0, &sa),
        distance_to_edge(b1, &sa),
        distance_to_edge(a0, &sb),
        distance_to_edge(a1, &sb),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Exact distance between the segment `[a0, a1]` and an edge.
pub fn segment_edge_distance(a0: Point2, a1: Point2, e: &Edge) -> f64 {
    match *e {
        Edge::Segment { a, b } => segment_distance(a0, a1, a, b),
        Edge::Arc { center, radius, .. } => {
            let seg = Edge::segment(a0, a1);
            let mut best = distance_to_edge(a0, e)
                .min(distance_to_edge(a1, e))
                .min(distance_to_edge(e.start(), &seg))
                .min(distance_to_edge(e.end(), &seg));
            let d = a1 - a0;
            let len2 = d.norm_sq();
            if len2 == 0.0 {
                return best;
            }
            let on_arc = |q: Point2| {
                let v = q - center;
                v.norm() > 0.0 && e.arc_param_of_angle(v.angle()).is_some()
            };
            // foot of the perpendicular from the centre
            let sf = (center - a0).dot(d) / len2;
            if (0.0..=1.0).contains(&sf) {
                let q = a0 + d * sf;
                if on_arc(q) {
                    best = best.min((q.dist(center) - radius).abs());
                }
            }
            // crossings of the circle
            let f = a0 - center;
            let (qa, qb, qc) = (len2, 2.0 * f.dot(d), f.norm_sq() - radius * radius);
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let r = disc.sqrt();
                for t in [(-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)] {
                    if (0.0..=1.0).contains(&t) && on_arc(a0 + d * t) {
                        return 0.0;
                    }
                }
            }
            best
        }
    }
}

/// Distance between two edges: exact when one of them is a segment, otherwise
/// dense sampling followed by golden-section refinement of the best sample.
pub fn edge_distance(a: &Edge, b: &Edge) -> f64 {
    if let Edge::Segment { a: a0, b: a1 } = *a {
        return segment_edge_distance(a0, a1, b);
    }
    if let Edge::Segment { a: b0, b: b1 } = *b {
        return segment_edge_distance(b0, b1, a);
    }
    let n = 2048;
    let f = |s: f64| distance_to_edge(a.point(s), b);
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..=n {
        let d = f(i as f64 / n as f64);
        if d < best.0 {
            best = (d, i);
        }
    }
    let lo = (best.1.saturating_sub(1)) as f64 / n as f64;
    let hi = ((best.1 + 1).min(n)) as f64 / n as f64;
    let s = roots::golden_min::<f64, std::convert::Infallible, _>(|s| Ok(f(s)), lo, hi, 1e-14)
        .unwrap_or_else(|e| match e {});
    best.0.min(f(s))
}
