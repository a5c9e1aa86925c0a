//! Backward characteristic tracing.
//!
//! Along `dX/dt = −W u(X)` the solution satisfies
//! `z(x0) = ∫₀^T e^{−t} l(X(t)) dt`, where `X(T)` is the first boundary hit.
//! The integral is carried as a third ODE component so the embedded error
//! estimate controls it together with the trajectory.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{classify_boundary, BoundaryClassification, ClassifyError, Label};
use crate::expr::{EvalError, ScalarField, SharedFn, VectorField2};
use crate::geometry::{segment_edge_distance, Domain, Edge};
use crate::num::ode::{dopri5_step, error_norm, next_step, Step};
use crate::{Point2, Vec2};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_T_MAX: f64 = 40.0;
/// Tolerance used internally for finite-difference gradients.
pub const GRADIENT_TOL: f64 = 1e-12;
/// Boundary crossings are located to this distance.
pub const CROSSING_TOL: f64 = 1e-12;
/// Exits this close to a vertex or a Γ⁻ endpoint are reported as corner hits.
pub const CORNER_TOL: f64 = 1e-9;
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("query point ({x}, {y}) is outside the domain")]
    Outside { x: f64, y: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("integrator fault: characteristic left through edge {edge} at ({x}, {y}), which is not inflow")]
    IntegratorFault { edge: usize, x: f64, y: f64 },
    #[error("finite-difference stencil at ({x}, {y}) does not fit inside the domain")]
    Stencil { x: f64, y: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Transport problem with its boundary classification.
#[derive(Clone)]
pub struct TransportProblem {
    pub domain: Domain,
    pub u: VectorField2,
    pub l: SharedFn,
    /// Source expression of `l`, when it came from one.
    pub l_expr: Option<ScalarField>,
    pub w: f64,
    pub classification: BoundaryClassification,
    corners: Vec<Point2>,
}

impl fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportProblem")
            .field("domain", &self.domain)
            .field("w", &self.w)
            .field("l", &self.l_expr.as_ref().map(|s| s.value.to_string()))
            .finish_non_exhaustive()
    }
}

impl TransportProblem {
    pub fn new(domain: Domain, u: VectorField2, l: ScalarField, w: f64) -> Result<Self, ClassifyError> {
        let classification = classify_boundary(&domain, &u, w)?;
        let mut corners: Vec<Point2> = domain.vertices.iter().map(|v| v.point).collect();
        corners.extend(classification.gamma_minus_endpoints(&domain));
        Ok(TransportProblem { domain, u, l: Arc::new(l.clone()), l_expr: Some(l), w, classification, corners })
    }

    /// Same problem with a different right-hand side.
    pub fn with_rhs(&self, l: SharedFn) -> Self {
        TransportProblem { l, l_expr: None, ..self.clone() }
    }

    /// Vertices and Γ⁻ endpoints.
    pub fn corner_points(&self) -> &[Point2] {
        &self.corners
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub tol: f64,
    pub t_max: f64,
    pub record_path: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { tol: DEFAULT_TOL, t_max: DEFAULT_T_MAX, record_path: false }
    }
}

impl TraceOptions {
    pub fn with_tol(tol: f64) -> Self {
        TraceOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exit {
    HitGammaMinus { point: Point2, t: f64 },
    Truncated { t: f64, residual: f64 },
    HitCorner { vertex: Point2, point: Point2, t: f64 },
    LeftThroughOther { edge: usize, point: Point2, t: f64 },
}

impl Exit {
    pub fn time(&self) -> f64 {
        match *self {
            Exit::HitGammaMinus { t, .. }
            | Exit::Truncated { t, .. }
            | Exit::HitCorner { t, .. }
            | Exit::LeftThroughOther { t, .. } => t,
        }
    }

    pub fn point(&self) -> Option<Point2> {
        match *self {
            Exit::HitGammaMinus { point, .. }
            | Exit::HitCorner { point, .. }
            | Exit::LeftThroughOther { point, .. } => Some(point),
            Exit::Truncated { .. } => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Exit::HitGammaMinus { .. } => "gamma_minus",
            Exit::Truncated { .. } => "truncated",
            Exit::HitCorner { .. } => "corner",
            Exit::LeftThroughOther { .. } => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceResult {
    pub value: f64,
    pub exit: Exit,
    /// Set for corner exits and step-size underflow.
    pub degraded: bool,
    pub steps: usize,
    pub path: Option<Vec<Point2>>,
}

/// Integrates the backward characteristic from `x0` until it leaves the domain.
pub fn trace_backward(p: &TransportProblem, x0: Point2, opts: &TraceOptions) -> Result<TraceResult, TraceError> {
    if !(opts.tol > 0.0) {
        return Err(TraceError::BadTolerance(opts.tol));
    }
    if !x0.is_finite() || !p.domain.locate(x0).in_closure() {
        return Err(TraceError::Outside { x: x0.x, y: x0.y });
    }
    let (w, u, l, d) = (p.w, &p.u, &p.l, &p.domain);
    let mut rhs = |t: f64, s: &[f64; 3]| -> Result<[f64; 3], EvalError> {
        let q = Point2::new(s[0], s[1]);
        let v = u.eval(q)?;
        Ok([-w * v.x, -w * v.y, (-t).exp() * l.at(q)?])
    };
    let tol = opts.tol;
    let mut t = 0.0;
    let mut y = [x0.x, x0.y, 0.0];
    let mut k1 = rhs(0.0, &y)?;
    let diam = d.diameter();
    let speed = Vec2::new(k1[0], k1[1]).norm();
    let time_scale = if speed > 0.0 { (diam / speed).min(opts.t_max) } else { opts.t_max };
    let h_max = (time_scale / 4.0).min(1.0);
    let mut h = 1e-2 * h_max;
    let mut l_sup = k1[2].abs();
    let start_on_boundary = d.locate(x0).near_boundary;
    let support = l.support();
    // backward paths can only leave through Γ⁻
    let inflow: Vec<&Edge> = d
        .edges
        .iter()
        .zip(&p.classification.edges)
        .filter(|(_, c)| c.intervals.iter().any(|iv| iv.label == Label::Minus))
        .map(|(e, _)| e)
        .collect();
    let mut path = opts.record_path.then(|| vec![x0]);
    let mut steps = 0usize;

    let truncated = |t: f64, l_sup: f64, y: &[f64; 3], steps, path, degraded| TraceResult {
        value: y[2],
        exit: Exit::Truncated { t, residual: (-t).exp() * l_sup },
        degraded,
        steps,
        path,
    };

    loop {
        if t >= opts.t_max || steps >= MAX_STEPS {
            return Ok(truncated(t, l_sup, &y, steps, path, false));
        }
        h = h.min(h_max).min(opts.t_max - t);
        if let Some((c, r)) = support {
            // a step may not jump over the support of a narrow source
            let q = Point2::new(y[0], y[1]);
            let reach = (q.dist(c) - r).max(0.125 * r);
            let v = Vec2::new(k1[0], k1[1]).norm();
            if v > 0.0 {
                h = h.min(reach / v);
            }
        }
        let h_min = 1e-14 * t.max(1.0);
        if h < h_min {
            return Ok(truncated(t, l_sup, &y, steps, path, true));
        }
        let step: Step<f64, 3> = match dopri5_step(&mut rhs, t, &y, &k1, h) {
            Ok(s) => s,
            Err(_) => {
                // Stage point left the region where the data is defined: shorten.
                h *= 0.25;
                continue;
            }
        };
        let err = error_norm(&y, &step, tol, tol);
        if !(err <= 1.0) {
            h = if err.is_finite() { next_step(h, err) } else { h * 0.25 };
            continue;
        }
        let q = Point2::new(step.y[0], step.y[1]);
        if d.inside(q) {
            // Both ends inside does not rule out a short excursion across the
            // boundary; the path stays within `dev` of its chord.
            let q0 = Point2::new(y[0], y[1]);
            let dv = Vec2::new(step.k_end[0] - k1[0], step.k_end[1] - k1[1]).norm();
            let dev = 0.25 * h * dv + 1e-15 * diam;
            let exempt = steps == 0 && start_on_boundary;
            if !exempt && inflow.iter().any(|e| segment_edge_distance(q0, q, e) <= dev) {
                h *= 0.5;
                continue;
            }
            t += h;
            y = step.y;
            k1 = step.k_end;
            steps += 1;
            l_sup = l_sup.max(k1[2].abs() * t.exp());
            if let Some(pp) = path.as_mut() {
                pp.push(q);
            }
            h = next_step(h, err);
            continue;
        }

        // Crossing inside (t, t + h]: bisect on the step length.
        let speed = Vec2::new(k1[0], k1[1]).norm().max(Vec2::new(step.k_end[0], step.k_end[1]).norm());
        let dt_tol = if speed > 0.0 { CROSSING_TOL / speed } else { CROSSING_TOL };
        let (mut lo, mut hi) = (0.0, h);
        let mut best = step;
        for _ in 0..200 {
            if hi - lo <= dt_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match dopri5_step(&mut rhs, t, &y, &k1, mid) {
                Ok(s) if d.inside(Point2::new(s.y[0], s.y[1])) => lo = mid,
                Ok(s) => {
                    hi = mid;
                    best = s;
                }
                Err(_) => hi = mid,
            }
        }
        let exit_point = Point2::new(best.y[0], best.y[1]);
        let t_exit = t + hi;
        let value = best.y[2];
        if let Some(pp) = path.as_mut() {
            pp.push(exit_point);
        }
        steps += 1;
        if let Some(&vertex) = p.corners.iter().find(|c| c.dist(exit_point) <= CORNER_TOL) {
            return Ok(TraceResult {
                value,
                exit: Exit::HitCorner { vertex, point: exit_point, t: t_exit },
                degraded: true,
                steps,
                path,
            });
        }
        let hit = d.nearest_boundary(exit_point);
        let exit = match p.classification.label_at(hit.edge, hit.s) {
            Label::Minus => Exit::HitGammaMinus { point: exit_point, t: t_exit },
            _ => Exit::LeftThroughOther { edge: hit.edge, point: exit_point, t: t_exit },
        };
        return Ok(TraceResult { value, exit, degraded: false, steps, path });
    }
}

/// `z(x0)` at the default tolerance. Exits through non-inflow edges are errors.
pub fn solve_at(p: &TransportProblem, x0: Point2) -> Result<f64, TraceError> {
    solve_at_tol(p, x0, DEFAULT_TOL)
}

pub fn solve_at_tol(p: &TransportProblem, x0: Point2, tol: f64) -> Result<f64, TraceError> {
    let r = trace_backward(p, x0, &TraceOptions::with_tol(tol))?;
    match r.exit {
        Exit::LeftThroughOther { edge, point, .. } => {
            Err(TraceError::IntegratorFault { edge, x: point.x, y: point.y })
        }
        _ => Ok(r.value),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridStatus {
    Outside,
    Boundary,
    GammaMinus,
    Truncated,
    Corner,
    Other,
    Error,
}

impl GridStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridStatus::Outside => "outside",
            GridStatus::Boundary => "boundary",
            GridStatus::GammaMinus => "gamma_minus",
            GridStatus::Truncated => "truncated",
            GridStatus::Corner => "corner",
            GridStatus::Other => "other",
            GridStatus::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
    pub status: GridStatus,
    pub exit: Option<Point2>,
    pub t: Option<f64>,
}

/// Solves at every point of an `nx × ny` lattice spanning the bounding box.
/// Row-major in `y`, then `x`.
pub fn solve_grid(p: &TransportProblem, nx: usize, ny: usize, opts: &TraceOptions) -> Vec<GridSample> {
    let (lo, hi) = p.domain.bbox();
    let nx = nx.max(2);
    let ny = ny.max(2);
    let pts: Vec<Point2> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Point2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / (nx - 1) as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / (ny - 1) as f64,
                )
            })
        })
        .collect();
    pts.par_iter().map(|&q| solve_point(p, q, opts)).collect()
}

/// Like [`solve_grid`] on explicit points.
pub fn solve_points(p: &TransportProblem, pts: &[Point2], opts: &TraceOptions) -> Vec<GridSample> {
    pts.par_iter().map(|&q| solve_point(p, q, opts)).collect()
}

fn solve_point(p: &TransportProblem, q: Point2, opts: &TraceOptions) -> GridSample {
    let blank = |status| GridSample { x: q.x, y: q.y, z: None, status, exit: None, t: None };
    let loc = p.domain.locate(q);
    if !loc.in_closure() {
        return blank(GridStatus::Outside);
    }
    if loc.near_boundary {
        let hit = p.domain.nearest_boundary(q);
        if p.classification.label_at(hit.edge, hit.s) == Label::Minus {
            return GridSample { x: q.x, y: q.y, z: Some(0.0), status: GridStatus::GammaMinus, exit: Some(q), t: Some(0.0) };
        }
    }
    match trace_backward(p, q, opts) {
        Ok(r) => {
            let status = match r.exit {
                Exit::HitGammaMinus { .. } => GridStatus::GammaMinus,
                Exit::Truncated { .. } => GridStatus::Truncated,
                Exit::HitCorner { .. } => GridStatus::Corner,
                Exit::LeftThroughOther { .. } => GridStatus::Other,
            };
            GridSample { x: q.x, y: q.y, z: Some(r.value), status, exit: r.exit.point(), t: Some(r.exit.time()) }
        }
        Err(_) if loc.near_boundary => blank(GridStatus::Boundary),
        Err(_) => blank(GridStatus::Error),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gradient {
    pub grad: Vec2,
    /// At least one component fell back to a one-sided difference.
    pub one_sided: bool,
}

/// Default finite-difference step for a domain.
pub fn default_fd_step(d: &Domain) -> f64 {
    1e-5 * d.diameter()
}

/// Central differences of the solution, one-sided where the stencil leaves the domain.
pub fn gradient_at(p: &TransportProblem, x0: Point2, h: f64) -> Result<Gradient, TraceError> {
    let z = |q: Point2| solve_at_tol(p, q, GRADIENT_TOL);
    let d = &p.domain;
    let mut one_sided = false;
    let mut comp = |e: Vec2| -> Result<f64, TraceError> {
        let (a, b) = (x0 + e * h, x0 + e * -h);
        match (d.inside(a), d.inside(b)) {
            (true, true) => Ok((z(a)? - z(b)?) / (2.0 * h)),
            (true, false) => {
                one_sided = true;
                Ok((z(a)? - z(x0)?) / h)
            }
            (false, true) => {
                one_sided = true;
                Ok((z(x0)? - z(b)?) / h)
            }
            (false, false) => Err(TraceError::Stencil { x: x0.x, y: x0.y }),
        }
    };
    let gx = comp(Vec2::new(1.0, 0.0))?;
    let gy = comp(Vec2::new(0.0, 1.0))?;
    Ok(Gradient { grad: Vec2::new(gx, gy), one_sided })
}
