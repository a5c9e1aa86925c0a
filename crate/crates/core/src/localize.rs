//! Localization near the inflow boundary: decomposition of Γ⁻ into pieces,
//! cutoffs, splitting of the right-hand side, and the local solution near an
//! exceptional point.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{BoundaryClassification, ExceptionalPoint, Label};
use crate::expr::{EvalError, PointFn, SharedFn, VectorField2};
use crate::geometry::{edge_distance, Domain, Edge};
use crate::num::quad::{integrate_try, QuadOpts};
use crate::num::roots;
use crate::{Point2, Vec2};

/// Tolerance below which two pieces count as touching.
const TOUCH_TOL: f64 = 1e-12;
/// Ring values above this block the extension by zero.
pub const RING_TOL: f64 = 1e-8;
/// Samples per ring check.
pub const RING_SAMPLES: usize = 256;
const SEARCH_DIRS: usize = 64;
const SEARCH_RADII: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizeError {
    #[error("Γ⁻ is empty")]
    EmptyGammaMinus,
    #[error("μ = {mu} out of range (0, {max}]")]
    MuOutOfRange { mu: f64, max: f64 },
    #[error("hypothesis fails at ({x}, {y}): {reason}")]
    Hypothesis { x: f64, y: f64, reason: String },
    #[error("degenerate local frame: {0}")]
    DegenerateFrame(String),
    #[error("local point ({x}, {y}) outside the validity region of radius {radius}")]
    OutsideValidity { x: f64, y: f64, radius: f64 },
    #[error("X = {value} outside [0, α(y_M)] = [0, {max}]")]
    AlphaRange { value: f64, max: f64 },
    #[error("precondition failed: μ = {mu} exceeds r1/6 = {bound}")]
    Precondition { mu: f64, bound: f64 },
    #[error("ring check failed: max |z| = {max} > {tol}")]
    RingNotVanishing { max: f64, tol: f64 },
    #[error("no Γ⁻ piece ends at ({x}, {y})")]
    NoPiece { x: f64, y: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Smooth monotone profile with ψ(0) = 1 and ψ(1) = 0, flat to all orders at both ends.
pub fn psi(s: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let (a, b) = (f(1.0 - s), f(s));
    a / (a + b)
}

/// One piece γⱼ of the closure of Γ⁻.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaPiece {
    pub edge: usize,
    pub s0: f64,
    pub s1: f64,
    pub curve: Edge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaDecomposition {
    pub pieces: Vec<GammaPiece>,
    /// Γ⁻ is the whole boundary traversed as one loop.
    pub closed: bool,
    /// Minimum distance between non-touching pieces; +∞ when every pair touches.
    pub mu0: f64,
}

/// Splits Γ⁻ into one piece per edge part, in traversal order.
pub fn decompose_gamma_minus(c: &BoundaryClassification, d: &Domain) -> Result<GammaDecomposition, LocalizeError> {
    let runs = c.gamma_minus_runs();
    if runs.is_empty() {
        return Err(LocalizeError::EmptyGammaMinus);
    }
    let closed = runs.len() == 1 && runs[0].closed;
    let pieces: Vec<GammaPiece> = runs
        .iter()
        .flat_map(|r| r.parts.iter())
        .map(|&(e, s0, s1)| GammaPiece { edge: e, s0, s1, curve: d.edges[e].sub(s0, s1) })
        .collect();
    let mut mu0 = f64::INFINITY;
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let dist = edge_distance(&pieces[i].curve, &pieces[j].curve);
            if dist > TOUCH_TOL {
                mu0 = mu0.min(dist);
            }
        }
    }
    Ok(GammaDecomposition { pieces, closed, mu0 })
}

impl GammaDecomposition {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn distance(&self, j: usize, p: Point2) -> f64 {
        self.pieces[j].curve.closest(p).1
    }

    /// θ_{j,μ}: 1 within μ/2 of γⱼ, 0 beyond μ.
    pub fn theta(&self, j: usize, mu: f64, p: Point2) -> f64 {
        psi((2.0 * self.distance(j, p) / mu - 1.0).clamp(0.0, 1.0))
    }

    /// θ_{j+1,μ}, with θ_{q+1} = θ₁ for a closed chain of at least three pieces and 0 otherwise.
    pub fn theta_next(&self, j: usize, mu: f64, p: Point2) -> f64 {
        let q = self.pieces.len();
        if j + 1 < q {
            self.theta(j + 1, mu, p)
        } else if self.closed && q >= 3 {
            self.theta(0, mu, p)
        } else {
            0.0
        }
    }

    /// Weight of l_{j,μ}: θⱼ(1 − θ_{j+1}).
    pub fn weight(&self, j: usize, mu: f64, p: Point2) -> f64 {
        self.theta(j, mu, p) * (1.0 - self.theta_next(j, mu, p))
    }

    /// Index of the piece with an end at `m`.
    pub fn piece_at(&self, m: Point2) -> Option<usize> {
        self.pieces.iter().position(|g| g.curve.start().dist(m) <= 1e-9 || g.curve.end().dist(m) <= 1e-9)
    }

    /// Largest admissible μ for the split.
    pub fn mu_max(&self) -> f64 {
        0.5 * self.mu0
    }
}

struct Weighted {
    dec: Arc<GammaDecomposition>,
    mu: f64,
    l: SharedFn,
    part: Option<usize>,
}

impl PointFn for Weighted {
    fn at(&self, p: Point2) -> Result<f64, EvalError> {
        let w = match self.part {
            Some(j) => self.dec.weight(j, self.mu, p),
            None => 1.0 - (0..self.dec.len()).map(|j| self.dec.weight(j, self.mu, p)).sum::<f64>(),
        };
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(w * self.l.at(p)?)
    }
}

/// Right-hand side split into the part away from Γ⁻ and one part per piece.
#[derive(Clone)]
pub struct SplitRhs {
    pub mu: f64,
    pub l_mu: SharedFn,
    pub parts: Vec<SharedFn>,
}

/// Splits `l` as `l_μ + Σ l_{j,μ}` with `l_{j,μ} = θⱼ(1 − θ_{j+1}) l`.
pub fn split_rhs(l: SharedFn, dec: &GammaDecomposition, mu: f64) -> Result<SplitRhs, LocalizeError> {
    let max = dec.mu_max();
    if !(mu > 0.0 && mu <= max) {
        return Err(LocalizeError::MuOutOfRange { mu, max });
    }
    let dec = Arc::new(dec.clone());
    let mk = |part| -> SharedFn { Arc::new(Weighted { dec: dec.clone(), mu, l: l.clone(), part }) };
    Ok(SplitRhs { mu, l_mu: mk(None), parts: (0..dec.len()).map(|j| mk(Some(j))).collect() })
}

/// Orthonormal frame at a point of E: origin `m`, x along −n (into the domain),
/// y along τ₋ (into Γ⁻).
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub origin: Point2,
    pub ex: Vec2,
    pub ey: Vec2,
    pub normal: Vec2,
    pub tau: Vec2,
    pub is_vertex: bool,
    /// u₂(0,0) < 0.
    pub u20: f64,
    /// ∂u₁/∂y(0,0) > 0.
    pub a: f64,
    pub gamma_len: f64,
    /// Distance from the origin to the ends of the side containing it.
    pub eta: f64,
    pub w: f64,
    pub u: VectorField2,
    pub domain: Domain,
}

fn quad_opts() -> QuadOpts {
    QuadOpts::new(1e-14, 1e-12)
}

/// Builds the frame at `m`, checking the simple-root and tangent-sign conditions.
pub fn build_local_frame(
    m: &ExceptionalPoint,
    d: &Domain,
    u: &VectorField2,
    w: f64,
) -> Result<LocalFrame, LocalizeError> {
    let fail = |reason: String| LocalizeError::Hypothesis { x: m.m.x, y: m.m.y, reason };
    if m.du_dtau_dot_n.abs() <= crate::classify::SIMPLE_ROOT_TOL {
        return Err(fail(format!("double root: ∂(u·n₋)/∂τ₋ = {:e}", m.du_dtau_dot_n)));
    }
    if m.u_dot_tau >= -crate::classify::TANGENT_TOL {
        return Err(fail(format!("u·τ_- = {} is not negative", m.u_dot_tau)));
    }
    let ex = m.normal * -1.0;
    let ey = m.tau;
    let u20 = u.eval(m.m)?.dot(ey);
    let a = u.derivative_along(m.m, ey)?.dot(ex);
    if !(a > crate::classify::SIMPLE_ROOT_TOL) {
        return Err(fail(format!("∂u₁/∂y(0,0) = {a} is not positive")));
    }
    let side = &d.edges[m.edge_index];
    let eta = m.m.dist(side.start()).min(m.m.dist(side.end()));
    let f = LocalFrame {
        origin: m.m,
        ex,
        ey,
        normal: m.normal,
        tau: m.tau,
        is_vertex: m.is_vertex,
        u20,
        a,
        gamma_len: m.on_edge.length(),
        eta,
        w,
        u: u.clone(),
        domain: d.clone(),
    };
    let probe = 1e-2 * f.gamma_len;
    for k in 1..=100 {
        let y = probe * k as f64 / 100.0;
        if !(f.u1(0.0, y)? > 0.0) {
            return Err(LocalizeError::DegenerateFrame(format!("u₁(0, {y}) is not positive")));
        }
    }
    Ok(f)
}

impl LocalFrame {
    pub fn to_local(&self, p: Point2) -> Point2 {
        let r = p - self.origin;
        Point2::new(r.dot(self.ex), r.dot(self.ey))
    }

    pub fn to_global(&self, q: Point2) -> Point2 {
        self.origin + self.ex * q.x + self.ey * q.y
    }

    /// Whether the extended field is used for y < 0 (origin at a vertex).
    pub fn extended(&self) -> bool {
        self.is_vertex
    }

    fn real(&self, x: f64, y: f64) -> Result<Vec2, EvalError> {
        let v = self.u.eval(self.to_global(Point2::new(x, y)))?;
        Ok(Vec2::new(v.dot(self.ex), v.dot(self.ey)))
    }

    fn dy_u2_real(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(self.u.derivative_along(self.to_global(Point2::new(x, y)), self.ey)?.dot(self.ey))
    }

    /// Local u₂, reflected evenly in y below the axis at a vertex.
    pub fn u2(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        if self.extended() && y < 0.0 {
            Ok(self.real(x, -y)?.y)
        } else {
            Ok(self.real(x, y)?.y)
        }
    }

    /// Local u₁; below the axis at a vertex, the divergence-free completion of the reflected u₂.
    pub fn u1(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        if self.extended() && y < 0.0 {
            let q = integrate_try(|t| self.dy_u2_real(t, -y), 0.0, x, quad_opts())?;
            Ok(q.value)
        } else {
            Ok(self.real(x, y)?.x)
        }
    }

    /// k(x,y) = |u₂(0,0)||x| + ½ ∂u₁/∂y(0,0) y².
    pub fn k_form(&self, q: Point2) -> f64 {
        self.u20.abs() * q.x.abs() + 0.5 * self.a * q.y * q.y
    }

    /// α(y) = ∫₀^y u₁(0,t) dt.
    pub fn alpha(&self, y: f64) -> Result<f64, EvalError> {
        if self.extended() && y <= 0.0 {
            return Ok(0.0);
        }
        Ok(integrate_try(|t| self.u1(0.0, t), 0.0, y, quad_opts())?.value)
    }

    /// X(x,y) = −∫₀^x u₂(t,y) dt + α(y).
    pub fn x_map(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.x_map_with_alpha(x, y, self.alpha(y)?)
    }

    fn x_map_with_alpha(&self, x: f64, y: f64, alpha_y: f64) -> Result<f64, EvalError> {
        let q = integrate_try(|t| self.u2(t, y), 0.0, x, quad_opts())?;
        Ok(alpha_y - q.value)
    }

    /// Solves X(x_t, t) = target for x_t ≥ 0.
    fn invert_x(&self, target: f64, t: f64) -> Result<f64, EvalError> {
        let at = self.alpha(t)?;
        let gap = target - at;
        if gap <= 0.0 {
            return Ok(0.0);
        }
        let s0 = self.u2(0.0, t)?.abs().max(1e-300);
        let hi = 2.0 * gap / self.u20.abs() * 1.5 + 1e-300;
        roots::newton_guarded(
            |x| self.x_map_with_alpha(x, t, at),
            |x| self.u2(x, t).map(|v| -v),
            target,
            0.0,
            hi.max(2.0 * gap / s0),
            gap / s0,
            1e-15,
        )
    }
}

/// (X, Y) for a local point with x ≥ 0.
pub fn change_vars(f: &LocalFrame, q: Point2) -> Result<(f64, f64), LocalizeError> {
    if q.x < -1e-12 {
        return Err(LocalizeError::OutsideValidity { x: q.x, y: q.y, radius: f64::NAN });
    }
    Ok((f.x_map(q.x.max(0.0), q.y)?, q.y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalConstants {
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub mu5: f64,
    pub k: f64,
    pub y_m: f64,
    pub alpha_ym: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_star: f64,
    pub mu_admissible: f64,
}

fn half_ball(r: f64) -> Vec<Point2> {
    let mut pts = vec![Point2::new(0.0, 0.0)];
    for i in 0..SEARCH_DIRS {
        let phi = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / (SEARCH_DIRS - 1) as f64;
        let dir = Vec2::from_angle(phi);
        for k in 1..=SEARCH_RADII {
            pts.push(dir * (r * k as f64 / SEARCH_RADII as f64));
        }
    }
    pts
}

/// Largest radius up to `cap` (halving, then bisection between the last two
/// candidates) for which `pred` holds.
fn search_radius<F>(cap: f64, floor: f64, what: &str, pred: F) -> Result<f64, LocalizeError>
where
    F: Fn(f64) -> bool,
{
    let mut r = cap;
    while !pred(r) {
        r *= 0.5;
        if r < floor {
            return Err(LocalizeError::DegenerateFrame(format!("no admissible radius for {what}")));
        }
    }
    if r == cap {
        return Ok(r);
    }
    let (mut good, mut bad) = (r, (2.0 * r).min(cap));
    for _ in 0..12 {
        let mid = 0.5 * (good + bad);
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Searches μ₂, μ₃, μ₅ and derives the remaining constants. `mu0` caps μ₂.
pub fn compute_constants(f: &LocalFrame, mu0: f64) -> Result<LocalConstants, LocalizeError> {
    let diam = f.domain.diameter();
    let floor = 1e-8 * diam;
    let in_closure = |q: Point2| f.domain.locate(f.to_global(q)).in_closure();
    let u20 = f.u20;

    let mu2 = search_radius(mu0.min(diam), floor, "μ₂", |r| {
        half_ball(r).par_iter().all(|&q| !in_closure(q) || f.u2(q.x, q.y).map_or(false, |v| v < 0.0))
    })?;

    let cap3 = if f.is_vertex { mu2.min(f.gamma_len) } else { mu2.min(f.eta) };
    let mu3 = search_radius(cap3, floor, "μ₃", |r| {
        let field_ok = half_ball(r).par_iter().all(|&q| {
            !in_closure(q) || f.u2(q.x, q.y).map_or(false, |v| 1.5 * u20 <= v && v <= 0.5 * u20)
        });
        // y = 0 skipped: u₁(0,0) vanishes only to the root tolerance of m
        let axis_ok = (1..=SEARCH_RADII).all(|k| {
            let y = r * k as f64 / SEARCH_RADII as f64;
            let check = |y: f64| {
                f.u1(0.0, y).map_or(false, |v| {
                    let (lo, hi, val) = (0.5 * f.a * y.abs(), 1.5 * f.a * y.abs(), if f.is_vertex { v } else { v.abs() });
                    lo <= val && val <= hi
                })
            };
            check(y) && (f.is_vertex || check(-y))
        });
        field_ok && axis_ok
    })?;

    let mu4 = u20.abs() / f.a;
    let y_m = (mu3 / 6.0).min(mu4).min(f.gamma_len);
    let alpha_ym = f.alpha(y_m)?;
    let slack = 1e-12 * alpha_ym.abs().max(1e-300);
    let mu5 = search_radius(mu2, floor, "μ₅", |r| {
        half_ball(r).par_iter().all(|&q| {
            f.x_map(q.x, q.y).map_or(false, |x| x >= -slack && x <= alpha_ym + slack)
        })
    })?;

    let k = (mu3 / 6.0).min(mu4).min(mu5).min(f.gamma_len);
    let r1 = (u20.abs() * k / 12.0).min(f.a * k * k / 288.0);
    let r2 = k * u20.abs() / 6.0;
    let r_star = 2.0 * (r1 / f.a).sqrt();
    Ok(LocalConstants { mu2, mu3, mu4, mu5, k, y_m, alpha_ym, r1, r2, r_star, mu_admissible: r1 / 6.0 })
}

/// λ_μ in local coordinates: 1 where k ≤ μ, 0 where k ≥ 2μ.
pub fn lambda_cutoff(f: &LocalFrame, mu: f64, q: Point2) -> f64 {
    psi((f.k_form(q) / mu - 1.0).clamp(0.0, 1.0))
}

struct LocalRhs {
    frame: Arc<LocalFrame>,
    dec: Arc<GammaDecomposition>,
    j: usize,
    mu: f64,
    l: SharedFn,
}

impl PointFn for LocalRhs {
    fn at(&self, p: Point2) -> Result<f64, EvalError> {
        let lam = lambda_cutoff(&self.frame, self.mu, self.frame.to_local(p));
        if lam == 0.0 {
            return Ok(0.0);
        }
        let w = self.dec.weight(self.j, self.mu, p);
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(lam * w * self.l.at(p)?)
    }

    fn support(&self) -> Option<(Point2, f64)> {
        // λ vanishes for k ≥ 2μ
        let f = &self.frame;
        let (x, y) = (2.0 * self.mu / f.u20.abs(), (4.0 * self.mu / f.a).sqrt());
        Some((f.origin, x.hypot(y)))
    }
}

/// l̄_{j,μ} = λ_μ θⱼ(1 − θ_{j+1}) l, as a function of global points.
pub fn local_rhs(f: &LocalFrame, dec: &GammaDecomposition, j: usize, mu: f64, l: SharedFn) -> SharedFn {
    Arc::new(LocalRhs { frame: Arc::new(f.clone()), dec: Arc::new(dec.clone()), j, mu, l })
}

/// Inverse of α on [0, y_M].
fn alpha_inverse(f: &LocalFrame, c: &LocalConstants, xv: f64) -> Result<f64, LocalizeError> {
    if xv <= 0.0 {
        return Ok(0.0);
    }
    if xv > c.alpha_ym * (1.0 + 1e-9) {
        return Err(LocalizeError::AlphaRange { value: xv, max: c.alpha_ym });
    }
    if xv >= c.alpha_ym {
        return Ok(c.y_m);
    }
    let guess = (2.0 * xv / f.a).sqrt().min(c.y_m);
    Ok(roots::newton_guarded(|y| f.alpha(y), |y| f.u1(0.0, y), xv, 0.0, c.y_m, guess, 1e-15)?)
}

/// Local integral solution at a local point of B⁺_K ∩ Ω̄.
pub fn local_solution(
    f: &LocalFrame,
    c: &LocalConstants,
    lbar: &dyn PointFn,
    q: Point2,
) -> Result<f64, LocalizeError> {
    if q.norm() > c.k * (1.0 + 1e-12) || q.x < -1e-12 {
        return Err(LocalizeError::OutsideValidity { x: q.x, y: q.y, radius: c.k });
    }
    let (xv, y) = change_vars(f, q)?;
    let top = alpha_inverse(f, c, xv)?;
    if y >= top {
        return Ok(0.0);
    }
    let w = f.w;
    let g = |t: f64| -> Result<(f64, f64), EvalError> {
        let xt = f.invert_x(xv, t)?;
        Ok((xt, 1.0 / (w * f.u2(xt, t)?)))
    };
    let opts = QuadOpts::new(1e-12, 1e-10);
    let outer = integrate_try(
        |t| -> Result<f64, EvalError> {
            let (xt, gt) = g(t)?;
            let lv = lbar.at(f.to_global(Point2::new(xt, t)))?;
            if lv == 0.0 {
                return Ok(0.0);
            }
            let v = integrate_try(|th| g(th).map(|r| r.1), y, t, opts)?.value;
            Ok(v.exp() * lv * gt)
        },
        y,
        top,
        opts,
    )?;
    Ok(-outer.value)
}

/// Radical-inverse (van der Corput) in the given base.
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingCheck {
    pub max_abs: f64,
    pub inner: f64,
    pub outer: f64,
    pub points: Vec<Point2>,
}

/// Local points of the annulus r* ≤ |q| ≤ r₂/|u₂(0,0)| with x ≥ 0 inside Ω̄,
/// from a Halton sequence.
pub fn ring_points(f: &LocalFrame, c: &LocalConstants, count: usize) -> Vec<Point2> {
    let (r0, r1) = (c.r_star, c.r2 / f.u20.abs());
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count && i < 64 * count {
        let rad = (r0 * r0 + halton(i, 2) * (r1 * r1 - r0 * r0)).sqrt();
        let phi = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * halton(i, 3);
        let q = Vec2::from_angle(phi) * rad;
        if f.domain.locate(f.to_global(q)).in_closure() {
            out.push(q);
        }
        i += 1;
    }
    out
}

/// Max |local z| on the vanishing ring; requires μ ≤ r₁/6.
pub fn ring_vanish_check(
    f: &LocalFrame,
    c: &LocalConstants,
    lbar: &dyn PointFn,
    mu: f64,
) -> Result<RingCheck, LocalizeError> {
    let bound = c.r1 / 6.0;
    if !(mu > 0.0) || mu > bound * (1.0 + 1e-12) {
        return Err(LocalizeError::Precondition { mu, bound });
    }
    let points = ring_points(f, c, RING_SAMPLES);
    let vals: Vec<f64> = points
        .par_iter()
        .map(|&q| local_solution(f, c, lbar, q).map(f64::abs))
        .collect::<Result<_, _>>()?;
    let max_abs = vals.into_iter().fold(0.0, f64::max);
    Ok(RingCheck { max_abs, inner: c.r_star, outer: c.r2 / f.u20.abs(), points })
}

/// Local solution extended by zero outside B(m, r*).
#[derive(Clone)]
pub struct ExtendedLocal {
    pub frame: LocalFrame,
    pub consts: LocalConstants,
    pub lbar: SharedFn,
}

/// Refuses unless the ring check came out below [`RING_TOL`].
pub fn extend_by_zero(
    f: &LocalFrame,
    c: &LocalConstants,
    lbar: SharedFn,
    ring: &RingCheck,
) -> Result<ExtendedLocal, LocalizeError> {
    if !(ring.max_abs <= RING_TOL) {
        return Err(LocalizeError::RingNotVanishing { max: ring.max_abs, tol: RING_TOL });
    }
    Ok(ExtendedLocal { frame: f.clone(), consts: *c, lbar })
}

impl ExtendedLocal {
    pub fn eval(&self, p: Point2) -> Result<f64, LocalizeError> {
        let q = self.frame.to_local(p);
        if q.norm() >= self.consts.r_star {
            return Ok(0.0);
        }
        local_solution(&self.frame, &self.consts, self.lbar.as_ref(), q)
    }
}

/// Labels of the boundary at a point, for diagnostics.
pub fn label_near(c: &BoundaryClassification, d: &Domain, p: Point2) -> Label {
    let h = d.nearest_boundary(p);
    c.label_at(h.edge, h.s)
}
