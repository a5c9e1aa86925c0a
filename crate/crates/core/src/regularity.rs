//! Quadrature of L² and H¹ quantities, annulus diagnostics near singular
//! boundary loci, and the Green's formula and sign checks.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, ScalarField, VectorField2};
use crate::geometry::Domain;
use crate::num::pairwise_sum;
use crate::num::quad::{integrate_try, QuadOpts};
use crate::{Point2, Vec2};

pub const DEFAULT_ANNULI: usize = 8;
/// Ratios at or below this across the last annuli mean convergence.
pub const RHO: f64 = 0.75;
pub const LOG_WINDOW: (f64, f64) = (0.8, 1.25);
/// Spread allowed in log₂ ratios for a power-law verdict.
pub const POWER_SPREAD: f64 = 0.25;
/// Number of trailing annuli used by the verdict.
pub const TAIL: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularityError {
    #[error("resolution {0} below the minimum of 16")]
    Resolution(usize),
    #[error("non-finite samples at {} point(s), first at ({}, {})", .0.len(), .0[0].x, .0[0].y)]
    NonFinite(Vec<Point2>),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("bad radius {0}")]
    Radius(f64),
}

impl From<EvalError> for RegularityError {
    fn from(e: EvalError) -> Self {
        RegularityError::Eval(e.to_string())
    }
}

/// Midpoint-rule integral with its doubled-resolution check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L2Integral {
    pub value: f64,
    pub coarse: f64,
    /// Relative change between resolutions n and 2n is at most 1%.
    pub richardson_ok: bool,
}

fn midpoint_sum<F, E>(f: &F, d: &Domain, n: usize) -> Result<f64, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    let (lo, hi) = d.bbox();
    let (dx, dy) = ((hi.x - lo.x) / n as f64, (hi.y - lo.y) / n as f64);
    let cells: Vec<Point2> = (0..n * n)
        .map(|k| Point2::new(lo.x + (k % n) as f64 * dx + 0.5 * dx, lo.y + (k / n) as f64 * dy + 0.5 * dy))
        .filter(|&p| d.inside(p))
        .collect();
    let vals: Vec<Result<f64, String>> = cells.par_iter().map(|&p| f(p).map_err(|e| e.to_string())).collect();
    let mut out = Vec::with_capacity(vals.len());
    let mut bad = Vec::new();
    for (p, v) in cells.iter().zip(vals) {
        match v {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => bad.push(*p),
            Err(e) => return Err(RegularityError::Eval(e)),
        }
    }
    if !bad.is_empty() {
        return Err(RegularityError::NonFinite(bad));
    }
    Ok(pairwise_sum(&out) * dx * dy)
}

/// ∫_Ω f by the midpoint rule on the inside cells of an `n × n` bounding-box lattice,
/// repeated at `2n`.
pub fn l2_integral<F, E>(f: &F, d: &Domain, n: usize) -> Result<L2Integral, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    if n < 16 {
        return Err(RegularityError::Resolution(n));
    }
    let coarse = midpoint_sum(f, d, n)?;
    let value = midpoint_sum(f, d, 2 * n)?;
    let richardson_ok = (value - coarse).abs() <= 0.01 * value.abs().max(1e-300);
    Ok(L2Integral { value, coarse, richardson_ok })
}

/// Where the gradient is expected to blow up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingularLocus {
    Point(Point2),
    /// Straight boundary piece; annuli become tubes at distance ε from it.
    Segment(Point2, Point2),
}

impl fmt::Display for SingularLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularLocus::Point(p) => write!(f, "point ({}, {})", p.x, p.y),
            SingularLocus::Segment(a, b) => write!(f, "segment ({}, {})-({}, {})", a.x, a.y, b.x, b.y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum H1Verdict {
    Convergent,
    DivergentLog,
    DivergentPower { rate: f64 },
    Indeterminate,
}

impl H1Verdict {
    pub fn is_divergent(&self) -> bool {
        matches!(self, H1Verdict::DivergentLog | H1Verdict::DivergentPower { .. })
    }
}

impl fmt::Display for H1Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            H1Verdict::Convergent => f.write_str("CONVERGENT"),
            H1Verdict::DivergentLog => f.write_str("DIVERGENT_LOG"),
            H1Verdict::DivergentPower { rate } => write!(f, "DIVERGENT_POWER({rate:.3})"),
            H1Verdict::Indeterminate => f.write_str("INDETERMINATE"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct H1Options {
    pub annuli: usize,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for H1Options {
    fn default() -> Self {
        H1Options { annuli: DEFAULT_ANNULI, rel_tol: 1e-4, max_intervals: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub locus: SingularLocus,
    /// ε_k = r₀ 2^{−k}, k = 0..=annuli.
    pub radii: Vec<f64>,
    /// I_k; `None` when the annulus quadrature failed.
    pub annulus_integrals: Vec<Option<f64>>,
    pub cumulative: Vec<f64>,
    /// I_{k+1}/I_k over the trailing annuli.
    pub tail_ratios: Vec<f64>,
    pub verdict: H1Verdict,
    pub rule: String,
}

fn fd_grad<F, E>(z: &F, p: Point2, h: f64) -> Result<Vec2, E>
where
    F: Fn(Point2) -> Result<f64, E>,
{
    let gx = (z(p + Vec2::new(h, 0.0))? - z(p - Vec2::new(h, 0.0))?) / (2.0 * h);
    let gy = (z(p + Vec2::new(0.0, h))? - z(p - Vec2::new(0.0, h))?) / (2.0 * h);
    Ok(Vec2::new(gx, gy))
}

/// Maximal φ-intervals in (−π, π] where `ok(φ)` holds, edges located by bisection
/// and trimmed inward.
fn angular_ranges<P: Fn(f64) -> bool>(ok: P) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    const N: usize = 720;
    let phis: Vec<f64> = (0..=N).map(|i| -PI + 2.0 * PI * i as f64 / N as f64).collect();
    let flags: Vec<bool> = phis.iter().map(|&f| ok(f)).collect();
    let edge = |good: f64, bad: f64| {
        let (mut g, mut b) = (good, bad);
        for _ in 0..50 {
            let m = 0.5 * (g + b);
            if ok(m) {
                g = m
            } else {
                b = m
            }
        }
        g
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i <= N {
        if !flags[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < N && flags[j + 1] {
            j += 1;
        }
        let a = if i == 0 { phis[0] } else { edge(phis[i], phis[i - 1]) };
        let b = if j == N { phis[N] } else { edge(phis[j], phis[j + 1]) };
        let (a, b) = (a + 1e-10, b - 1e-10);
        if b > a {
            out.push((a, b));
        }
        i = j + 1;
    }
    out
}

fn polar_integral<F, E, P>(
    z: &F,
    d: &Domain,
    c: Point2,
    r_in: f64,
    r_out: f64,
    filter: &P,
    opts: QuadOpts,
) -> Result<f64, String>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
    P: Fn(Vec2) -> bool,
{
    let h = r_in / 64.0;
    let integrand = |p: Point2| -> Result<f64, String> {
        let hh = h.min(0.25 * d.distance_to_boundary(p));
        let g = fd_grad(z, p, hh).map_err(|e| e.to_string())?;
        Ok(g.norm_sq())
    };
    let q = integrate_try(
        |r: f64| -> Result<f64, String> {
            let ranges = angular_ranges(|phi| {
                let e = Vec2::from_angle(phi);
                filter(e) && d.inside(c + e * r)
            });
            let mut s = 0.0;
            for (a, b) in ranges {
                s += integrate_try(|phi: f64| integrand(c + Vec2::from_angle(phi) * r), a, b, opts)?.value;
            }
            Ok(r * s)
        },
        r_in,
        r_out,
        opts,
    )?;
    Ok(q.value)
}

fn tube_integral<F, E>(
    z: &F,
    d: &Domain,
    a: Point2,
    b: Point2,
    r_in: f64,
    r_out: f64,
    opts: QuadOpts,
) -> Result<f64, String>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    let len = a.dist(b);
    let t = (b - a) * (1.0 / len);
    let mid = a + (b - a) * 0.5;
    let probe = 1e-6 * d.diameter().max(len);
    let nu = if d.inside(mid + t.perp() * probe) { t.perp() } else { t.perp() * -1.0 };
    let h = r_in / 64.0;
    let integrand = |p: Point2| -> Result<f64, String> {
        if !d.inside(p) {
            return Ok(0.0);
        }
        let hh = h.min(0.25 * d.distance_to_boundary(p));
        Ok(fd_grad(z, p, hh).map_err(|e| e.to_string())?.norm_sq())
    };
    let strip = integrate_try(
        |dist: f64| -> Result<f64, String> {
            Ok(integrate_try(|s: f64| integrand(a + t * s + nu * dist), 0.0, len, opts)?.value)
        },
        r_in,
        r_out,
        opts,
    )?
    .value;
    // Half-disc caps beyond each end, on the domain side.
    let cap_a = polar_integral(z, d, a, r_in, r_out, &|e: Vec2| e.dot(t) < 0.0, opts)?;
    let cap_b = polar_integral(z, d, b, r_in, r_out, &|e: Vec2| e.dot(t) > 0.0, opts)?;
    Ok(strip + cap_a + cap_b)
}

/// Classifies the tail ratios.
pub fn classify_ratios(ratios: &[f64]) -> H1Verdict {
    if ratios.is_empty() || ratios.iter().any(|r| !r.is_finite()) {
        return H1Verdict::Indeterminate;
    }
    if ratios.iter().all(|&r| r <= RHO) {
        return H1Verdict::Convergent;
    }
    if ratios.iter().all(|&r| (LOG_WINDOW.0..=LOG_WINDOW.1).contains(&r)) {
        return H1Verdict::DivergentLog;
    }
    if ratios.iter().all(|&r| r > LOG_WINDOW.1) {
        let logs: Vec<f64> = ratios.iter().map(|r| r.log2()).collect();
        let (lo, hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo <= POWER_SPREAD {
            return H1Verdict::DivergentPower { rate: logs.iter().sum::<f64>() / logs.len() as f64 };
        }
    }
    H1Verdict::Indeterminate
}

/// Annulus integrals of |∇z|² around `locus` and the resulting verdict.
pub fn h1_verdict<F, E>(
    z: &F,
    d: &Domain,
    locus: SingularLocus,
    r0: f64,
    opts: &H1Options,
) -> Result<RegularityReport, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(RegularityError::Radius(r0));
    }
    let n = opts.annuli.max(2);
    let radii: Vec<f64> = (0..=n).map(|k| r0 * 0.5f64.powi(k as i32)).collect();
    let q = QuadOpts { abs_tol: 1e-300, rel_tol: opts.rel_tol, max_intervals: opts.max_intervals };
    let integrals: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (r_out, r_in) = (radii[k], radii[k + 1]);
            let v = match locus {
                SingularLocus::Point(c) => polar_integral(z, d, c, r_in, r_out, &|_| true, q),
                SingularLocus::Segment(a, b) => tube_integral(z, d, a, b, r_in, r_out, q),
            };
            v.ok().filter(|x| x.is_finite() && *x >= 0.0)
        })
        .collect();
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in &integrals {
        acc += v.unwrap_or(0.0);
        cumulative.push(acc);
    }
    let tail = &integrals[n.saturating_sub(TAIL)..];
    let tail_ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) if a > 0.0 => b / a,
            _ => f64::NAN,
        })
        .collect();
    let verdict = classify_ratios(&tail_ratios);
    let rule = format!(
        "last {TAIL} of {n} annuli: CONVERGENT if every ratio ≤ {RHO}; DIVERGENT_LOG if every ratio in [{}, {}]; \
         DIVERGENT_POWER if every ratio > {} with log2 spread ≤ {POWER_SPREAD}; otherwise INDETERMINATE",
        LOG_WINDOW.0, LOG_WINDOW.1, LOG_WINDOW.1
    );
    Ok(RegularityReport { locus, radii, annulus_integrals: integrals, cumulative, tail_ratios, verdict, rule })
}

/// Precomputed z, ∇z at volume nodes and z, u·n at boundary nodes.
#[derive(Clone, Debug)]
pub struct GreenSamples {
    pub n: usize,
    /// (point, weight, z, ∇z, u)
    pub volume: Vec<(Point2, f64, f64, Vec2, Vec2)>,
    /// (point, ds, z, u·n)
    pub boundary: Vec<(Point2, f64, f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenResult {
    pub volume: f64,
    pub boundary: f64,
    pub residual: f64,
}

/// Volume nodes: `n` rows of exact chords, each split into cells of width about
/// bbox/n; boundary nodes: 4n midpoints spread by arc length.
pub fn green_samples<F, E>(z: &F, u: &VectorField2, d: &Domain, n: usize) -> Result<GreenSamples, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    let (lo, hi) = d.bbox();
    let dy = (hi.y - lo.y) / n as f64;
    let dx = (hi.x - lo.x) / n as f64;
    let h0 = 1e-5 * d.diameter();
    let mut nodes: Vec<(Point2, f64)> = Vec::new();
    for j in 0..n {
        let y = lo.y + (j as f64 + 0.5) * dy;
        for (x0, x1) in d.chords(y) {
            let m = ((x1 - x0) / dx).ceil().max(1.0) as usize;
            let w = (x1 - x0) / m as f64;
            for i in 0..m {
                nodes.push((Point2::new(x0 + (i as f64 + 0.5) * w, y), w * dy));
            }
        }
    }
    let volume = nodes
        .par_iter()
        .map(|&(p, w)| -> Result<_, String> {
            let h = h0.min(0.5 * d.distance_to_boundary(p));
            let zv = z(p).map_err(|e| e.to_string())?;
            let g = fd_grad(z, p, h).map_err(|e| e.to_string())?;
            let uv = u.eval(p).map_err(|e| e.to_string())?;
            Ok((p, w, zv, g, uv))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(RegularityError::Eval)?;

    let per = d.perimeter();
    let total = 4 * n;
    let mut bnodes: Vec<(Point2, Vec2, f64)> = Vec::new();
    for e in &d.edges {
        let m = ((total as f64 * e.length() / per).round() as usize).max(1);
        let ds = e.length() / m as f64;
        for i in 0..m {
            let s = (i as f64 + 0.5) / m as f64;
            bnodes.push((e.point(s), e.normal(s), ds));
        }
    }
    let nudge = 1e-9 * d.diameter();
    let boundary = bnodes
        .par_iter()
        .map(|&(p, nrm, ds)| -> Result<_, String> {
            let zv = z(p - nrm * nudge).map_err(|e| e.to_string())?;
            let un = u.eval(p).map_err(|e| e.to_string())?.dot(nrm);
            Ok((p, ds, zv, un))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(RegularityError::Eval)?;
    Ok(GreenSamples { n, volume, boundary })
}

/// |∫ z u·∇φ + ∫ φ u·∇z − ∮ z (u·n) φ| from precomputed samples.
pub fn green_residual_from(s: &GreenSamples, phi: &ScalarField) -> Result<GreenResult, RegularityError> {
    let vol: Vec<f64> = s
        .volume
        .iter()
        .map(|&(p, w, zv, g, uv)| Ok(w * (zv * uv.dot(phi.grad(p)?) + phi.eval(p)? * uv.dot(g))))
        .collect::<Result<_, EvalError>>()?;
    let bnd: Vec<f64> =
        s.boundary.iter().map(|&(p, ds, zv, un)| Ok(ds * zv * un * phi.eval(p)?)).collect::<Result<_, EvalError>>()?;
    let volume = pairwise_sum(&vol);
    let boundary = pairwise_sum(&bnd);
    Ok(GreenResult { volume, boundary, residual: (volume - boundary).abs() })
}

pub fn green_residual<F, E>(
    z: &F,
    phi: &ScalarField,
    u: &VectorField2,
    d: &Domain,
    n: usize,
) -> Result<GreenResult, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    green_residual_from(&green_samples(z, u, d, n)?, phi)
}

/// ∫ (W u·∇z) z from precomputed samples.
pub fn sign_value_from(s: &GreenSamples, w: f64) -> f64 {
    let v: Vec<f64> = s.volume.iter().map(|&(_, wt, zv, g, uv)| wt * w * uv.dot(g) * zv).collect();
    pairwise_sum(&v)
}

pub fn sign_inequality_check<F, E>(z: &F, u: &VectorField2, w: f64, d: &Domain, n: usize) -> Result<f64, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E> + Sync,
    E: fmt::Display,
{
    Ok(sign_value_from(&green_samples(z, u, d, n)?, w))
}

/// Assumed form of `z(p + δ·dir)` as δ → 0⁺.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expansion {
    /// Smooth in δ; quadratic extrapolation from δ = h, 2h, 3h.
    Smooth,
    /// Smooth in √δ, as next to a characteristic grazing the boundary;
    /// cubic extrapolation in √δ from δ = h, 4h, 9h, 16h.
    Sqrt,
}

/// Limit of `z` at `p` approached from `p + δ·dir`, δ → 0⁺.
pub fn one_sided_limit<F, E>(z: &F, p: Point2, dir: Vec2, h: f64, kind: Expansion) -> Result<f64, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E>,
    E: fmt::Display,
{
    let at = |k: f64| z(p + dir * (k * h)).map_err(|e| RegularityError::Eval(e.to_string()));
    let v = match kind {
        Expansion::Smooth => 3.0 * at(1.0)? - 3.0 * at(2.0)? + at(3.0)?,
        Expansion::Sqrt => 4.0 * at(1.0)? - 6.0 * at(4.0)? + 4.0 * at(9.0)? - at(16.0)?,
    };
    if !v.is_finite() {
        return Err(RegularityError::NonFinite(vec![p]));
    }
    Ok(v)
}

/// Jump of `z` across a curve through `p`: limit from the `-dir` side minus
/// limit from the `+dir` side, with the expansion assumed on each side.
pub fn jump_across<F, E>(
    z: &F,
    p: Point2,
    dir: Vec2,
    h: f64,
    kinds: (Expansion, Expansion),
) -> Result<f64, RegularityError>
where
    F: Fn(Point2) -> Result<f64, E>,
    E: fmt::Display,
{
    Ok(one_sided_limit(z, p, -dir, h, kinds.0)? - one_sided_limit(z, p, dir, h, kinds.1)?)
}
