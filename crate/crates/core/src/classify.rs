//! Sign decomposition of `W u·n` along the boundary, the exceptional set, and
//! the hypothesis checks.

use std::fmt;

use thiserror::Error;

use crate::expr::{EvalError, VectorField2};
use crate::geometry::{Domain, Edge};
use crate::num::roots;
use crate::{Point2, Vec2};

/// Samples per edge for sign detection.
pub const SAMPLES_PER_EDGE: usize = 2048;
/// |u·n| at or below this counts as zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Parameter tolerance for root location.
pub const PARAM_TOL: f64 = 1e-12;
/// Sign-change budget per edge.
pub const MAX_SIGN_CHANGES: usize = 64;
/// Tangential derivative below this marks a multiple root.
pub const SIMPLE_ROOT_TOL: f64 = 1e-8;
/// `u·τ₋` must be below minus this value.
pub const TANGENT_TOL: f64 = 1e-10;

/// Hypotheses are sufficient conditions; failing them says nothing about ill-posedness.
pub const SUFFICIENCY_NOTE: &str = "hypotheses are sufficient, not necessary: a negative or \
INCONCLUSIVE verdict does not mean the problem is ill-posed (u=(x,-y) with W=1 violates the \
gradient bound yet the problem has a solution)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("W must be nonzero")]
    ZeroW,
    #[error("pathological field: u·n changes sign {count} times on edge {edge}")]
    Pathological { edge: usize, count: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// `W u·n < 0`: inflow, part of Γ⁻.
    Minus,
    /// `u·n ≡ 0`: part of Γ⁰.
    Zero,
    /// `W u·n > 0`: part of Γ⁺.
    Plus,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Minus => "MINUS",
            Label::Zero => "ZERO",
            Label::Plus => "PLUS",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub s0: f64,
    pub s1: f64,
    pub label: Label,
}

/// Isolated zero of `u·n` on an edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub s: f64,
    pub point: Point2,
    /// d(u·n)/dσ along the traversal direction.
    pub slope: f64,
    pub multiple: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeClassification {
    pub intervals: Vec<Interval>,
    pub roots: Vec<Root>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryClassification {
    pub w: f64,
    pub edges: Vec<EdgeClassification>,
}

/// Maximal connected piece of Γ⁻, as consecutive (edge, s0, s1) parts in traversal order.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRun {
    pub parts: Vec<(usize, f64, f64)>,
    pub closed: bool,
}

impl BoundaryClassification {
    /// Label of the interval containing `s` on edge `edge`.
    pub fn label_at(&self, edge: usize, s: f64) -> Label {
        let iv = &self.edges[edge].intervals;
        iv.iter().find(|i| s >= i.s0 && s <= i.s1).or(iv.last()).map(|i| i.label).unwrap_or(Label::Zero)
    }

    /// All MINUS intervals grouped into connected components.
    pub fn gamma_minus_runs(&self) -> Vec<GammaRun> {
        let n = self.edges.len();
        let parts: Vec<(usize, f64, f64)> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(e, c)| {
                c.intervals.iter().filter(|i| i.label == Label::Minus).map(move |i| (e, i.s0, i.s1))
            })
            .collect();
        if parts.is_empty() {
            return Vec::new();
        }
        let joins = |a: &(usize, f64, f64), b: &(usize, f64, f64)| {
            a.2 >= 1.0 - PARAM_TOL && b.1 <= PARAM_TOL && b.0 == (a.0 + 1) % n
        };
        let m = parts.len();
        let start = (0..m).find(|&k| !joins(&parts[(k + m - 1) % m], &parts[k]));
        let Some(start) = start else {
            return vec![GammaRun { parts, closed: true }];
        };
        let mut runs: Vec<GammaRun> = Vec::new();
        for off in 0..m {
            let k = (start + off) % m;
            let prev = (k + m - 1) % m;
            if off > 0 && joins(&parts[prev], &parts[k]) {
                runs.last_mut().expect("run started").parts.push(parts[k]);
            } else {
                runs.push(GammaRun { parts: vec![parts[k]], closed: false });
            }
        }
        runs
    }

    /// Edge/parameter pairs delimiting Γ⁻ components (the endpoints of ∂Γ⁻).
    pub fn gamma_minus_endpoints(&self, d: &Domain) -> Vec<Point2> {
        self.gamma_minus_runs()
            .iter()
            .filter(|r| !r.closed)
            .flat_map(|r| {
                let first = r.parts[0];
                let last = *r.parts.last().expect("nonempty run");
                [d.edges[first.0].point(first.1), d.edges[last.0].point(last.2)]
            })
            .collect()
    }
}

fn u_dot_n(u: &VectorField2, e: &Edge, s: f64) -> Result<f64, EvalError> {
    Ok(u.eval(e.point(s))?.dot(e.normal(s)))
}

/// d(u·n)/dσ along the traversal direction, including the curvature term on arcs.
pub fn normal_flux_slope(u: &VectorField2, e: &Edge, s: f64) -> Result<f64, EvalError> {
    let p = e.point(s);
    let (t, n) = (e.tangent(s), e.normal(s));
    Ok(u.derivative_along(p, t)?.dot(n) + u.eval(p)?.dot(e.normal_rate(s)))
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn classify_edge(
    u: &VectorField2,
    w: f64,
    e: &Edge,
    index: usize,
) -> Result<EdgeClassification, ClassifyError> {
    let n = SAMPLES_PER_EDGE;
    let f = |s: f64| u_dot_n(u, e, s);
    let ss: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let vals: Vec<f64> = ss.iter().map(|&s| f(s)).collect::<Result<_, _>>()?;
    let is_zero = |v: f64| v.abs() <= ZERO_TOL;
    let zero_pred = |s: f64| f(s).map(|v| v.abs() <= ZERO_TOL);

    let mut root_params: Vec<f64> = Vec::new();
    let mut zero_ranges: Vec<(f64, f64)> = Vec::new();
    let mut changes = 0usize;
    let mut i = 0;
    while i <= n {
        if is_zero(vals[i]) {
            let mut j = i;
            while j < n && is_zero(vals[j + 1]) {
                j += 1;
            }
            let mut handled = false;
            if j > i {
                let a = if i == 0 { 0.0 } else { roots::bisect_predicate(zero_pred, ss[i], ss[i - 1], PARAM_TOL)? };
                let b = if j == n { 1.0 } else { roots::bisect_predicate(zero_pred, ss[j], ss[j + 1], PARAM_TOL)? };
                let all_zero = (1..=100)
                    .map(|k| a + (b - a) * k as f64 / 101.0)
                    .try_fold(true, |acc, s| f(s).map(|v| acc && is_zero(v)))?;
                if all_zero {
                    zero_ranges.push((a, b));
                    handled = true;
                }
            }
            if !handled {
                let (lo, hi) = (i.saturating_sub(1), (j + 1).min(n));
                let s = if i == 0 && j == 0 {
                    0.0
                } else if i == n {
                    1.0
                } else if sign_of(vals[lo]) * sign_of(vals[hi]) < 0 {
                    changes += 1;
                    roots::bisect(f, ss[lo], ss[hi], PARAM_TOL).map_err(root_err)?
                } else {
                    roots::golden_min(|s| f(s).map(f64::abs), ss[lo], ss[hi], PARAM_TOL)?
                };
                root_params.push(s);
            }
            i = j + 1;
        } else {
            if i < n && !is_zero(vals[i + 1]) && sign_of(vals[i]) != sign_of(vals[i + 1]) {
                changes += 1;
                let s = roots::bisect_signed(f, ss[i], ss[i + 1], vals[i], PARAM_TOL).map_err(root_err)?;
                root_params.push(s);
            }
            i += 1;
        }
    }
    if changes > MAX_SIGN_CHANGES {
        return Err(ClassifyError::Pathological { edge: index, count: changes });
    }

    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    cuts.extend(root_params.iter().copied());
    for &(a, b) in &zero_ranges {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= PARAM_TOL);

    let mut intervals: Vec<Interval> = Vec::new();
    for c in cuts.windows(2) {
        let (s0, s1) = (c[0], c[1]);
        if s1 - s0 <= PARAM_TOL {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let label = if zero_ranges.iter().any(|&(a, b)| mid > a && mid < b) {
            Label::Zero
        } else {
            let mut best = 0.0f64;
            for k in 1..=7 {
                let v = f(s0 + (s1 - s0) * k as f64 / 8.0)?;
                if v.abs() > best.abs() {
                    best = v;
                }
            }
            if is_zero(best) {
                Label::Zero
            } else if w * best < 0.0 {
                Label::Minus
            } else {
                Label::Plus
            }
        };
        match intervals.last_mut() {
            Some(last) if last.label == label => last.s1 = s1,
            _ => intervals.push(Interval { s0, s1, label }),
        }
    }

    let roots = root_params
        .into_iter()
        .map(|s| {
            let slope = normal_flux_slope(u, e, s)?;
            Ok(Root { s, point: e.point(s), slope, multiple: slope.abs() < SIMPLE_ROOT_TOL })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(EdgeClassification { intervals, roots })
}

fn root_err(e: roots::RootError<EvalError>) -> ClassifyError {
    match e {
        roots::RootError::Eval(e) => ClassifyError::Eval(e),
        roots::RootError::NotBracketed { .. } => unreachable!("sign change verified before bisection"),
    }
}

/// Splits every edge into MINUS / ZERO / PLUS parameter intervals.
pub fn classify_boundary(d: &Domain, u: &VectorField2, w: f64) -> Result<BoundaryClassification, ClassifyError> {
    if w == 0.0 || !w.is_finite() {
        return Err(ClassifyError::ZeroW);
    }
    let edges = d
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| classify_edge(u, w, e, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundaryClassification { w, edges })
}

/// Endpoint of a Γ⁻ component at which `u·n₋` vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalPoint {
    pub m: Point2,
    pub edge_index: usize,
    pub s: f64,
    /// The closed Γ⁻ part ending at `m`.
    pub on_edge: Edge,
    pub is_vertex: bool,
    pub normal: Vec2,
    pub tau: Vec2,
    /// Derivative of `u·n₋` along `τ₋`.
    pub du_dtau_dot_n: f64,
    pub u_dot_tau: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalSet {
    pub points: Vec<ExceptionalPoint>,
    /// Zeros of `u·n` inside Γ⁻ components, violating the interior non-vanishing hypothesis.
    pub interior_roots: Vec<Point2>,
    pub runs: Vec<GammaRun>,
}

impl ExceptionalSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Collects the exceptional set E and the interior zeros of `u·n` on Γ⁻.
pub fn exceptional_points(
    c: &BoundaryClassification,
    d: &Domain,
    u: &VectorField2,
) -> Result<ExceptionalSet, EvalError> {
    let runs = c.gamma_minus_runs();
    let mut points = Vec::new();
    let mut interior_roots = Vec::new();
    for run in &runs {
        for &(e, s0, s1) in &run.parts {
            for r in &c.edges[e].roots {
                if r.s > s0 + PARAM_TOL && r.s < s1 - PARAM_TOL {
                    interior_roots.push(r.point);
                }
            }
        }
        for w in run.parts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let va = u_dot_n(u, &d.edges[a.0], 1.0)?;
            let vb = u_dot_n(u, &d.edges[b.0], 0.0)?;
            if va.abs() <= ZERO_TOL || vb.abs() <= ZERO_TOL {
                interior_roots.push(d.edges[b.0].start());
            }
        }
        if run.closed {
            continue;
        }
        let first = run.parts[0];
        let last = *run.parts.last().expect("nonempty run");
        for (part, at_start) in [(first, true), (last, false)] {
            let (e, s0, s1) = part;
            let edge = &d.edges[e];
            let s = if at_start { s0 } else { s1 };
            let m = edge.point(s);
            let normal = edge.normal(s);
            let un = u.eval(m)?.dot(normal);
            if un.abs() > ZERO_TOL {
                continue;
            }
            let dir = if at_start { 1.0 } else { -1.0 };
            let tau = edge.tangent(s) * dir;
            points.push(ExceptionalPoint {
                m,
                edge_index: e,
                s,
                on_edge: edge.sub(s0, s1),
                is_vertex: s <= PARAM_TOL || s >= 1.0 - PARAM_TOL,
                normal,
                tau,
                du_dtau_dot_n: dir * normal_flux_slope(u, edge, s)?,
                u_dot_tau: u.eval(m)?.dot(tau),
            });
        }
    }
    Ok(ExceptionalSet { points, interior_roots, runs })
}

/// Entrywise max of |∇u| over a 256×256 bounding-box lattice (inside points) plus
/// 256 samples per edge.
pub fn grad_sup_norm(u: &VectorField2, d: &Domain) -> Result<f64, EvalError> {
    grad_sup_norm_n(u, d, 256)
}

pub fn grad_sup_norm_n(u: &VectorField2, d: &Domain, n: usize) -> Result<f64, EvalError> {
    let (lo, hi) = d.bbox();
    let entry_max = |p: Point2| -> Result<f64, EvalError> {
        let j = u.jacobian(p)?;
        Ok(j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())))
    };
    let mut best = 0.0f64;
    for jy in 0..n {
        for ix in 0..n {
            let p = Point2::new(
                lo.x + (hi.x - lo.x) * ix as f64 / (n - 1) as f64,
                lo.y + (hi.y - lo.y) * jy as f64 / (n - 1) as f64,
            );
            if d.inside(p) {
                best = best.max(entry_max(p)?);
            }
        }
    }
    for e in &d.edges {
        for k in 0..n {
            best = best.max(entry_max(e.point(k as f64 / (n - 1) as f64))?);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Hypotheses of the Γ⁻-nondegenerate existence/uniqueness result hold.
    Theorem22,
    /// Hypotheses of the H¹ result with exceptional endpoints hold.
    Theorem31,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Theorem22 => "THEOREM_2_2",
            Verdict::Theorem31 => "THEOREM_3_1",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradBound {
    pub holds: bool,
    pub sup_norm: f64,
    pub threshold: f64,
}

/// Checks at one point of E.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCheck {
    pub m: Point2,
    pub is_vertex: bool,
    pub du_dtau_dot_n: f64,
    pub u_dot_tau: f64,
    pub simple_root: bool,
    pub tangent_negative: bool,
}

impl PointCheck {
    pub fn passes(&self) -> bool {
        self.simple_root && self.tangent_negative
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub grad_bound: GradBound,
    /// No zero of `u·n` inside Γ⁻.
    pub interior_nonvanishing: bool,
    /// `u·n₋ ≠ 0` on the closure of Γ⁻.
    pub cun_holds: bool,
    pub points: Vec<PointCheck>,
    pub polygon: bool,
    pub convex: bool,
    /// Verdict from the boundary conditions alone (inflow sign structure and E).
    pub boundary_verdict: Verdict,
    /// Verdict requiring every stated hypothesis, the gradient bound included.
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub warnings: Vec<String>,
    pub note: &'static str,
}

/// Point format used in report reasons.
pub fn fmt_pt(p: Point2) -> String {
    format!("({:.6}, {:.6})", p.x, p.y)
}

/// Evaluates every hypothesis and derives both verdicts.
pub fn check_hypotheses(
    d: &Domain,
    u: &VectorField2,
    w: f64,
    e: &ExceptionalSet,
) -> Result<AssumptionReport, EvalError> {
    let sup_norm = grad_sup_norm(u, d)?;
    let threshold = 1.0 / (2.0 * w.abs());
    let grad_bound = GradBound { holds: sup_norm <= threshold, sup_norm, threshold };
    let interior_nonvanishing = e.interior_roots.is_empty();
    let cun_holds = interior_nonvanishing && e.points.is_empty();
    let points: Vec<PointCheck> = e
        .points
        .iter()
        .map(|p| PointCheck {
            m: p.m,
            is_vertex: p.is_vertex,
            du_dtau_dot_n: p.du_dtau_dot_n,
            u_dot_tau: p.u_dot_tau,
            simple_root: p.du_dtau_dot_n.abs() > SIMPLE_ROOT_TOL,
            tangent_negative: p.u_dot_tau < -TANGENT_TOL,
        })
        .collect();
    let mut reasons = Vec::new();
    let mut warnings = Vec::new();
    for r in &e.interior_roots {
        reasons.push(format!("u·n vanishes inside Γ⁻ at {}", fmt_pt(*r)));
    }
    for pc in &points {
        if !pc.simple_root {
            reasons.push(format!(
                "double root at {}: ∂(u·n₋)/∂τ₋ = {:e}",
                fmt_pt(pc.m),
                pc.du_dtau_dot_n
            ));
        }
        if !pc.tangent_negative {
            reasons.push(format!("u·τ_- > 0 at {} (u·τ_- = {:.6})", fmt_pt(pc.m), pc.u_dot_tau));
        }
    }
    let boundary_verdict = if cun_holds {
        Verdict::Theorem22
    } else if interior_nonvanishing && points.iter().all(PointCheck::passes) {
        Verdict::Theorem31
    } else {
        Verdict::Inconclusive
    };
    let polygon = d.is_polygon();
    let convex = d.is_convex();
    if !grad_bound.holds {
        reasons.push(format!(
            "gradient bound fails: ‖∇u‖∞ = {} exceeds 1/(2|W|) = {}",
            grad_bound.sup_norm, grad_bound.threshold
        ));
    }
    if !polygon {
        reasons.push("domain has curved edges; the theorems are stated for polygons".into());
    }
    if !convex {
        warnings.push("domain is not convex; the theorems assume a convex polygon".into());
    }
    let verdict = if grad_bound.holds && polygon { boundary_verdict } else { Verdict::Inconclusive };
    Ok(AssumptionReport {
        grad_bound,
        interior_nonvanishing,
        cun_holds,
        points,
        polygon,
        convex,
        boundary_verdict,
        verdict,
        reasons,
        warnings,
        note: SUFFICIENCY_NOTE,
    })
}
