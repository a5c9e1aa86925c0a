use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use transport_core::characteristics::{solve_at_tol, solve_grid, trace_backward, TransportProblem};
use transport_core::classify::{check_hypotheses, classify_boundary, exceptional_points};
use transport_core::expr::{parse, Expr, SharedFn, UnOp, Var};
use transport_core::geometry::Domain;
use transport_core::localize::*;
use transport_core::oracles::{example, ExampleSpec};
use transport_core::regularity::{green_residual, h1_verdict, H1Options, H1Verdict, SingularLocus};
use transport_core::{Exit, Label, Point2, ScalarField, TraceOptions, Vec2, VectorField2};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(20_26), failure_persistence: None, max_global_rejects: 8192, ..ProptestConfig::default() }
}

fn problem(ex: &ExampleSpec) -> TransportProblem {
    let p = &ex.problem;
    TransportProblem::new(p.domain.clone(), p.u.clone(), p.l.clone(), p.w).unwrap()
}

fn unit_square() -> Domain {
    use transport_core::Edge;
    let c = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
    Domain::new((0..4).map(|i| Edge::segment(c[i], c[(i + 1) % 4])).collect()).unwrap()
}

/// Maps a point of the unit square into the bounding box of `d`.
fn in_bbox(d: &Domain, s: f64, t: f64) -> Point2 {
    let (lo, hi) = d.bbox();
    Point2::new(lo.x + s * (hi.x - lo.x), lo.y + t * (hi.y - lo.y))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---- expr ----

fn arb_expr(smooth: bool) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![Just(Expr::x()), Just(Expr::y()), (-4.0f64..4.0).prop_map(Expr::c)];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        let base = prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), 0u8..4).prop_map(|(a, k)| Expr::pow(a, Expr::c(k as f64))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::unary(UnOp::Sin, a)),
            inner.clone().prop_map(|a| Expr::unary(UnOp::Cos, a)),
            inner.clone().prop_map(|a| Expr::unary(UnOp::Arctan, a)),
        ];
        if smooth {
            base.boxed()
        } else {
            prop_oneof![
                4 => base,
                1 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
                1 => inner.clone().prop_map(|a| Expr::unary(UnOp::Sqrt, a)),
                1 => inner.clone().prop_map(|a| Expr::unary(UnOp::Ln, a)),
                1 => inner.prop_map(|a| Expr::unary(UnOp::Abs, a)),
            ]
            .boxed()
        }
    })
    .boxed()
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn printed_expressions_parse_back(e in arb_expr(false), pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4)) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), parse(&back.to_string()).unwrap().to_string());
        for (x, y) in pts {
            match (e.eval_xy(x, y), back.eval_xy(x, y)) {
                (Ok(a), Ok(b)) => prop_assert!(close(a, b, 1e-12), "{} at ({}, {}): {} vs {}", text, x, y, a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{} at ({}, {}): {:?} vs {:?}", text, x, y, a, b),
            }
        }
    }

    #[test]
    fn derivatives_match_differences(e in arb_expr(true), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let h = 1e-3;
        // five-point stencil
        let fd = |f: &dyn Fn(f64) -> f64| (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
        let scale = (-2..=2)
            .flat_map(|i| (-2..=2).map(move |j| (i, j)))
            .map(|(i, j)| e.eval_xy(x + i as f64 * h, y + j as f64 * h).unwrap().abs())
            .fold(1.0f64, f64::max);
        for v in [Var::X, Var::Y] {
            let d = e.diff(v).eval_xy(x, y).unwrap();
            let num = match v {
                Var::X => fd(&|t| e.eval_xy(x + t, y).unwrap()),
                Var::Y => fd(&|t| e.eval_xy(x, y + t).unwrap()),
            };
            prop_assert!((d - num).abs() <= 1e-6 * (scale + d.abs()), "{} d{:?} at ({}, {}): {} vs {}", e, v, x, y, d, num);
        }
    }
}

// ---- geometry ----

/// Winding number of the boundary sampled as a fine polyline.
fn polyline_inside(d: &Domain, p: Point2) -> bool {
    let mut pts = Vec::new();
    for e in &d.edges {
        for k in 0..4096 {
            pts.push(e.point(k as f64 / 4096.0));
        }
    }
    let mut inside = false;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        if (a.y > p.y) != (b.y > p.y) {
            let xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn normals_are_unit_and_orthogonal(n in 1usize..=7, pick in 0usize..16, s in 0.0f64..=1.0) {
        let ex = example(n).unwrap();
        let d = &ex.problem.domain;
        let e = &d.edges[pick % d.edges.len()];
        let (nv, tv) = (e.normal(s), e.tangent(s));
        prop_assert!((nv.norm() - 1.0).abs() < 1e-12);
        prop_assert!((tv.norm() - 1.0).abs() < 1e-12);
        prop_assert!(nv.dot(tv).abs() < 1e-12);
        if (0.05..0.95).contains(&s) {
            let p = e.point(s);
            let step = 1e-6 * d.diameter();
            prop_assert!(!d.inside(p + nv * step));
            prop_assert!(d.inside(p - nv * step));
        }
    }

    #[test]
    fn inside_agrees_with_polyline_crossings(n in 1usize..=7, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let ex = example(n).unwrap();
        let d = &ex.problem.domain;
        let p = in_bbox(d, s, t);
        prop_assume!(d.distance_to_boundary(p) > 1e-6 * d.diameter());
        prop_assert_eq!(d.inside(p), polyline_inside(d, p), "example {} at {:?}", n, p);
    }
}

#[test]
fn gamma_minus_pieces_are_separated() {
    for n in 1..=7 {
        let ex = example(n).unwrap();
        let p = &ex.problem;
        let c = classify_boundary(&p.domain, &p.u, p.w).unwrap();
        let dec = decompose_gamma_minus(&c, &p.domain).unwrap();
        assert!(dec.mu0 > 0.0, "example {n}");
    }
}

// ---- classify ----

fn scaled(u: &VectorField2, c: f64) -> VectorField2 {
    let f = |s: &ScalarField| ScalarField::new(Expr::mul(Expr::c(c), s.value.clone()));
    VectorField2::new(f(&u.u1), f(&u.u2), &[]).unwrap()
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn flipping_w_swaps_labels(n in 1usize..=7, w in 0.1f64..10.0) {
        let ex = example(n).unwrap();
        let p = &ex.problem;
        let a = classify_boundary(&p.domain, &p.u, w).unwrap();
        let b = classify_boundary(&p.domain, &p.u, -w).unwrap();
        let swap = |l: Label| match l {
            Label::Minus => Label::Plus,
            Label::Plus => Label::Minus,
            Label::Zero => Label::Zero,
        };
        for (ea, eb) in a.edges.iter().zip(&b.edges) {
            prop_assert_eq!(ea.intervals.len(), eb.intervals.len());
            for (ia, ib) in ea.intervals.iter().zip(&eb.intervals) {
                prop_assert_eq!(swap(ia.label), ib.label);
                prop_assert!((ia.s0 - ib.s0).abs() < 1e-12 && (ia.s1 - ib.s1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_the_field_keeps_the_structure(n in 1usize..=7, c in 0.1f64..10.0) {
        let ex = example(n).unwrap();
        let p = &ex.problem;
        let v = scaled(&p.u, c);
        let a = classify_boundary(&p.domain, &p.u, p.w).unwrap();
        let b = classify_boundary(&p.domain, &v, p.w).unwrap();
        for (ea, eb) in a.edges.iter().zip(&b.edges) {
            prop_assert_eq!(ea.intervals.len(), eb.intervals.len());
            for (ia, ib) in ea.intervals.iter().zip(&eb.intervals) {
                prop_assert_eq!(ia.label, ib.label);
                prop_assert!((ia.s0 - ib.s0).abs() < 1e-9 && (ia.s1 - ib.s1).abs() < 1e-9);
            }
        }
        let ea = exceptional_points(&a, &p.domain, &p.u).unwrap();
        let eb = exceptional_points(&b, &p.domain, &v).unwrap();
        prop_assert_eq!(ea.points.len(), eb.points.len());
        for (qa, qb) in ea.points.iter().zip(&eb.points) {
            prop_assert!(qa.m.dist(qb.m) < 1e-9);
        }
        let ra = check_hypotheses(&p.domain, &p.u, p.w, &ea).unwrap();
        let rb = check_hypotheses(&p.domain, &v, p.w, &eb).unwrap();
        prop_assert_eq!(ra.boundary_verdict, rb.boundary_verdict);
        prop_assert_eq!(ra.interior_nonvanishing, rb.interior_nonvanishing);
        prop_assert_eq!(ra.cun_holds, rb.cun_holds);
        let flags = |r: &transport_core::AssumptionReport| -> Vec<(bool, bool)> {
            r.points.iter().map(|q| (q.simple_root, q.tangent_negative)).collect()
        };
        prop_assert_eq!(flags(&ra), flags(&rb));
    }
}

// ---- characteristics ----

fn interior_point(ex: &ExampleSpec, s: f64, t: f64) -> Option<Point2> {
    let d = &ex.problem.domain;
    let p = in_bbox(d, s, t);
    (d.inside(p) && d.distance_to_boundary(p) > 1e-6).then_some(p)
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn traces_are_deterministic(n in 1usize..=7, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let ex = example(n).unwrap();
        let p = interior_point(&ex, s, t);
        prop_assume!(p.is_some());
        let tp = problem(&ex);
        let opts = TraceOptions::with_tol(1e-10);
        let a = trace_backward(&tp, p.unwrap(), &opts);
        let b = trace_backward(&tp, p.unwrap(), &opts);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
                prop_assert_eq!(a.exit, b.exit);
                prop_assert_eq!(a.steps, b.steps);
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn solution_is_linear_in_the_source(s in 0.0f64..1.0, t in 0.0f64..1.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let ex = example(3).unwrap();
        let p = interior_point(&ex, s, t);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let tp = problem(&ex);
        let l1: SharedFn = Arc::new(ScalarField::parse("1").unwrap());
        let l2: SharedFn = Arc::new(ScalarField::parse("x*y + cos(x)").unwrap());
        let mix: SharedFn = Arc::new(ScalarField::parse(&format!("{a} * 1 + ({b}) * (x*y + cos(x))")).unwrap());
        let z = |l: &SharedFn| solve_at_tol(&tp.with_rhs(l.clone()), p, 1e-11).unwrap();
        let lhs = z(&mix);
        let rhs = a * z(&l1) + b * z(&l2);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + a.abs() + b.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn inflow_exits_see_inflow(n in 1usize..=7, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let ex = example(n).unwrap();
        let p = interior_point(&ex, s, t);
        prop_assume!(p.is_some());
        let tp = problem(&ex);
        if let Ok(r) = trace_backward(&tp, p.unwrap(), &TraceOptions::with_tol(1e-10)) {
            if let Exit::HitGammaMinus { point, .. } = r.exit {
                let hit = tp.domain.nearest_boundary(point);
                let n_out = tp.domain.edges[hit.edge].normal(hit.s);
                let flux = tp.w * tp.u.eval(point).unwrap().dot(n_out);
                prop_assert!(flux < -1e-10, "exit {:?} flux {}", point, flux);
            }
        }
    }
}

#[test]
fn grid_does_not_depend_on_thread_count() {
    let ex = example(4).unwrap();
    let tp = problem(&ex);
    let opts = TraceOptions::with_tol(1e-10);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| solve_grid(&tp, 24, 17, &opts))
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.len(), b.len());
    for (ga, gb) in a.iter().zip(&b) {
        assert_eq!(ga.z.map(f64::to_bits), gb.z.map(f64::to_bits));
        assert_eq!(ga.status, gb.status);
    }
}

// ---- localize ----

struct Local {
    frame: LocalFrame,
    consts: LocalConstants,
    dec: GammaDecomposition,
}

fn local(n: usize) -> Local {
    let ex = example(n).unwrap();
    let p = &ex.problem;
    let c = classify_boundary(&p.domain, &p.u, p.w).unwrap();
    let e = exceptional_points(&c, &p.domain, &p.u).unwrap();
    let dec = decompose_gamma_minus(&c, &p.domain).unwrap();
    let frame = build_local_frame(&e.points[0], &p.domain, &p.u, p.w).unwrap();
    let consts = compute_constants(&frame, dec.mu0).unwrap();
    Local { frame, consts, dec }
}

fn frames() -> &'static [Local; 2] {
    static CELL: std::sync::OnceLock<[Local; 2]> = std::sync::OnceLock::new();
    CELL.get_or_init(|| [local(3), local(6)])
}

/// Local point with x ≥ 0 and |q| ≤ r from polar coordinates.
fn half_ball_point(r: f64, rho: f64, phi: f64) -> Point2 {
    Vec2::from_angle(phi) * (r * rho)
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn profile_is_a_monotone_step(s in -0.5f64..1.5, t in -0.5f64..1.5) {
        let (a, b) = (psi(s.min(t)), psi(s.max(t)));
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a >= b);
        prop_assert!((psi(s) + psi(1.0 - s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn theta_plateau_and_support(which in 0usize..2, frac in 0.01f64..1.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let lc = &frames()[which];
        let d = &lc.frame.domain;
        let p = in_bbox(d, s, t);
        prop_assume!(d.inside(p));
        let mu = frac * lc.dec.mu_max().min(d.diameter());
        for j in 0..lc.dec.len() {
            let dist = lc.dec.distance(j, p);
            let th = lc.dec.theta(j, mu, p);
            prop_assert!((0.0..=1.0).contains(&th));
            if dist <= 0.5 * mu {
                prop_assert_eq!(th, 1.0);
            }
            if dist >= mu {
                prop_assert_eq!(th, 0.0);
            }
        }
    }

    #[test]
    fn lambda_plateau_and_support(which in 0usize..2, frac in 0.01f64..1.0, x in 0.0f64..1.0, y in -1.0f64..1.0) {
        let lc = &frames()[which];
        let mu = frac * lc.consts.r1;
        let q = Point2::new(x, y) * lc.consts.k;
        let lam = lambda_cutoff(&lc.frame, mu, q);
        let k = lc.frame.k_form(q);
        prop_assert!((0.0..=1.0).contains(&lam));
        if k <= mu {
            prop_assert_eq!(lam, 1.0);
        }
        if k >= 2.0 * mu {
            prop_assert_eq!(lam, 0.0);
        }
    }

    #[test]
    fn split_reproduces_the_source(which in 0usize..2, frac in 0.01f64..1.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let lc = &frames()[which];
        let d = &lc.frame.domain;
        let p = in_bbox(d, s, t);
        prop_assume!(d.inside(p));
        let l: SharedFn = Arc::new(ScalarField::parse("1 + x*y - y^2").unwrap());
        let mu = frac * lc.dec.mu_max().min(d.diameter());
        let sp = split_rhs(l.clone(), &lc.dec, mu).unwrap();
        let sum = sp.l_mu.at(p).unwrap() + sp.parts.iter().map(|f| f.at(p).unwrap()).sum::<f64>();
        prop_assert!((sum - l.at(p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn transverse_component_is_negative(which in 0usize..2, rho in 0.0f64..=1.0, phi in -1.5707963267948966f64..=1.5707963267948966) {
        let lc = &frames()[which];
        let q = half_ball_point(lc.consts.mu2, rho, phi);
        prop_assume!(lc.frame.domain.locate(lc.frame.to_global(q)).in_closure());
        prop_assert!(lc.frame.u2(q.x, q.y).unwrap() < 0.0);
    }

    #[test]
    fn x_map_is_increasing_in_x(which in 0usize..2, a in 0.0f64..0.7, b in 0.0f64..0.7, y in -0.2f64..0.7) {
        let lc = &frames()[which];
        let r = lc.consts.mu2;
        let (x0, x1) = (a.min(b) * r, a.max(b) * r);
        let y = y * r;
        prop_assume!(x1 - x0 > 1e-9 * r && x1 * x1 + y * y <= r * r);
        let inside = |x: f64| lc.frame.domain.locate(lc.frame.to_global(Point2::new(x, y))).in_closure();
        prop_assume!(inside(x0) && inside(x1));
        prop_assert!(lc.frame.x_map(x0, y).unwrap() < lc.frame.x_map(x1, y).unwrap());
    }

    #[test]
    fn inclusion_chain(which in 0usize..2, frac in 1e-6f64..=1.0, rho in 0.0f64..=1.0, phi in -3.2f64..3.2, bx in -1.0f64..1.0, by in -1.0f64..1.0) {
        let f = &frames()[which].frame;
        let r = frac * f.u20 * f.u20 / f.a;
        let q = Vec2::from_angle(phi) * (rho * r / f.u20.abs());
        prop_assert!(f.k_form(q) <= r * (1.0 + 1e-12));
        let q = Point2::new(bx * r / f.u20.abs(), by * (2.0 * r / f.a).sqrt());
        if f.k_form(q) <= r {
            prop_assert!(q.norm() <= 2.0 * (r / f.a).sqrt());
        }
    }
}

// ---- regularity ----

proptest! {
    #![proptest_config(cfg(6))]

    #[test]
    fn smooth_solution_converges(s in 0.3f64..0.7, t in 0.3f64..0.7) {
        let d = unit_square();
        let z = |p: Point2| Ok::<f64, String>(p.x * p.x * p.y);
        let r = h1_verdict(&z, &d, SingularLocus::Point(Point2::new(s, t)), 0.25, &H1Options::default()).unwrap();
        prop_assert_eq!(r.verdict, H1Verdict::Convergent);
        for q in &r.tail_ratios {
            prop_assert!((0.2..0.3).contains(q), "{:?}", r.tail_ratios);
        }
    }

    #[test]
    fn green_residual_shrinks(n in prop::sample::select(vec![1usize, 3, 6]), c in prop::collection::vec(-2.0f64..2.0, 3)) {
        let ex = example(n).unwrap();
        let z = |p: Point2| Ok::<f64, String>(p.x * p.x * p.y + (p.x - p.y).sin());
        let phi = ScalarField::parse(&format!("({}) + ({})*x*y + ({})*y^2", c[0], c[1], c[2])).unwrap();
        let (u, d) = (&ex.problem.u, &ex.problem.domain);
        let a = green_residual(&z, &phi, u, d, 16).unwrap().residual;
        let b = green_residual(&z, &phi, u, d, 32).unwrap().residual;
        prop_assert!(b <= 0.6 * a + 1e-10, "{} -> {}", a, b);
    }
}

// ---- oracles ----

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn closed_forms_vanish_on_inflow(n in prop::sample::select(vec![1usize, 2, 3, 4, 5, 6, 7]), pick in 0usize..16, s in 0.0f64..=1.0) {
        let ex = example(n).unwrap();
        let minus: Vec<(usize, f64, f64)> = ex
            .expected_labels
            .iter()
            .enumerate()
            .flat_map(|(e, ivs)| ivs.iter().filter(|iv| iv.2 == Label::Minus).map(move |iv| (e, iv.0, iv.1)))
            .collect();
        let (e, s0, s1) = minus[pick % minus.len()];
        let p = ex.problem.domain.edges[e].point(s0 + s * (s1 - s0));
        let z = ex.z(p).unwrap();
        prop_assert!(z.abs() <= 1e-9, "example {} at {:?}: {}", n, p, z);
    }

    #[test]
    fn closed_forms_are_continuous(n in prop::sample::select(vec![3usize, 4, 6, 7]), s in 0.0f64..1.0, t in 0.0f64..1.0, phi in 0.0f64..6.28) {
        let ex = example(n).unwrap();
        let p = interior_point(&ex, s, t);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        prop_assume!(ex.singular_distance(p) > 1e-2 && ex.problem.domain.distance_to_boundary(p) > 1e-3);
        let q = p + Vec2::from_angle(phi) * 1e-8;
        prop_assert!((ex.z(p).unwrap() - ex.z(q).unwrap()).abs() <= 1e-5);
    }
}
