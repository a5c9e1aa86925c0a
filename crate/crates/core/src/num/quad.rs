//! Adaptive Gauss–Kronrod (7/15) quadrature.

use std::convert::Infallible;

use super::{lit, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
    pub converged: bool,
}

/// Tolerances and subdivision budget.
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 500 }
    }
}

impl QuadOpts {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOpts { abs_tol, rel_tol, ..Default::default() }
    }
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T, E, F>(f: &mut F, a: T, b: T) -> Result<(T, T), E>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
{
    let half = lit::<T>(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c)?;
    let mut kron = fc * lit::<T>(WGK[7]);
    let mut gauss = fc * lit::<T>(WG[3]);
    for i in 0..7 {
        let dx = h * lit::<T>(XGK[i]);
        let s = f(c - dx)? + f(c + dx)?;
        kron = kron + s * lit::<T>(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + s * lit::<T>(WG[i / 2]);
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    Ok((value, err))
}

/// Integrates a fallible integrand over `[a, b]`.
pub fn integrate_try<T, E, F>(mut f: F, a: T, b: T, opts: QuadOpts) -> Result<Quad<T>, E>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
{
    if a == b {
        return Ok(Quad { value: T::zero(), error: T::zero(), evals: 0, converged: true });
    }
    let abs_tol = lit::<T>(opts.abs_tol);
    let rel_tol = lit::<T>(opts.rel_tol);
    let (v, e) = gk15(&mut f, a, b)?;
    let mut pieces = vec![Piece { a, b, value: v, error: e }];
    let mut evals = 15;
    loop {
        let total: T = pieces.iter().fold(T::zero(), |s, p| s + p.value);
        let err: T = pieces.iter().fold(T::zero(), |s, p| s + p.error);
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol || !err.is_finite() && !total.is_finite() {
            return Ok(Quad { value: total, error: err, evals, converged: err <= tol });
        }
        if pieces.len() >= opts.max_intervals {
            return Ok(Quad { value: total, error: err, evals, converged: false });
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = pieces.swap_remove(idx);
        let m = (p.a + p.b) * lit::<T>(0.5);
        if m == p.a || m == p.b {
            pieces.push(p);
            let total: T = pieces.iter().fold(T::zero(), |s, p| s + p.value);
            let err: T = pieces.iter().fold(T::zero(), |s, p| s + p.error);
            return Ok(Quad { value: total, error: err, evals, converged: false });
        }
        let (v1, e1) = gk15(&mut f, p.a, m)?;
        let (v2, e2) = gk15(&mut f, m, p.b)?;
        evals += 30;
        pieces.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        pieces.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
}

/// Integrates an infallible integrand over `[a, b]`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, opts: QuadOpts) -> Quad<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    match integrate_try::<T, Infallible, _>(|x| Ok(f(x)), a, b, opts) {
        Ok(q) => q,
        Err(e) => match e {},
    }
}
