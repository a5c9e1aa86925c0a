//! Bracketed root finding and monotone inversion.

use std::fmt;

use super::{lit, Real};

/// Failure of a bracketed solver; `Eval` wraps an error raised by the function itself.
#[derive(Debug, Clone, PartialEq)]
pub enum RootError<E> {
    NotBracketed { a: f64, b: f64 },
    Eval(E),
}

impl<E: fmt::Display> fmt::Display for RootError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::NotBracketed { a, b } => write!(f, "root not bracketed on [{a}, {b}]"),
            RootError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> std::error::Error for RootError<E> {}

fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Bisection on `[a, b]` given a sign change of `f`; stops when the bracket is below `xtol`.
pub fn bisect<T, E, F>(mut f: F, a: T, b: T, xtol: T) -> Result<T, RootError<E>>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
{
    let fa = f(a).map_err(RootError::Eval)?;
    if fa == T::zero() {
        return Ok(a);
    }
    let fb = f(b).map_err(RootError::Eval)?;
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a: to_f64(a), b: to_f64(b) });
    }
    bisect_signed(f, a, b, fa, xtol)
}

/// Bisection when `f(a) = fa` is already known and `f(b)` has the opposite sign.
pub fn bisect_signed<T, E, F>(mut f: F, mut a: T, mut b: T, mut fa: T, xtol: T) -> Result<T, RootError<E>>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
{
    let half = lit::<T>(0.5);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = a + (b - a) * half;
        if m == a || m == b {
            break;
        }
        let fm = f(m).map_err(RootError::Eval)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) * half)
}

/// Locates the transition of a predicate that holds at `good` and fails at `bad`.
pub fn bisect_predicate<T, E, F>(mut pred: F, mut good: T, mut bad: T, xtol: T) -> Result<T, E>
where
    T: Real,
    F: FnMut(T) -> Result<bool, E>,
{
    let half = lit::<T>(0.5);
    for _ in 0..200 {
        if (bad - good).abs() <= xtol {
            break;
        }
        let m = good + (bad - good) * half;
        if m == good || m == bad {
            break;
        }
        if pred(m)? {
            good = m;
        } else {
            bad = m;
        }
    }
    Ok(good)
}

/// Solves `f(x) = target` for a monotone `f` on `[lo, hi]`: bracketed bisection, then
/// Newton polish with `df`, keeping every iterate inside the shrinking bracket.
pub fn invert_monotone<T, E, F, D>(
    mut f: F,
    mut df: D,
    target: T,
    lo: T,
    hi: T,
    xtol: T,
) -> Result<T, RootError<E>>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
    D: FnMut(T) -> Result<T, E>,
{
    let mut g = |x: T| f(x).map(|v| v - target);
    let glo = g(lo).map_err(RootError::Eval)?;
    if glo == T::zero() {
        return Ok(lo);
    }
    let ghi = g(hi).map_err(RootError::Eval)?;
    if ghi == T::zero() {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(RootError::NotBracketed { a: to_f64(lo), b: to_f64(hi) });
    }
    // Coarse bisection to a small bracket, then Newton.
    let (mut a, mut b, mut ga) = (lo, hi, glo);
    let coarse = ((hi - lo).abs() * lit::<T>(1e-6)).max(xtol);
    let half = lit::<T>(0.5);
    while (b - a).abs() > coarse {
        let m = a + (b - a) * half;
        if m == a || m == b {
            break;
        }
        let gm = g(m).map_err(RootError::Eval)?;
        if gm == T::zero() {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let mut x = a + (b - a) * half;
    for _ in 0..50 {
        let gx = g(x).map_err(RootError::Eval)?;
        if gx == T::zero() {
            return Ok(x);
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
        } else {
            b = x;
        }
        let d = df(x).map_err(RootError::Eval)?;
        let mut next = if d != T::zero() && d.is_finite() { x - gx / d } else { x };
        let (l, r) = if a < b { (a, b) } else { (b, a) };
        if !(next > l && next < r) || next == x {
            next = a + (b - a) * half;
        }
        let step = (next - x).abs();
        x = next;
        if step <= xtol || (b - a).abs() <= xtol {
            break;
        }
    }
    Ok(x)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min<T, E, F>(mut f: F, mut a: T, mut b: T, xtol: T) -> Result<T, E>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
{
    let r = lit::<T>(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * r;
    let mut d = a + (b - a) * r;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * r;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * r;
            fd = f(d)?;
        }
    }
    Ok((a + b) * lit::<T>(0.5))
}

/// Newton iteration for `f(x) = target` on a monotone `f`, started from `guess` and
/// safeguarded by bisection on `[lo, hi]`. The bracket is not checked up front; a root
/// outside it converges to the nearer end.
pub fn newton_guarded<T, E, F, D>(
    mut f: F,
    mut df: D,
    target: T,
    lo: T,
    hi: T,
    guess: T,
    xtol: T,
) -> Result<T, E>
where
    T: Real,
    F: FnMut(T) -> Result<T, E>,
    D: FnMut(T) -> Result<T, E>,
{
    let half = lit::<T>(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut x = guess.max(a).min(b);
    for _ in 0..100 {
        let g = f(x)? - target;
        if g == T::zero() {
            return Ok(x);
        }
        let d = df(x)?;
        // Shrink the bracket using the sign of g relative to the slope.
        let increasing = d >= T::zero();
        if (g < T::zero()) == increasing {
            a = x;
        } else {
            b = x;
        }
        let mut next = if d != T::zero() && d.is_finite() { x - g / d } else { (a + b) * half };
        if !(next >= a && next <= b) {
            next = (a + b) * half;
        }
        let step = (next - x).abs();
        x = next;
        if step <= xtol || b - a <= xtol {
            break;
        }
    }
    Ok(x)
}
