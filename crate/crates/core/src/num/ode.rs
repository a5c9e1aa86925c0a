//! Dormand–Prince 5(4) embedded pair with first-same-as-last stages.

use super::{lit, Real};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights equal the last row of A; E holds (b5 - b4).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Result of one trial step.
#[derive(Clone, Copy, Debug)]
pub struct Step<T, const N: usize> {
    pub y: [T; N],
    pub err: [T; N],
    /// Derivative at the new point (first stage of the next step).
    pub k_end: [T; N],
}

/// One Dormand–Prince step from `(t, y)` with `k1 = f(t, y)`.
pub fn dopri5_step<T, E2, F, const N: usize>(
    f: &mut F,
    t: T,
    y: &[T; N],
    k1: &[T; N],
    h: T,
) -> Result<Step<T, N>, E2>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> Result<[T; N], E2>,
{
    let mut k = [[T::zero(); N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = lit::<T>(A[s][j]);
            if a != T::zero() {
                for i in 0..N {
                    ys[i] = ys[i] + h * a * kj[i];
                }
            }
        }
        k[s] = f(t + h * lit::<T>(C[s]), &ys)?;
        if s == 6 {
            let mut err = [T::zero(); N];
            for i in 0..N {
                let mut e = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    e = e + lit::<T>(E[j]) * kj[i];
                }
                err[i] = h * e;
            }
            return Ok(Step { y: ys, err, k_end: k[6] });
        }
    }
    unreachable!("seven stages always evaluated")
}

/// Max-norm of the local error scaled by `atol + rtol·max(|y|, |y_new|)`.
pub fn error_norm<T: Real, const N: usize>(y: &[T; N], step: &Step<T, N>, atol: T, rtol: T) -> T {
    let mut m = T::zero();
    for i in 0..N {
        let sc = atol + rtol * y[i].abs().max(step.y[i].abs());
        m = m.max(step.err[i].abs() / sc);
    }
    m
}

/// Standard step-size update for a fifth-order pair.
pub fn next_step<T: Real>(h: T, err: T) -> T {
    let fac = if err == T::zero() {
        lit::<T>(5.0)
    } else {
        (lit::<T>(0.9) * err.powf(lit::<T>(-0.2))).min(lit::<T>(5.0)).max(lit::<T>(0.2))
    };
    h * fac
}
