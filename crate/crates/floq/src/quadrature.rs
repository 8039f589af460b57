//! Adaptive Simpson quadrature.
//!
//! Kept deliberately independent of every closed form in the library:
//! the tests use it as the oracle against which analytic integrals
//! (Fourier blocks, filter functions, rotating-frame factors) are checked.

use crate::linalg::C64;

const MAX_DEPTH: u32 = 48;

fn simpson_c(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

fn adapt_c(
    f: &impl Fn(f64) -> C64,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_c(a, m, fa, flm, fm);
    let right = simpson_c(m, b, fm, frm, fb);
    let refined = left + right;
    if depth >= MAX_DEPTH || (refined - whole).norm() <= 15.0 * tol {
        return refined + (refined - whole) / 15.0;
    }
    adapt_c(f, a, m, fa, flm, fm, left, tol * 0.5, depth + 1)
        + adapt_c(f, m, b, fm, frm, fb, right, tol * 0.5, depth + 1)
}

/// ∫ₐᵇ f(x) dx for complex-valued f.
pub fn integrate_complex(f: impl Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    // seed with a few panels so oscillatory integrands are not missed
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let x1 = a + (k + 1) as f64 * h;
        let m = 0.5 * (x0 + x1);
        let (fa, fm, fb) = (f(x0), f(m), f(x1));
        let whole = simpson_c(x0, x1, fa, fm, fb);
        total += adapt_c(&f, x0, x1, fa, fm, fb, whole, tol / panels as f64, 0);
    }
    total
}

/// ∫ₐᵇ f(x) dx for real-valued f.
pub fn integrate_real(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate_complex(|x| C64::new(f(x), 0.0), a, b, tol).re
}

/// Integral of a piecewise-smooth function with known breakpoints.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> C64 + Copy,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> C64 {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    let mut total = C64::new(0.0, 0.0);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += integrate_complex(f, w[0], w[1], tol);
        }
    }
    total
}
