//! Bracketed scalar root finding.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("f({a}) = {fa:e} and f({b}) = {fb:e} do not bracket a root")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("function value is not finite at {0}")]
    NonFinite(f64),
}

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Converges to `|b - a| <= 2 * (4 eps |x| + xtol)`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite(a));
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite(b));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite(b));
        }
    }
    Err(RootError::NoConvergence(max_iter))
}

/// Grows `hi` geometrically from `lo` until `f(hi)` has the opposite sign of
/// `f(lo)`, for functions that are monotone on `[lo, ∞)`.
pub fn expand_upper<F>(mut f: F, lo: f64, mut hi: f64, max_doublings: usize) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let flo = f(lo);
    for _ in 0..max_doublings {
        let fhi = f(hi);
        if !fhi.is_finite() {
            return Err(RootError::NonFinite(hi));
        }
        if fhi == 0.0 || fhi.signum() != flo.signum() {
            return Ok(hi);
        }
        hi = lo + 2.0 * (hi - lo);
    }
    Err(RootError::NotBracketed {
        a: lo,
        b: hi,
        fa: flo,
        fb: f(hi),
    })
}
