//! Derivations for the generalized Burgers equation
//!
//! ```text
//! psi_t - M(x) psi_xx = H(x) psi psi_x + V(x) psi + W(x) psi^2
//! ```
//!
//! paired with `phi_t = M(x) phi_xx` through `psi = P + Q phi_x / phi`.
//! Given `(M, H)` the pair is `Q = 2M/H`, `P = 2M H'/H^2 - M'/H`, and the
//! remaining coefficients are forced to `W = -H M'/(2M) + H'` and
//! `V = -M H''/H`. The leftover condition is a third-order ODE linking `M`
//! and `H`; [`constraint_residual`] samples it.

use serde::Serialize;

use crate::expr::{Expr, ParamEnv};
use crate::{Error, Result};

/// Default relative tolerance for sampled identities.
pub const TOL_SYM: f64 = 1e-9;

/// Recorded whenever the `H = 1` reduced form is evaluated.
pub const H_ONE_FORM_NOTE: &str =
    "H = 1 reduction evaluated as (M')^3/(2M) - M'M'' + MM''' (leading term cubic in M'), \
     the form that the substitution M = w^2 reduces to (w w'')' = 0";

/// `psi = P + Q phi_x / phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPair {
    pub p: Expr,
    pub q: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedCoefficients {
    pub w: Expr,
    pub v: Expr,
}

/// Coefficients `(M, H, V, W)` of the nonlinear equation on `[x0, x1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersProblem {
    pub m: Expr,
    pub h: Expr,
    pub v: Expr,
    pub w: Expr,
    pub env: ParamEnv,
    pub domain: (f64, f64),
}

impl BurgersProblem {
    /// Builds the problem whose `V` and `W` are induced by `(M, H)`, together
    /// with its transform pair.
    pub fn derive(
        m: Expr,
        h: Expr,
        env: ParamEnv,
        domain: (f64, f64),
        samples: &[f64],
    ) -> Result<(BurgersProblem, TransformPair)> {
        let pair = derive_transform(&m, &h, &env, samples)?;
        let InducedCoefficients { w, v } = derive_coefficients(&m, &h, &env, samples)?;
        let problem = BurgersProblem {
            m,
            h,
            v,
            w,
            env,
            domain,
        };
        problem.check(samples)?;
        Ok((problem, pair))
    }

    /// Parabolicity (`M > 0`) and `H != 0` on the sample points.
    pub fn check(&self, samples: &[f64]) -> Result<()> {
        for &x in samples {
            let m = self.m.eval(x, &self.env)?;
            if m <= 0.0 {
                return Err(Error::NonPositiveDiffusivity { x, value: m });
            }
        }
        ensure_nonvanishing(&self.h, &self.env, samples, "H")
    }
}

/// Fails if `e` is identically zero, evaluates to zero at a sample, or changes
/// sign between neighbouring samples.
pub(crate) fn ensure_nonvanishing(e: &Expr, env: &ParamEnv, samples: &[f64], what: &'static str) -> Result<()> {
    if e.fold().is_const(0.0) {
        return Err(Error::Degenerate {
            what,
            x: samples.first().copied().unwrap_or(f64::NAN),
        });
    }
    let mut prev: Option<(f64, f64)> = None;
    for &x in samples {
        let v = e.eval(x, env)?;
        if v == 0.0 {
            return Err(Error::Degenerate { what, x });
        }
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                return Err(Error::Degenerate {
                    what,
                    x: 0.5 * (px + x),
                });
            }
        }
        prev = Some((x, v));
    }
    Ok(())
}

/// `Q = 2M/H`, `P = 2M H'/H^2 - M'/H`.
pub fn derive_transform(m: &Expr, h: &Expr, env: &ParamEnv, samples: &[f64]) -> Result<TransformPair> {
    ensure_nonvanishing(h, env, samples, "H")?;
    Ok(transform_pair(m, h))
}

fn transform_pair(m: &Expr, h: &Expr) -> TransformPair {
    let dm = m.d();
    let dh = h.d();
    let q = 2.0 * m / h;
    let p = 2.0 * m * dh / h.clone().powi(2) - dm / h;
    TransformPair { p, q }
}

/// `W = -H M'/(2M) + H'`, `V = -M H''/H`.
pub fn derive_coefficients(m: &Expr, h: &Expr, env: &ParamEnv, samples: &[f64]) -> Result<InducedCoefficients> {
    ensure_nonvanishing(h, env, samples, "H")?;
    ensure_nonvanishing(m, env, samples, "M")?;
    let dm = m.d();
    let dh = h.d();
    let w = -(h * dm) / (2.0 * m) + dh;
    let v = -(m * h.derivative(2)) / h;
    Ok(InducedCoefficients { w, v })
}

/// Sampled residual of an identity that should vanish, with the scale used
/// to make it relative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    /// Largest absolute value of any individual term over the samples.
    pub scale: f64,
    pub max_abs: f64,
    /// `max_abs / scale` (zero when every term vanishes).
    pub relative: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl IdentityCheck {
    /// Builds the check from per-point expanded terms whose signed sum is the
    /// residual.
    pub(crate) fn from_terms<const K: usize>(
        x: &[f64],
        terms: impl IntoIterator<Item = [f64; K]>,
        signs: [f64; K],
        tolerance: f64,
    ) -> IdentityCheck {
        let mut residual = Vec::with_capacity(x.len());
        let mut scale: f64 = 0.0;
        for t in terms {
            let mut r = 0.0;
            for k in 0..K {
                r += signs[k] * t[k];
                scale = scale.max(t[k].abs());
            }
            residual.push(r);
        }
        let max_abs = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let relative = if max_abs == 0.0 { 0.0 } else { max_abs / scale };
        IdentityCheck {
            x: x.to_vec(),
            residual,
            scale,
            max_abs,
            relative,
            tolerance,
            holds: relative <= tolerance,
        }
    }
}

/// Samples the compatibility condition between `M` and `H`:
///
/// ```text
/// [H M'/(2M) - H'] P^2 + [M H''/H - H P'] P - M P'' = 0
/// ```
///
/// with `P` from [`derive_transform`]. The pair is compatible iff the largest
/// residual is within `tol` of the largest individual term.
pub fn constraint_residual(m: &Expr, h: &Expr, env: &ParamEnv, samples: &[f64], tol: f64) -> Result<IdentityCheck> {
    ensure_nonvanishing(h, env, samples, "H")?;
    ensure_nonvanishing(m, env, samples, "M")?;
    let TransformPair { p, .. } = transform_pair(m, h);
    let dm = m.d();
    let dh = h.d();
    let d2h = dh.d();
    let dp = p.d();
    let d2p = dp.d();
    let mut terms = Vec::with_capacity(samples.len());
    for &x in samples {
        let mv = m.eval(x, env)?;
        let hv = h.eval(x, env)?;
        let pv = p.eval(x, env)?;
        let p2 = pv * pv;
        terms.push([
            hv * dm.eval(x, env)? / (2.0 * mv) * p2,
            dh.eval(x, env)? * p2,
            mv * d2h.eval(x, env)? / hv * pv,
            hv * dp.eval(x, env)? * pv,
            mv * d2p.eval(x, env)?,
        ]);
    }
    Ok(IdentityCheck::from_terms(
        samples,
        terms,
        [1.0, -1.0, 1.0, -1.0, -1.0],
        tol,
    ))
}

/// `H^2 H''' - 5 H H' H'' + 4 (H')^3`, the constant-`M` form of the
/// compatibility condition (up to the factor `-2 M^2 / H^4`).
pub fn h_ode_residual(h: &Expr, env: &ParamEnv, samples: &[f64], tol: f64) -> Result<IdentityCheck> {
    let d1 = h.d();
    let d2 = d1.d();
    let d3 = d2.d();
    let mut terms = Vec::with_capacity(samples.len());
    for &x in samples {
        let (h0, h1, h2, h3) = (h.eval(x, env)?, d1.eval(x, env)?, d2.eval(x, env)?, d3.eval(x, env)?);
        terms.push([h0 * h0 * h3, 5.0 * h0 * h1 * h2, 4.0 * h1 * h1 * h1]);
    }
    Ok(IdentityCheck::from_terms(samples, terms, [1.0, -1.0, 1.0], tol))
}

/// `(M')^3/(2M) - M' M'' + M M'''`, the `H = 1` form of the compatibility
/// condition. See [`H_ONE_FORM_NOTE`].
pub fn m_ode_residual(m: &Expr, env: &ParamEnv, samples: &[f64], tol: f64) -> Result<IdentityCheck> {
    ensure_nonvanishing(m, env, samples, "M")?;
    let d1 = m.d();
    let d2 = d1.d();
    let d3 = d2.d();
    let mut terms = Vec::with_capacity(samples.len());
    for &x in samples {
        let (m0, m1, m2, m3) = (m.eval(x, env)?, d1.eval(x, env)?, d2.eval(x, env)?, d3.eval(x, env)?);
        terms.push([m1 * m1 * m1 / (2.0 * m0), m1 * m2, m0 * m3]);
    }
    Ok(IdentityCheck::from_terms(samples, terms, [1.0, -1.0, 1.0], tol))
}

/// `n` evenly spaced samples on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
