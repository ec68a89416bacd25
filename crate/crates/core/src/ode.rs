//! Second-order convective ODEs
//!
//! ```text
//! psi'' = S + (V + F psi') psi + W psi^2        (+ V1 psi' optionally)
//! ```
//!
//! paired with `phi'' = U phi` through `psi = P + Q phi'/phi`, where
//! `Q = -2/F` and `P = -2W/F^2`. The potential `U` is not algebraic in the
//! coefficients: it solves the first-order linear equation `U' + g U = h`
//! returned by [`forward_derive`].

use serde::Serialize;

use crate::burgers::{ensure_nonvanishing, IdentityCheck, TransformPair};
use crate::expr::{Expr, ParamEnv};
use crate::grid::Grid1D;
use crate::numeric::interp::HermiteTable;
use crate::numeric::rk45::{self, Dopri5Options};
use crate::{Error, Result, Stage};

/// Default relative tolerance for the ODE compatibility condition.
pub const TOL_CONSTRAINT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    pub f: Expr,
    pub w: Expr,
    pub v: Expr,
    pub s: Expr,
    /// Coefficient of an extra `psi'` term on the right-hand side.
    pub v1: Option<Expr>,
    pub env: ParamEnv,
    pub domain: (f64, f64),
}

impl OdeProblem {
    pub fn new(f: Expr, w: Expr, v: Expr, s: Expr, env: ParamEnv, domain: (f64, f64)) -> Self {
        Self {
            f,
            w,
            v,
            s,
            v1: None,
            env,
            domain,
        }
    }

    pub fn with_v1(mut self, v1: Expr) -> Self {
        self.v1 = Some(v1);
        self
    }
}

/// `U' + g U = h`.
#[derive(Debug, Clone, PartialEq)]
pub struct UOde {
    pub g: Expr,
    pub h: Expr,
}

impl UOde {
    /// Samples `U' + g U - h` for a closed-form `U`, relative to the largest of
    /// the three terms.
    pub fn residual(&self, u: &Expr, env: &ParamEnv, samples: &[f64], tol: f64) -> Result<IdentityCheck> {
        let du = u.d();
        let mut terms = Vec::with_capacity(samples.len());
        for &x in samples {
            terms.push([
                du.eval(x, env)?,
                self.g.eval(x, env)? * u.eval(x, env)?,
                self.h.eval(x, env)?,
            ]);
        }
        Ok(IdentityCheck::from_terms(samples, terms, [1.0, 1.0, -1.0], tol))
    }
}

/// The potential `U` of `phi'' = U phi`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearPotential {
    Closed {
        u: Expr,
        env: ParamEnv,
    },
    /// Integrated values with cubic Hermite interpolation between nodes.
    Sampled(HermiteTable),
}

impl LinearPotential {
    pub fn closed(u: Expr, env: ParamEnv) -> Self {
        LinearPotential::Closed { u, env }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            LinearPotential::Closed { u, env } => Ok(u.eval(x, env)?),
            LinearPotential::Sampled(table) => table.eval(x).map(|(v, _)| v).ok_or_else(|| {
                let (a, b) = table.x_range();
                Error::InvalidInput(format!("U requested at x = {x}, outside its table [{a}, {b}]"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardDerivation {
    pub pair: TransformPair,
    pub u_ode: UOde,
    pub constraint: IdentityCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Compatibility {
    pub max_abs: f64,
    pub relative: f64,
    pub holds: bool,
}

impl From<&IdentityCheck> for Compatibility {
    fn from(c: &IdentityCheck) -> Self {
        Compatibility {
            max_abs: c.max_abs,
            relative: c.relative,
            holds: c.holds,
        }
    }
}

/// Derives `(Q, P)`, the equation for `U`, and samples the compatibility
/// condition
///
/// ```text
/// V + (F'' - 2W')/F + (6 W F' - 2 F'^2 - 4 W^2)/F^2 = 0.
/// ```
///
/// A violated condition is reported in `constraint`, not raised.
pub fn forward_derive(problem: &OdeProblem, samples: &[f64], tol: f64) -> Result<ForwardDerivation> {
    if problem.v1.as_ref().is_some_and(|v1| !v1.fold().is_const(0.0)) {
        return Err(Error::InvalidInput(
            "forward derivation needs the psi' term reduced away first (see reduce_v1)".into(),
        ));
    }
    let OdeProblem { f, w, v, s, env, .. } = problem;
    ensure_nonvanishing(f, env, samples, "F")?;

    let q = -2.0 / f;
    let p = -2.0 * w / f.clone().powi(2);

    let df = f.d();
    let d2f = df.d();
    let dw = w.d();
    let d2w = dw.d();
    let g = (2.0 * w - 2.0 * &df) / f;
    let h = -(f * s / 2.0
        + (&d2w - v * w) / f
        + ((2.0 * w - 4.0 * &df) * &dw - 2.0 * w * &d2f) / f.clone().powi(2)
        + 2.0 * w * (w.clone().powi(2) + 3.0 * df.clone().powi(2) - 2.0 * w * &df) / f.clone().powi(3));

    let mut terms = Vec::with_capacity(samples.len());
    for &x in samples {
        let fv = f.eval(x, env)?;
        let f1 = df.eval(x, env)?;
        let wv = w.eval(x, env)?;
        let f2 = fv * fv;
        terms.push([
            v.eval(x, env)?,
            d2f.eval(x, env)? / fv,
            2.0 * dw.eval(x, env)? / fv,
            6.0 * wv * f1 / f2,
            2.0 * f1 * f1 / f2,
            4.0 * wv * wv / f2,
        ]);
    }
    let constraint = IdentityCheck::from_terms(samples, terms, [1.0, 1.0, -1.0, 1.0, -1.0, -1.0], tol);
    Ok(ForwardDerivation {
        pair: TransformPair { p, q },
        u_ode: UOde { g, h },
        constraint,
    })
}

/// Removes a `V1 psi'` term with `xi = p psi`, `p = exp(-1/2 ∫_{x0}^x V1)`
/// and `x0` the left end of the domain. Returns `p` and the problem for `xi`:
/// `S p`, `V + p''/p`, `F/p`, `W/p - F p'/p^2`.
pub fn reduce_v1(problem: &OdeProblem) -> Result<(Expr, OdeProblem)> {
    let v1 = match &problem.v1 {
        Some(v1) => v1.fold(),
        None => Expr::zero(),
    };
    let p = Expr::exp_integral(-0.5, problem.domain.0, v1);
    if p.is_const(1.0) {
        let mut reduced = problem.clone();
        reduced.v1 = None;
        return Ok((p, reduced));
    }
    let dp = p.d();
    let d2p = dp.d();
    let OdeProblem {
        f,
        w,
        v,
        s,
        env,
        domain,
        ..
    } = problem;
    // p is an exponential, so it cannot vanish; still confirm it evaluates
    for x in [domain.0, 0.5 * (domain.0 + domain.1), domain.1] {
        let pv = p.eval(x, env).map_err(|e| Error::from(e).at(Stage::Reduce))?;
        if pv == 0.0 {
            return Err(Error::Degenerate { what: "p", x }.at(Stage::Reduce));
        }
    }
    let reduced = OdeProblem {
        f: f / &p,
        w: w / &p - f * &dp / p.clone().powi(2),
        v: v + d2p / &p,
        s: &p * s,
        v1: None,
        env: env.clone(),
        domain: *domain,
    };
    Ok((p, reduced))
}

/// Integrates `U' = h - g U` from `U(x0) = u0` to every grid point with an
/// adaptive 5(4) pair at tolerance 1e-10, stepping onto every grid point;
/// `x0` may lie anywhere.
pub fn solve_u_ode(u_ode: &UOde, env: &ParamEnv, u0: f64, x0: f64, grid: &Grid1D) -> Result<LinearPotential> {
    let xs = grid.points();
    let sol = rk45::integrate_dense(
        |x, y: &[f64; 1]| -> Result<[f64; 1]> {
            let g = u_ode.g.eval(x, env)?;
            let h = u_ode.h.eval(x, env)?;
            Ok([h - g * y[0]])
        },
        x0,
        [u0],
        &xs,
        &Dopri5Options {
            land_on_outputs: true,
            ..Dopri5Options::default()
        },
    )
    .map_err(|e| match e {
        rk45::OdeError::Rhs(inner) => inner,
        other => Error::Numeric(format!("U integration: {other}")),
    })?;
    Ok(LinearPotential::Sampled(HermiteTable::new(
        grid.x0(),
        grid.dx(),
        sol.y.iter().map(|y| y[0]).collect(),
        sol.dy.iter().map(|d| d[0]).collect(),
    )))
}

/// Builds the nonlinear equation that `(U, P, Q)` linearizes:
///
/// ```text
/// F = -2/Q,  W = -2P/Q^2,  V = (Q Q'' + 4P^2 + 2(PQ)')/Q^2,
/// S = P'' + Q U' + 2(Q' + P) U - P Q''/Q - 2P^2 (Q' + P)/Q^2.
/// ```
pub fn reverse_synthesize(
    u: &Expr,
    p: &Expr,
    q: &Expr,
    env: &ParamEnv,
    domain: (f64, f64),
    samples: &[f64],
) -> Result<OdeProblem> {
    ensure_nonvanishing(q, env, samples, "Q")?;
    let dq = q.d();
    let d2q = dq.d();
    let q2 = q.clone().powi(2);
    let f = -2.0 / q;
    let w = -2.0 * p / &q2;
    let v = (q * &d2q + 4.0 * p.clone().powi(2) + 2.0 * (p * q).d()) / &q2;
    let s =
        p.derivative(2) + q * u.d() + 2.0 * (&dq + p) * u - p * &d2q / q - 2.0 * p.clone().powi(2) * (&dq + p) / &q2;
    Ok(OdeProblem::new(f, w, v, s, env.clone(), domain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::linspace;
    use crate::parse;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn bessel(a: f64) -> OdeProblem {
        OdeProblem::new(
            e("1"),
            e("a"),
            e("4*a^2"),
            e("0"),
            ParamEnv::new().with("a", a),
            (0.0, 3.0),
        )
    }

    #[test]
    fn example_pair_and_u_equation() {
        let xs = linspace(0.0, 3.0, 50);
        for a in [1.0, 0.5, -2.0] {
            let d = forward_derive(&bessel(a), &xs, TOL_CONSTRAINT).unwrap();
            let env = ParamEnv::new().with("a", a);
            for &x in &xs {
                assert_eq!(d.pair.q.eval(x, &env).unwrap(), -2.0);
                assert_eq!(d.pair.p.eval(x, &env).unwrap(), -2.0 * a);
                assert_eq!(d.u_ode.g.eval(x, &env).unwrap(), 2.0 * a);
                assert!((d.u_ode.h.eval(x, &env).unwrap() - 2.0 * a * a * a).abs() < 1e-14);
            }
            assert_eq!(d.constraint.max_abs, 0.0);
            assert!(d.constraint.holds);
        }
    }

    #[test]
    fn missing_linear_term_is_incompatible() {
        let mut problem = bessel(1.0);
        problem.v = Expr::zero();
        let d = forward_derive(&problem, &linspace(0.0, 3.0, 10), TOL_CONSTRAINT).unwrap();
        assert!(!d.constraint.holds);
        assert!(d.constraint.residual.iter().all(|&r| r == -4.0));
    }

    #[test]
    fn psi_prime_term_must_be_reduced_first() {
        let problem = bessel(1.0).with_v1(e("x"));
        assert!(forward_derive(&problem, &[0.0, 1.0], TOL_CONSTRAINT).is_err());
        assert!(forward_derive(&bessel(1.0).with_v1(e("0")), &[0.0, 1.0], TOL_CONSTRAINT).is_ok());
    }

    #[test]
    fn u_equation_reproduces_closed_form() {
        let grid = Grid1D::new(0.0, 3.0, 301).unwrap();
        let env = ParamEnv::new().with("a", 1.0);
        let d = forward_derive(&bessel(1.0), &grid.points(), TOL_CONSTRAINT).unwrap();
        let u = solve_u_ode(&d.u_ode, &env, 2.0, 0.0, &grid).unwrap();
        for x in grid.points() {
            let exact = (-2.0 * x).exp() + 1.0;
            assert!((u.eval(x).unwrap() - exact).abs() <= 1e-8, "x = {x}");
        }
        // between nodes the Hermite interpolant stays close too
        assert!((u.eval(0.015).unwrap() - ((-0.03f64).exp() + 1.0)).abs() < 1e-8);
        assert!(u.eval(3.5).is_err());
    }

    #[test]
    fn trivial_u_equations() {
        let grid = Grid1D::new(0.0, 2.0, 21).unwrap();
        let env = ParamEnv::new();
        let zero = UOde {
            g: Expr::zero(),
            h: Expr::zero(),
        };
        let u = solve_u_ode(&zero, &env, 3.0, 0.0, &grid).unwrap();
        assert!(grid.points().iter().all(|&x| u.eval(x).unwrap() == 3.0));
        let decay = UOde {
            g: Expr::one(),
            h: Expr::zero(),
        };
        let u = solve_u_ode(&decay, &env, 1.0, 0.0, &grid).unwrap();
        for x in grid.points() {
            assert!((u.eval(x).unwrap() - (-x).exp()).abs() <= 1e-8);
        }
        // start in the middle of the grid
        let u = solve_u_ode(&decay, &env, 1.0, 1.0, &grid).unwrap();
        assert!((u.eval(0.0).unwrap() - 1f64.exp()).abs() <= 1e-8);
    }

    #[test]
    fn reverse_synthesis_of_the_example() {
        let env = ParamEnv::new().with("a", 1.5).with("C", 0.7);
        let xs = linspace(0.0, 3.0, 40);
        let problem = reverse_synthesize(&e("C*exp(-2*a*x)+a^2"), &e("-2*a"), &e("-2"), &env, (0.0, 3.0), &xs).unwrap();
        for &x in &xs {
            assert_eq!(problem.f.eval(x, &env).unwrap(), 1.0);
            assert_eq!(problem.w.eval(x, &env).unwrap(), 1.5);
            assert!((problem.v.eval(x, &env).unwrap() - 9.0).abs() < 1e-13);
            assert!(problem.s.eval(x, &env).unwrap().abs() < 1e-13);
        }
        let trivial = reverse_synthesize(
            &e("k"),
            &e("0"),
            &e("-2"),
            &ParamEnv::new().with("k", 4.0),
            (0.0, 1.0),
            &xs,
        )
        .unwrap();
        assert!(trivial.s.fold().is_const(0.0), "{}", trivial.s);
        assert!(trivial.v.fold().is_const(0.0), "{}", trivial.v);
    }

    #[test]
    fn reverse_then_forward_recovers_inputs() {
        let env = ParamEnv::new();
        let xs = linspace(0.0, 2.0, 60);
        let (u, p, q) = (e("sin(x) + 2"), e("x^2 - 1"), e("-(3 + cos(2*x))"));
        let problem = reverse_synthesize(&u, &p, &q, &env, (0.0, 2.0), &xs).unwrap();
        let d = forward_derive(&problem, &xs, TOL_CONSTRAINT).unwrap();
        for &x in &xs {
            let (q0, q1) = (q.eval(x, &env).unwrap(), d.pair.q.eval(x, &env).unwrap());
            let (p0, p1) = (p.eval(x, &env).unwrap(), d.pair.p.eval(x, &env).unwrap());
            assert!((q0 - q1).abs() <= 1e-12 * q0.abs());
            assert!((p0 - p1).abs() <= 1e-12 * p0.abs().max(1.0));
        }
        assert!(d.constraint.relative <= 1e-8, "{}", d.constraint.relative);
        let uc = d.u_ode.residual(&u, &env, &xs, 1e-8).unwrap();
        assert!(uc.holds, "{}", uc.relative);
    }

    #[test]
    fn reduce_v1_cases() {
        let base = OdeProblem::new(e("1"), e("2"), e("3"), e("x"), ParamEnv::new(), (1.0, 2.0));
        let (p, same) = reduce_v1(&base.clone().with_v1(Expr::zero())).unwrap();
        assert!(p.is_const(1.0));
        assert_eq!(same, base);

        let (p, reduced) = reduce_v1(&base.clone().with_v1(e("-2/x"))).unwrap();
        let env = ParamEnv::new();
        for x in linspace(1.0, 2.0, 11) {
            assert!((p.eval(x, &env).unwrap() - x).abs() < 1e-12);
            // p = x: S p = x^2, V + p''/p = 3, F/p = 1/x, W/p - F p'/p^2 = 2/x - 1/x^2
            assert!((reduced.s.eval(x, &env).unwrap() - x * x).abs() < 1e-11);
            assert!((reduced.v.eval(x, &env).unwrap() - 3.0).abs() < 1e-11);
            assert!((reduced.f.eval(x, &env).unwrap() - 1.0 / x).abs() < 1e-12);
            assert!((reduced.w.eval(x, &env).unwrap() - (2.0 / x - 1.0 / (x * x))).abs() < 1e-11);
        }
    }
}
