//! Named coefficient families that satisfy the Burgers compatibility
//! condition, kept in a runtime registry.
//!
//! For constant diffusivity the admissible convective coefficients are
//! `1/(a x + b)`, `B / cos(omega x + beta)` and `C exp(alpha x)`. For unit
//! convection the admissible diffusivities are `M = w^2` with `w w'' = c`:
//! `(a1 x + b1)^2` when `c = 0`, otherwise an implicit `w` obtained by
//! quadrature and root finding.

use std::fmt;

use serde::Serialize;

use crate::burgers::{self, IdentityCheck, TOL_SYM};
use crate::expr::{Expr, ParamEnv};
use crate::numeric::quadrature::{self, QuadratureOptions};
use crate::numeric::roots;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Convective coefficient `H` for constant `M`.
    H,
    /// Diffusivity `M` for `H = 1`.
    M,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::H => "h",
            FamilyKind::M => "m",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HFamily {
    ReciprocalLinear,
    Secant,
    Exponential,
}

/// `1/(a x + b)`, `B/cos(omega x + beta)` or `C exp(alpha x)` with the
/// parameter values substituted.
pub fn h_family(kind: HFamily, params: &ParamEnv) -> Result<Expr> {
    let x = Expr::x();
    match kind {
        HFamily::ReciprocalLinear => {
            let (a, b) = (params.require("a")?, params.require("b")?);
            if a == 0.0 && b == 0.0 {
                return Err(Error::InvalidInput(
                    "reciprocal-linear family needs (a, b) != (0, 0)".into(),
                ));
            }
            Ok(1.0 / (a * x + b))
        }
        HFamily::Secant => {
            let (big_b, omega, beta) = (params.require("B")?, params.require("omega")?, params.require("beta")?);
            if big_b == 0.0 {
                return Err(Error::InvalidInput("secant family needs B != 0".into()));
            }
            Ok(big_b / (omega * x + beta).cos())
        }
        HFamily::Exponential => {
            let (c, alpha) = (params.require("C")?, params.require("alpha")?);
            if c == 0.0 {
                return Err(Error::InvalidInput("exponential family needs C != 0".into()));
            }
            Ok(c * (alpha * x).exp())
        }
    }
}

/// `M = (a1 x + b1)^2`.
pub fn m_family_linear_sq(a1: f64, b1: f64) -> Result<Expr> {
    if a1 == 0.0 && b1 == 0.0 {
        return Err(Error::InvalidInput(
            "linear-square family needs (a1, b1) != (0, 0)".into(),
        ));
    }
    Ok((a1 * Expr::x() + b1).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn from_sign(s: f64) -> Result<Branch> {
        if s > 0.0 {
            Ok(Branch::Plus)
        } else if s < 0.0 {
            Ok(Branch::Minus)
        } else {
            Err(Error::InvalidInput("branch sign must be +1 or -1".into()))
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitM {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub m: Vec<f64>,
}

const IMPLICIT_QUAD: QuadratureOptions = QuadratureOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-14,
    max_depth: 50,
};

/// Samples `M = w^2` where `w w'' = c`, `c != 0`, by inverting
///
/// ```text
/// x = C2 ± ∫_{w*}^{w} ds / sqrt(2c ln s - C1 c)
/// ```
///
/// The lower limit is the turning point `w* = exp(C1/2)` where `w' = 0`, so
/// `x = C2` maps to `w*`. Substituting `s = w* + sign(c) u^2` removes the
/// inverse-square-root singularity there. The plus branch gives an increasing
/// `w`, the minus branch a decreasing one.
pub fn m_family_implicit(c: f64, c1: f64, c2: f64, branch: Branch, xs: &[f64]) -> Result<ImplicitM> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidInput(
            "implicit family needs a finite c != 0 (use linear-square for c = 0)".into(),
        ));
    }
    let w_star = (0.5 * c1).exp();
    if !(w_star.is_finite() && w_star > 0.0) {
        return Err(Error::InvalidInput(format!(
            "turning point exp(C1/2) is not usable for C1 = {c1}"
        )));
    }
    let sigma = c.signum();
    let integrand = move |u: f64| -> f64 {
        if u == 0.0 {
            return 2.0 / (2.0 * c.abs() / w_star).sqrt();
        }
        // 2c ln(s) - C1 c = 2c ln(s / w*)
        let g = 2.0 * c * (sigma * u * u / w_star).ln_1p();
        2.0 * u / g.sqrt()
    };
    let travelled = |u: f64| -> Result<f64> {
        quadrature::integrate(
            |s| {
                let v = integrand(s);
                if v.is_finite() && v > 0.0 {
                    Ok(v)
                } else {
                    Err(Error::Numeric(format!("integrand not positive at u = {s}")))
                }
            },
            0.0,
            u,
            &IMPLICIT_QUAD,
        )
        .map(|q| q.value)
        .map_err(|e| match e {
            quadrature::QuadError::Integrand(inner) => inner,
            other => Error::Numeric(other.to_string()),
        })
    };
    // For c < 0 the range of w is (0, w*], reached at u = sqrt(w*).
    let u_cap = (sigma < 0.0).then(|| w_star.sqrt());
    let reach = match u_cap {
        Some(cap) => Some(travelled(cap * (1.0 - 1e-15))?),
        None => None,
    };

    let mut out = ImplicitM {
        x: xs.to_vec(),
        w: Vec::with_capacity(xs.len()),
        m: Vec::with_capacity(xs.len()),
    };
    for &x in xs {
        let target = (x - c2) * branch.sign() * sigma;
        if target < 0.0 {
            return Err(Error::InvalidInput(format!(
                "x = {x} lies outside the reachable range of this branch (starts at C2 = {c2})"
            )));
        }
        if let Some(reach) = reach {
            if target > reach {
                return Err(Error::InvalidInput(format!(
                    "x = {x} lies beyond the reachable range (|x - C2| <= {reach})"
                )));
            }
        }
        let u = if target == 0.0 {
            0.0
        } else {
            // errors inside the closure are re-raised after the search
            let mut failure: Option<Error> = None;
            let mut f = |u: f64| match travelled(u) {
                Ok(v) => v - target,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            };
            let hi = match u_cap {
                Some(cap) => cap * (1.0 - 1e-15),
                None => roots::expand_upper(&mut f, 0.0, 1.0, 200)
                    .map_err(|e| Error::Numeric(format!("bracketing failed: {e}")))?,
            };
            let root = roots::brent(&mut f, 0.0, hi, 0.0, 300);
            if let Some(e) = failure {
                return Err(e);
            }
            root.map_err(|e| Error::Numeric(format!("bracketing failed: {e}")))?
        };
        let w = w_star + sigma * u * u;
        out.w.push(w);
        out.m.push(w * w);
    }
    Ok(out)
}

/// Residual of `w w'' = c` with the 3-point second difference on uniformly
/// spaced samples; endpoints are skipped.
pub fn implicit_fd_check(sampled: &ImplicitM, c: f64, tol: f64) -> Result<IdentityCheck> {
    let n = sampled.x.len();
    if n < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    let h = sampled.x[1] - sampled.x[0];
    for pair in sampled.x.windows(2) {
        if ((pair[1] - pair[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::InvalidInput(
                "finite-difference check needs uniform samples".into(),
            ));
        }
    }
    let w = &sampled.w;
    let x: Vec<f64> = sampled.x[1..n - 1].to_vec();
    let residual: Vec<f64> = (1..n - 1)
        .map(|i| w[i] * (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h) - c)
        .collect();
    let max_abs = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(IdentityCheck {
        x,
        residual,
        scale: 1.0,
        max_abs,
        relative: max_abs,
        tolerance: tol,
        holds: max_abs <= tol,
    })
}

/// What a family produced for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyMember {
    Closed(Expr),
    Sampled(ImplicitM),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCheck {
    pub identity: &'static str,
    #[serde(flatten)]
    pub check: IdentityCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCheck {
    pub family: &'static str,
    pub kind: FamilyKind,
    pub params: ParamEnv,
    /// Expression text for closed-form members.
    pub member: Option<String>,
    pub checks: Vec<NamedCheck>,
    pub notes: Vec<String>,
    pub holds: bool,
}

/// A named, parameterized coefficient family.
pub trait CoefficientFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> FamilyKind;
    fn parameters(&self) -> &'static [&'static str];
    /// A valid parameter set, used when the caller supplies none.
    fn defaults(&self) -> ParamEnv;
    /// Sample domain used by [`CoefficientFamily::check`] when none is given.
    fn default_samples(&self, params: &ParamEnv) -> Result<Vec<f64>> {
        let _ = params;
        Ok(burgers::linspace(0.0, 1.0, 100))
    }
    fn realize(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyMember>;
    /// Evaluates the identities this family is supposed to satisfy.
    fn check(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyCheck>;
}

struct HFamilyEntry {
    name: &'static str,
    kind: HFamily,
    params: &'static [&'static str],
    defaults: &'static [(&'static str, f64)],
}

impl CoefficientFamily for HFamilyEntry {
    fn name(&self) -> &'static str {
        self.name
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::H
    }

    fn parameters(&self) -> &'static [&'static str] {
        self.params
    }

    fn defaults(&self) -> ParamEnv {
        self.defaults.iter().map(|&(k, v)| (k, v)).collect()
    }

    fn realize(&self, params: &ParamEnv, _samples: &[f64]) -> Result<FamilyMember> {
        h_family(self.kind, params).map(FamilyMember::Closed)
    }

    fn check(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyCheck> {
        let h = h_family(self.kind, params)?;
        let a = params.get("A").unwrap_or(1.0);
        let h_ode = burgers::h_ode_residual(&h, params, samples, TOL_SYM)?;
        let constraint = burgers::constraint_residual(&Expr::c(a), &h, params, samples, TOL_SYM)?;
        let holds = h_ode.holds && constraint.holds;
        Ok(FamilyCheck {
            family: self.name,
            kind: FamilyKind::H,
            params: params.clone(),
            member: Some(h.to_string()),
            checks: vec![
                NamedCheck {
                    identity: "h-ode",
                    check: h_ode,
                },
                NamedCheck {
                    identity: "burgers-constraint",
                    check: constraint,
                },
            ],
            notes: vec![format!("constant diffusivity M = {a}")],
            holds,
        })
    }
}

struct LinearSquare;

impl CoefficientFamily for LinearSquare {
    fn name(&self) -> &'static str {
        "linear-square"
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::M
    }

    fn parameters(&self) -> &'static [&'static str] {
        &["a1", "b1"]
    }

    fn defaults(&self) -> ParamEnv {
        ParamEnv::new().with("a1", 1.0).with("b1", 0.5)
    }

    fn realize(&self, params: &ParamEnv, _samples: &[f64]) -> Result<FamilyMember> {
        m_family_linear_sq(params.require("a1")?, params.require("b1")?).map(FamilyMember::Closed)
    }

    fn check(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyCheck> {
        let m = m_family_linear_sq(params.require("a1")?, params.require("b1")?)?;
        let constraint = burgers::constraint_residual(&m, &Expr::one(), params, samples, TOL_SYM)?;
        let reduced = burgers::m_ode_residual(&m, params, samples, TOL_SYM)?;
        let holds = constraint.holds && reduced.holds;
        Ok(FamilyCheck {
            family: self.name(),
            kind: FamilyKind::M,
            params: params.clone(),
            member: Some(m.to_string()),
            checks: vec![
                NamedCheck {
                    identity: "burgers-constraint",
                    check: constraint,
                },
                NamedCheck {
                    identity: "m-ode",
                    check: reduced,
                },
            ],
            notes: vec!["unit convection H = 1".into(), burgers::H_ONE_FORM_NOTE.into()],
            holds,
        })
    }
}

/// Finite-difference tolerance for `w w'' = c` on implicit samples.
pub const IMPLICIT_FD_TOL: f64 = 1e-6;

struct Implicit;

impl Implicit {
    fn read(params: &ParamEnv) -> Result<(f64, f64, f64, Branch)> {
        Ok((
            params.require("c")?,
            params.require("C1")?,
            params.require("C2")?,
            Branch::from_sign(params.get("sign").unwrap_or(1.0))?,
        ))
    }
}

impl CoefficientFamily for Implicit {
    fn name(&self) -> &'static str {
        "implicit"
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::M
    }

    fn parameters(&self) -> &'static [&'static str] {
        &["c", "C1", "C2", "sign"]
    }

    fn defaults(&self) -> ParamEnv {
        ParamEnv::new()
            .with("c", 1.0)
            .with("C1", 0.0)
            .with("C2", 0.0)
            .with("sign", 1.0)
    }

    fn default_samples(&self, params: &ParamEnv) -> Result<Vec<f64>> {
        let (_, _, c2, branch) = Self::read(params)?;
        let end = c2 + branch.sign() * params.get("c").map_or(1.0, f64::signum);
        let (a, b) = if end > c2 { (c2, end) } else { (end, c2) };
        Ok(burgers::linspace(a, b, 1001))
    }

    fn realize(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyMember> {
        let (c, c1, c2, branch) = Self::read(params)?;
        m_family_implicit(c, c1, c2, branch, samples).map(FamilyMember::Sampled)
    }

    fn check(&self, params: &ParamEnv, samples: &[f64]) -> Result<FamilyCheck> {
        let (c, c1, c2, branch) = Self::read(params)?;
        let sampled = m_family_implicit(c, c1, c2, branch, samples)?;
        let fd = implicit_fd_check(&sampled, c, IMPLICIT_FD_TOL)?;
        let holds = fd.holds;
        Ok(FamilyCheck {
            family: self.name(),
            kind: FamilyKind::M,
            params: params.clone(),
            member: None,
            checks: vec![NamedCheck {
                identity: "w-w''=c",
                check: fd,
            }],
            notes: vec![
                "unit convection H = 1; M = w^2 sampled numerically".into(),
                format!("absolute tolerance {IMPLICIT_FD_TOL:e} on w w'' - c"),
            ],
            holds,
        })
    }
}

/// Families registered by name.
pub struct FamilyRegistry {
    entries: Vec<Box<dyn CoefficientFamily>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(HFamilyEntry {
            name: "reciprocal-linear",
            kind: HFamily::ReciprocalLinear,
            params: &["a", "b"],
            defaults: &[("a", 1.0), ("b", 2.0)],
        }));
        r.register(Box::new(HFamilyEntry {
            name: "secant",
            kind: HFamily::Secant,
            params: &["B", "omega", "beta"],
            defaults: &[("B", 1.0), ("omega", 1.0), ("beta", 0.0)],
        }));
        r.register(Box::new(HFamilyEntry {
            name: "exponential",
            kind: HFamily::Exponential,
            params: &["C", "alpha"],
            defaults: &[("C", 1.0), ("alpha", 1.0)],
        }));
        r.register(Box::new(LinearSquare));
        r.register(Box::new(Implicit));
        r
    }

    /// Adds a family; a later registration replaces an earlier one with the
    /// same name and kind.
    pub fn register(&mut self, family: Box<dyn CoefficientFamily>) {
        self.entries
            .retain(|f| !(f.name() == family.name() && f.kind() == family.kind()));
        self.entries.push(family);
    }

    pub fn get(&self, kind: FamilyKind, name: &str) -> Option<&dyn CoefficientFamily> {
        self.entries
            .iter()
            .find(|f| f.kind() == kind && f.name() == name)
            .map(|f| f.as_ref())
    }

    pub fn of_kind(&self, kind: FamilyKind) -> impl Iterator<Item = &dyn CoefficientFamily> {
        self.entries
            .iter()
            .filter(move |f| f.kind() == kind)
            .map(|f| f.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burgers::linspace;

    fn env(pairs: &[(&str, f64)]) -> ParamEnv {
        pairs.iter().map(|&(k, v)| (k, v)).collect()
    }

    #[test]
    fn exponential_and_reciprocal_satisfy_h_ode() {
        let xs = linspace(0.0, 1.0, 100);
        let h = h_family(HFamily::Exponential, &env(&[("C", 1.0), ("alpha", 1.0)])).unwrap();
        let c = burgers::h_ode_residual(&h, &ParamEnv::new(), &xs, 1e-10).unwrap();
        assert!(c.relative <= 1e-10, "{}", c.relative);
        let h = h_family(HFamily::ReciprocalLinear, &env(&[("a", 1.0), ("b", 2.0)])).unwrap();
        let c = burgers::h_ode_residual(&h, &ParamEnv::new(), &xs, 1e-10).unwrap();
        assert!(c.relative <= 1e-10, "{}", c.relative);
    }

    #[test]
    fn flat_secant_is_constant() {
        let h = h_family(HFamily::Secant, &env(&[("B", 2.0), ("omega", 0.0), ("beta", 0.4)])).unwrap();
        assert!(h.as_const().is_some(), "{h}");
        let c = burgers::h_ode_residual(&h, &ParamEnv::new(), &linspace(0.0, 1.0, 100), 0.0).unwrap();
        assert_eq!(c.max_abs, 0.0);
    }

    #[test]
    fn degenerate_parameters_are_rejected() {
        assert!(h_family(HFamily::ReciprocalLinear, &env(&[("a", 0.0), ("b", 0.0)])).is_err());
        assert!(h_family(HFamily::Secant, &env(&[("B", 0.0), ("omega", 1.0), ("beta", 0.0)])).is_err());
        assert!(h_family(HFamily::Exponential, &env(&[("C", 0.0), ("alpha", 1.0)])).is_err());
        assert!(h_family(HFamily::Exponential, &env(&[("C", 1.0)])).is_err());
        assert!(m_family_linear_sq(0.0, 0.0).is_err());
        assert!(m_family_implicit(0.0, 0.0, 0.0, Branch::Plus, &[0.0]).is_err());
    }

    #[test]
    fn linear_square_members() {
        let xs = linspace(0.1, 1.0, 100);
        let m = m_family_linear_sq(1.0, 0.0).unwrap();
        let c = burgers::constraint_residual(&m, &Expr::one(), &ParamEnv::new(), &xs, TOL_SYM).unwrap();
        assert!(c.holds);
        let m = m_family_linear_sq(0.0, 1.0).unwrap();
        assert!(m.is_const(1.0), "{m}");
        // (2x - 1)^2 vanishes at x = 1/2: parabolicity fails on grids through it
        let m = m_family_linear_sq(2.0, -1.0).unwrap();
        let xs = linspace(0.0, 1.0, 11);
        assert_eq!(m.eval(0.5, &ParamEnv::new()).unwrap(), 0.0);
        let problem = burgers::BurgersProblem {
            m,
            h: Expr::one(),
            v: Expr::zero(),
            w: Expr::zero(),
            env: ParamEnv::new(),
            domain: (0.0, 1.0),
        };
        assert!(matches!(problem.check(&xs), Err(Error::NonPositiveDiffusivity { .. })));
    }

    #[test]
    fn implicit_starts_at_turning_point_and_increases() {
        let xs = linspace(0.0, 1.0, 201);
        for c in [0.5, 1.0, 2.0] {
            let s = m_family_implicit(c, 0.4, 0.0, Branch::Plus, &xs).unwrap();
            assert!((s.w[0] - 0.2f64.exp()).abs() < 1e-15);
            assert!(s.w.windows(2).all(|p| p[1] > p[0]));
            assert!(s.m.iter().zip(&s.w).all(|(m, w)| (m - w * w).abs() == 0.0));
        }
        let s = m_family_implicit(1.0, 0.0, 0.0, Branch::Minus, &linspace(-1.0, 0.0, 51)).unwrap();
        assert!(s.w.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn implicit_satisfies_defining_relation() {
        let xs = linspace(0.0, 1.0, 1001);
        for c in [0.5, 1.0, 2.0] {
            let s = m_family_implicit(c, 0.0, 0.0, Branch::Plus, &xs).unwrap();
            let check = implicit_fd_check(&s, c, IMPLICIT_FD_TOL).unwrap();
            assert!(check.holds, "c = {c}: {}", check.max_abs);
        }
    }

    #[test]
    fn implicit_negative_c_has_finite_reach() {
        let xs = linspace(0.0, 0.3, 301);
        let s = m_family_implicit(-1.0, 0.0, 0.0, Branch::Plus, &linspace(-0.3, 0.0, 301)).unwrap();
        assert!(s.w.iter().all(|&w| w > 0.0 && w <= 1.0));
        let check = implicit_fd_check(&s, -1.0, IMPLICIT_FD_TOL).unwrap();
        assert!(check.holds, "{}", check.max_abs);
        // wrong side of C2 for the plus branch
        assert!(m_family_implicit(-1.0, 0.0, 0.0, Branch::Plus, &xs[1..]).is_err());
        // beyond the reach sqrt(pi/2)
        assert!(m_family_implicit(-1.0, 0.0, 0.0, Branch::Plus, &[-2.0]).is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = FamilyRegistry::builtin();
        assert_eq!(r.of_kind(FamilyKind::H).count(), 3);
        assert_eq!(r.of_kind(FamilyKind::M).count(), 2);
        for family in r.of_kind(FamilyKind::H).chain(r.of_kind(FamilyKind::M)) {
            let params = family.defaults();
            let samples = family.default_samples(&params).unwrap();
            let check = family.check(&params, &samples).unwrap();
            assert!(check.holds, "{} failed", family.name());
        }
        assert!(r.get(FamilyKind::H, "implicit").is_none());
    }
}
