//! Bundled end-to-end verification cases, selectable by name.

use crate::expr::{parse, Expr, ParamEnv};
use crate::grid::Grid1D;
use crate::linsolve::{Boundary, HeatOptions};
use crate::ode::{self, OdeProblem};
use crate::Result;

use super::report::ResidualReport;
use super::roundtrip::{roundtrip_burgers, roundtrip_ode, BurgersRun, OdeRun};

/// Spacing of the bundled ODE cases. At 1e-3 the residual stencil's own
/// truncation on the exact solution is about 3.8e-6.
pub const ODE_CASE_DX: f64 = 2.5e-4;

pub trait VerificationCase: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self) -> Result<ResidualReport>;
}

/// `1 + amp * exp(-(x - 1/2)^2 / (2 s))` evolved by the free-space heat kernel
/// with diffusivity `nu`, in `x` and the parameter `t`.
pub fn gaussian_heat_solution(amp: f64, s: f64, nu: f64) -> Expr {
    let width = format!("({s:?} + 2*{nu:?}*t)");
    parse(&format!("1 + {amp:?}*sqrt({s:?}/{width})*exp(-(x-0.5)^2/(2*{width}))")).expect("generated expression parses")
}

/// A Burgers roundtrip whose heat problem uses the exact Gaussian solution as
/// Dirichlet data.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_burgers_run(
    m: f64,
    h: Expr,
    env: ParamEnv,
    amp: f64,
    s: f64,
    n: usize,
    t_end: f64,
    nt: usize,
    save_every: usize,
) -> Result<BurgersRun> {
    let exact = gaussian_heat_solution(amp, s, m);
    let phi0 = exact.clone();
    let grid = Grid1D::new(0.0, 1.0, n)?;
    let mut run = BurgersRun::new(Expr::c(m), h, env.with("t", 0.0), phi0, grid, t_end, nt);
    run.boundary = Boundary::Dirichlet {
        left: exact.clone(),
        right: exact,
    };
    run.heat = HeatOptions { theta: 0.5, save_every };
    Ok(run)
}

struct ClassicalBurgers;

impl VerificationCase for ClassicalBurgers {
    fn name(&self) -> &'static str {
        "classical-burgers"
    }

    fn description(&self) -> &'static str {
        "M = 0.1, H = -1, phi0 = 1 + 0.5 exp(-50 (x-1/2)^2) on [0,1], dx = 1/512, t in [0, 0.05]"
    }

    fn run(&self) -> Result<ResidualReport> {
        let run = gaussian_burgers_run(0.1, Expr::c(-1.0), ParamEnv::new(), 0.5, 0.01, 513, 0.05, 20_000, 4)?;
        Ok(roundtrip_burgers(&run)?
            .report
            .with_note("exact free-space solution used as Dirichlet data"))
    }
}

struct ExponentialConvection;

impl VerificationCase for ExponentialConvection {
    fn name(&self) -> &'static str {
        "paper-sec2-example"
    }

    fn description(&self) -> &'static str {
        "M = 1, H = exp(x), phi0 = 1 + 0.5 exp(-2 (x-1/2)^2) on [0,1], dx = 1/256, t in [0, 0.05]"
    }

    fn run(&self) -> Result<ResidualReport> {
        let run = gaussian_burgers_run(1.0, parse("exp(x)")?, ParamEnv::new(), 0.5, 0.25, 257, 0.05, 5_000, 1)?;
        Ok(roundtrip_burgers(&run)?
            .report
            .with_note("exact free-space solution used as Dirichlet data"))
    }
}

/// `psi'' = (4a^2 + psi') psi + a psi^2` with `a = 1`.
pub fn bessel_problem(a: f64) -> OdeProblem {
    OdeProblem::new(
        Expr::one(),
        Expr::param("a"),
        parse("4*a^2").expect("literal parses"),
        Expr::zero(),
        ParamEnv::new().with("a", a),
        (0.0, 3.0),
    )
}

struct BesselExample;

impl VerificationCase for BesselExample {
    fn name(&self) -> &'static str {
        "paper-sec3-bessel"
    }

    fn description(&self) -> &'static str {
        "F = 1, W = a, V = 4a^2, S = 0 with a = 1, U(0) = 2, (phi, phi')(0) = (1, 0) on [0,3], dx = 2.5e-4"
    }

    fn run(&self) -> Result<ResidualReport> {
        let grid = Grid1D::with_spacing(0.0, 3.0, ODE_CASE_DX)?;
        Ok(roundtrip_ode(&OdeRun::new(bessel_problem(1.0), 2.0, 1.0, 0.0, grid))?.report)
    }
}

struct ReverseSynthetic;

impl VerificationCase for ReverseSynthetic {
    fn name(&self) -> &'static str {
        "reverse-synthetic-ode"
    }

    fn description(&self) -> &'static str {
        "equation synthesized from Q = -2, P = -2, U = exp(-2x) + 1, then solved forward on [0,3], dx = 2.5e-4"
    }

    fn run(&self) -> Result<ResidualReport> {
        let grid = Grid1D::with_spacing(0.0, 3.0, ODE_CASE_DX)?;
        let u = parse("exp(-2*x) + 1")?;
        let env = ParamEnv::new();
        let problem = ode::reverse_synthesize(&u, &Expr::c(-2.0), &Expr::c(-2.0), &env, (0.0, 3.0), &grid.points())?;
        let u0 = u.eval(0.0, &env)?;
        Ok(roundtrip_ode(&OdeRun::new(problem, u0, 1.0, 0.0, grid))?.report)
    }
}

pub struct CaseRegistry {
    cases: Vec<Box<dyn VerificationCase>>,
}

impl Default for CaseRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl CaseRegistry {
    pub fn builtin() -> Self {
        let mut r = CaseRegistry { cases: Vec::new() };
        r.register(Box::new(ClassicalBurgers));
        r.register(Box::new(ExponentialConvection));
        r.register(Box::new(BesselExample));
        r.register(Box::new(ReverseSynthetic));
        r
    }

    /// Adds a case, replacing any existing case with the same name.
    pub fn register(&mut self, case: Box<dyn VerificationCase>) {
        self.cases.retain(|c| c.name() != case.name());
        self.cases.push(case);
    }

    pub fn get(&self, name: &str) -> Option<&dyn VerificationCase> {
        self.cases.iter().find(|c| c.name() == name).map(|c| c.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn VerificationCase> {
        self.cases.iter().map(|c| c.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.cases.iter().map(|c| c.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_solution_expression() {
        let e = gaussian_heat_solution(0.5, 0.01, 0.1);
        let env = ParamEnv::new().with("t", 0.0);
        assert!((e.eval(0.5, &env).unwrap() - 1.5).abs() < 1e-15);
        let want = 1.0 + 0.5 * (-50.0f64 * 0.04).exp();
        assert!((e.eval(0.3, &env).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn registry_has_bundled_cases() {
        let r = CaseRegistry::builtin();
        assert_eq!(
            r.names(),
            [
                "classical-burgers",
                "paper-sec2-example",
                "paper-sec3-bessel",
                "reverse-synthetic-ode"
            ]
        );
        assert!(r.get("nope").is_none());
    }

    #[test]
    fn ode_cases_pass() {
        let r = CaseRegistry::builtin();
        for name in ["paper-sec3-bessel", "reverse-synthetic-ode"] {
            let report = r.get(name).unwrap().run().unwrap();
            assert!(report.passed(), "{name}: {:?}", report.linf);
        }
    }
}
