use crate::burgers::{self, BurgersProblem, TransformPair};
use crate::expr::{Expr, ParamEnv};
use crate::grid::Grid1D;
use crate::hopf::{self, TransformedField, DEFAULT_POLE_EPS};
use crate::linsolve::{self, Boundary, HeatOptions, LinearField};
use crate::ode::{self, ForwardDerivation, LinearPotential, OdeProblem};
use crate::{Result, Stage};

use super::report::{Equation, GridMeta, ResidualReport};
use super::residual::{identity_report, ode_residual, pde_residual};

/// Default pass tolerance for the PDE residual.
pub const TOL_PDE: f64 = 1e-3;
/// Default pass tolerance for the ODE residual.
pub const TOL_ODE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BurgersRun {
    pub m: Expr,
    pub h: Expr,
    pub env: ParamEnv,
    pub phi0: Expr,
    pub grid: Grid1D,
    pub boundary: Boundary,
    pub t_end: f64,
    pub nt: usize,
    pub heat: HeatOptions,
    pub tolerance: f64,
    pub constraint_tolerance: f64,
    pub pole_eps: f64,
}

impl BurgersRun {
    pub fn new(m: Expr, h: Expr, env: ParamEnv, phi0: Expr, grid: Grid1D, t_end: f64, nt: usize) -> Self {
        Self {
            m,
            h,
            env,
            phi0,
            grid,
            boundary: Boundary::HoldInitial,
            t_end,
            nt,
            heat: HeatOptions::default(),
            tolerance: TOL_PDE,
            constraint_tolerance: burgers::TOL_SYM,
            pole_eps: DEFAULT_POLE_EPS,
        }
    }
}

/// Everything a Burgers roundtrip produced; stages that never ran are `None`.
#[derive(Debug, Clone)]
pub struct BurgersOutcome {
    pub report: ResidualReport,
    pub constraint: ResidualReport,
    pub problem: Option<BurgersProblem>,
    pub pair: Option<TransformPair>,
    pub field: Option<LinearField>,
    pub transformed: Option<TransformedField>,
}

/// Derivation, compatibility check, heat solve, transform and residual in
/// sequence. An incompatible `(M, H)` stops before the solve and yields a
/// failing report tagged with the constraint stage; other failures are
/// returned as errors tagged with their stage.
pub fn roundtrip_burgers(run: &BurgersRun) -> Result<BurgersOutcome> {
    let xs = run.grid.points();
    let check = burgers::constraint_residual(&run.m, &run.h, &run.env, &xs, run.constraint_tolerance)
        .map_err(|e| e.at(Stage::Constraint))?;
    let constraint = identity_report(Equation::BurgersConstraint, &check);
    if !check.holds {
        let report = ResidualReport::stopped(
            Equation::Burgers,
            GridMeta::new(&run.grid, None),
            run.tolerance,
            Stage::Constraint,
            format!(
                "coefficients are incompatible: relative constraint residual {:e} exceeds {:e}; no solve attempted",
                check.relative, check.tolerance
            ),
        );
        return Ok(BurgersOutcome {
            report,
            constraint,
            problem: None,
            pair: None,
            field: None,
            transformed: None,
        });
    }
    let (problem, pair) = BurgersProblem::derive(
        run.m.clone(),
        run.h.clone(),
        run.env.clone(),
        (run.grid.x0(), run.grid.x1()),
        &xs,
    )
    .map_err(|e| e.at(Stage::Derive))?;
    let field = linsolve::solve_heat(
        &run.m,
        &run.phi0,
        &run.env,
        run.grid,
        &run.boundary,
        run.t_end,
        run.nt,
        run.heat,
    )
    .map_err(|e| e.at(Stage::LinearSolve))?;
    let transformed =
        hopf::apply_transform(&pair, &field, &run.env, run.pole_eps).map_err(|e| e.at(Stage::Transform))?;
    let mut report = pde_residual(&problem, &transformed, run.tolerance).map_err(|e| e.at(Stage::Residual))?;
    if report.degenerate {
        report.notes.push("degenerate field: every point is masked".into());
    }
    if matches!(run.boundary, Boundary::HoldInitial) {
        report
            .notes
            .push("Dirichlet data: endpoint values of the initial profile held fixed".into());
    }
    report.notes.push(format!(
        "theta = {}, dt = {:e}, levels stored every {} step(s)",
        run.heat.theta,
        run.t_end / run.nt as f64,
        run.heat.save_every
    ));
    Ok(BurgersOutcome {
        report,
        constraint,
        problem: Some(problem),
        pair: Some(pair),
        field: Some(field),
        transformed: Some(transformed),
    })
}

#[derive(Debug, Clone)]
pub struct OdeRun {
    pub problem: OdeProblem,
    /// `U` at `u_at`.
    pub u0: f64,
    pub u_at: f64,
    /// `phi` and `phi'` at `phi_at`.
    pub phi0: f64,
    pub dphi0: f64,
    pub phi_at: f64,
    pub grid: Grid1D,
    pub tolerance: f64,
    pub constraint_tolerance: f64,
    pub pole_eps: f64,
}

impl OdeRun {
    /// Initial data at the left end of the grid.
    pub fn new(problem: OdeProblem, u0: f64, phi0: f64, dphi0: f64, grid: Grid1D) -> Self {
        Self {
            problem,
            u0,
            u_at: grid.x0(),
            phi0,
            dphi0,
            phi_at: grid.x0(),
            grid,
            tolerance: TOL_ODE,
            constraint_tolerance: ode::TOL_CONSTRAINT,
            pole_eps: DEFAULT_POLE_EPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub report: ResidualReport,
    pub constraint: ResidualReport,
    pub derivation: ForwardDerivation,
    /// Integrating factor when a `psi'` term was reduced away.
    pub reduction: Option<Expr>,
    pub potential: Option<LinearPotential>,
    pub field: Option<LinearField>,
    pub transformed: Option<TransformedField>,
}

/// Forward derivation, `U` solve, `phi` solve, transform and residual. A
/// `psi'` term is first reduced away; the transform then yields `p psi` and
/// the residual is taken on `psi` in the original equation.
pub fn roundtrip_ode(run: &OdeRun) -> Result<OdeOutcome> {
    let xs = run.grid.points();
    let (p, reduced) = if run.problem.v1.is_some() {
        let (p, reduced) = ode::reduce_v1(&run.problem).map_err(|e| e.at(Stage::Reduce))?;
        (Some(p).filter(|p| !p.is_const(1.0)), reduced)
    } else {
        (None, run.problem.clone())
    };
    let derivation = ode::forward_derive(&reduced, &xs, run.constraint_tolerance).map_err(|e| e.at(Stage::Derive))?;
    let constraint = identity_report(Equation::OdeConstraint, &derivation.constraint);
    if !derivation.constraint.holds {
        let report = ResidualReport::stopped(
            Equation::Ode,
            GridMeta::new(&run.grid, None),
            run.tolerance,
            Stage::Constraint,
            format!(
                "coefficients are not linearizable by this transform: relative constraint residual {:e} exceeds {:e}",
                derivation.constraint.relative, derivation.constraint.tolerance
            ),
        );
        return Ok(OdeOutcome {
            report,
            constraint,
            derivation,
            reduction: p,
            potential: None,
            field: None,
            transformed: None,
        });
    }
    let potential = ode::solve_u_ode(&derivation.u_ode, &reduced.env, run.u0, run.u_at, &run.grid)
        .map_err(|e| e.at(Stage::Potential))?;
    let field = linsolve::solve_linear_ode2(&potential, run.phi_at, run.phi0, run.dphi0, run.grid)
        .map_err(|e| e.at(Stage::LinearSolve))?;
    let mut transformed = hopf::apply_transform(&derivation.pair, &field, &reduced.env, run.pole_eps)
        .map_err(|e| e.at(Stage::Transform))?;
    if let Some(p) = &p {
        let pv = p
            .eval_many(&xs, &run.problem.env)
            .map_err(|e| crate::Error::from(e).at(Stage::Transform))?;
        for (v, p) in transformed.psi.iter_mut().zip(&pv) {
            *v /= p;
        }
    }
    let mut report = ode_residual(&run.problem, &transformed, run.tolerance).map_err(|e| e.at(Stage::Residual))?;
    if report.degenerate {
        report.notes.push("degenerate field: every point is masked".into());
    }
    if p.is_some() {
        report
            .notes
            .push("psi' term removed by xi = p psi before the transform; residual taken on psi".into());
    }
    Ok(OdeOutcome {
        report,
        constraint,
        derivation,
        reduction: p,
        potential: Some(potential),
        field: Some(field),
        transformed: Some(transformed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn incompatible_burgers_stops_at_constraint() {
        let grid = Grid1D::new(0.0, 1.0, 33).unwrap();
        let run = BurgersRun::new(Expr::one(), e("x^2+1"), ParamEnv::new(), e("1"), grid, 0.01, 10);
        let out = roundtrip_burgers(&run).unwrap();
        assert_eq!(out.report.failed_stage, Some(Stage::Constraint));
        assert!(!out.report.passed());
        assert!(out.field.is_none());
        assert!(!out.constraint.passed());
    }

    #[test]
    fn incompatible_ode_stops_at_constraint() {
        let problem = OdeProblem::new(
            e("1"),
            e("a"),
            e("0"),
            e("0"),
            ParamEnv::new().with("a", 1.0),
            (0.0, 3.0),
        );
        let grid = Grid1D::new(0.0, 3.0, 31).unwrap();
        let out = roundtrip_ode(&OdeRun::new(problem, 2.0, 1.0, 0.0, grid)).unwrap();
        assert_eq!(out.report.failed_stage, Some(Stage::Constraint));
        assert!(out.potential.is_none());
    }

    #[test]
    fn stage_errors_are_tagged() {
        let grid = Grid1D::new(0.0, 1.0, 33).unwrap();
        // compatible but M < 0 on the grid
        let run = BurgersRun::new(Expr::c(-1.0), Expr::one(), ParamEnv::new(), e("1"), grid, 0.01, 10);
        let err = roundtrip_burgers(&run).unwrap_err();
        assert!(
            matches!(
                err,
                crate::Error::Stage {
                    stage: Stage::Derive,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn constant_phi_gives_zero_classical_solution() {
        let grid = Grid1D::new(0.0, 1.0, 33).unwrap();
        let run = BurgersRun::new(Expr::c(0.1), Expr::c(-1.0), ParamEnv::new(), e("2"), grid, 0.01, 10);
        let out = roundtrip_burgers(&run).unwrap();
        assert!(out.report.passed());
        assert!(out.report.linf.unwrap() < 1e-12);
    }

    #[test]
    fn psi_prime_term_roundtrip() {
        // reverse-synthesized example with an added psi' term: V1 = -2 p'/p for p = 1 + x/2
        let p = e("1 + x/2");
        let v1 = -2.0 * p.d() / &p;
        let base = ode::reverse_synthesize(
            &e("exp(-2*x) + 1"),
            &e("-2"),
            &e("-2"),
            &ParamEnv::new(),
            (0.0, 3.0),
            &crate::burgers::linspace(0.0, 3.0, 31),
        )
        .unwrap();
        // the original problem whose reduction is `base`:
        // F = p F~, W = p W~ + F p'/p, V = V~ - p''/p, S = S~/p
        let original = OdeProblem {
            f: &p * &base.f,
            w: &p * &base.w + &p * &base.f * p.d() / &p,
            v: &base.v - p.derivative(2) / &p,
            s: &base.s / &p,
            v1: Some(v1),
            env: ParamEnv::new(),
            domain: (0.0, 3.0),
        };
        let grid = Grid1D::with_spacing(0.0, 3.0, 2.5e-4).unwrap();
        let out = roundtrip_ode(&OdeRun::new(original, 2.0, 1.0, 0.0, grid)).unwrap();
        assert!(out.report.passed(), "{:?}", out.report.linf);
        assert!(out.reduction.is_some());
    }
}
