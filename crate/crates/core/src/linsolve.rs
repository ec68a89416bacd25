//! Solvers for the linear partners: `phi_t = M(x) phi_xx` on a bounded interval
//! with Dirichlet data, and `phi'' = U(x) phi` as an initial value problem.
//! Both return `phi` together with its spatial derivative, which the transform
//! consumes directly.

use crate::expr::{Expr, ParamEnv};
use crate::grid::Grid1D;
use crate::numeric::rk45::{self, Dopri5Options};
use crate::numeric::tridiag;
use crate::ode::LinearPotential;
use crate::{Error, Result};

/// Sampled `phi` and `phi_x`. For time-dependent fields the arrays hold one
/// row of `grid.len()` values per entry of `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    pub grid: Grid1D,
    pub times: Option<Vec<f64>>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl LinearField {
    /// Wraps sampled values, checking shapes and finiteness.
    pub fn new(grid: Grid1D, times: Option<Vec<f64>>, phi: Vec<f64>, dphi: Vec<f64>) -> Result<Self> {
        let levels = times.as_ref().map_or(1, Vec::len);
        let expected = levels * grid.len();
        if phi.len() != expected || dphi.len() != expected {
            return Err(Error::InvalidInput(format!(
                "field shape mismatch: expected {expected} values, got {} and {}",
                phi.len(),
                dphi.len()
            )));
        }
        if let Some(i) = phi.iter().chain(&dphi).position(|v| !v.is_finite()) {
            let i = i % expected;
            return Err(Error::Numeric(format!(
                "non-finite field value at x = {}",
                grid.x(i % grid.len())
            )));
        }
        Ok(Self { grid, times, phi, dphi })
    }

    pub fn levels(&self) -> usize {
        self.times.as_ref().map_or(1, Vec::len)
    }

    pub fn phi_level(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.phi[k * n..(k + 1) * n]
    }

    pub fn dphi_level(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.dphi[k * n..(k + 1) * n]
    }
}

/// Dirichlet data for the heat equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Endpoint values of the initial profile held fixed.
    HoldInitial,
    /// Expressions evaluated at the endpoint `x` with parameter `t` bound to
    /// the current time.
    Dirichlet { left: Expr, right: Expr },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatOptions {
    /// 1 is implicit Euler, 0.5 the trapezoidal rule.
    pub theta: f64,
    /// Keep every `save_every`-th time level (the first and last are always
    /// kept; `nt` must be a multiple).
    pub save_every: usize,
}

impl Default for HeatOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            save_every: 1,
        }
    }
}

/// Theta-method time stepping for `phi_t = M(x) phi_xx` with second-order
/// central differences in space; `phi_x` comes from fourth-order differences.
#[allow(clippy::too_many_arguments)]
pub fn solve_heat(
    m: &Expr,
    phi0: &Expr,
    env: &ParamEnv,
    grid: Grid1D,
    bc: &Boundary,
    t_end: f64,
    nt: usize,
    opts: HeatOptions,
) -> Result<LinearField> {
    let HeatOptions { theta, save_every } = opts;
    if nt == 0 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput("heat solve needs nt >= 1 and t_end > 0".into()));
    }
    if !(0.5..=1.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0.5, 1], got {theta}")));
    }
    if save_every == 0 || !nt.is_multiple_of(save_every) {
        return Err(Error::InvalidInput(format!(
            "save_every = {save_every} must divide nt = {nt}"
        )));
    }
    let n = grid.len();
    let xs = grid.points();
    let mv = m.eval_many(&xs, env)?;
    if let Some((i, &v)) = mv.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NonPositiveDiffusivity { x: xs[i], value: v });
    }
    let mut phi = phi0.eval_many(&xs, env)?;
    let (hold_left, hold_right) = (phi[0], phi[n - 1]);
    let boundary_at = |t: f64| -> Result<(f64, f64)> {
        match bc {
            Boundary::HoldInitial => Ok((hold_left, hold_right)),
            Boundary::Dirichlet { left, right } => {
                let env_t = env.clone().with("t", t);
                Ok((left.eval(grid.x0(), &env_t)?, right.eval(grid.x1(), &env_t)?))
            }
        }
    };
    let (l0, r0) = boundary_at(0.0)?;
    phi[0] = l0;
    phi[n - 1] = r0;

    let dt = t_end / nt as f64;
    let dx = grid.dx();
    let lam: Vec<f64> = mv.iter().map(|m| m * dt / (dx * dx)).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        lower[i] = -theta * lam[i];
        diag[i] = 1.0 + 2.0 * theta * lam[i];
        upper[i] = -theta * lam[i];
    }

    let saved = nt / save_every + 1;
    let mut times = Vec::with_capacity(saved);
    let mut field = Vec::with_capacity(saved * n);
    times.push(0.0);
    field.extend_from_slice(&phi);
    let mut rhs = vec![0.0; n];
    for step in 1..=nt {
        let t = if step == nt { t_end } else { step as f64 * dt };
        for i in 1..n - 1 {
            rhs[i] = phi[i] + (1.0 - theta) * lam[i] * (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]);
        }
        let (l, r) = boundary_at(t)?;
        rhs[0] = l;
        rhs[n - 1] = r;
        phi = tridiag::solve(&lower, &diag, &upper, &rhs)
            .ok_or_else(|| Error::Numeric(format!("singular heat system at t = {t}")))?;
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite heat solution at t = {t}")));
        }
        if step % save_every == 0 {
            times.push(t);
            field.extend_from_slice(&phi);
        }
    }
    let dphi: Vec<f64> = field.chunks_exact(n).flat_map(|row| gradient4(row, dx)).collect();
    LinearField::new(grid, Some(times), field, dphi)
}

/// Fourth-order first derivative: centered inside, one-sided in the two
/// points nearest each end. Needs at least five samples.
pub fn gradient4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "fourth-order gradient needs 5 points");
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    }
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    let k = n - 1;
    d[k] = -(-25.0 * f[k] + 48.0 * f[k - 1] - 36.0 * f[k - 2] + 16.0 * f[k - 3] - 3.0 * f[k - 4]) / (12.0 * h);
    d[k - 1] = -(-3.0 * f[k] - 10.0 * f[k - 1] + 18.0 * f[k - 2] - 6.0 * f[k - 3] + f[k - 4]) / (12.0 * h);
    d
}

/// Integrates `(phi, phi')' = (phi', U phi)` from `x0` with an adaptive 5(4)
/// pair at tolerance 1e-10, stepping onto every grid point.
pub fn solve_linear_ode2(u: &LinearPotential, x0: f64, phi0: f64, dphi0: f64, grid: Grid1D) -> Result<LinearField> {
    let xs = grid.points();
    let sol = rk45::integrate_dense(
        |x, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], u.eval(x)? * y[0]]) },
        x0,
        [phi0, dphi0],
        &xs,
        &Dopri5Options {
            land_on_outputs: true,
            ..Dopri5Options::default()
        },
    )
    .map_err(|e| match e {
        rk45::OdeError::Rhs(inner) => inner,
        other => Error::Numeric(format!("linear ODE integration: {other}")),
    })?;
    LinearField::new(
        grid,
        None,
        sol.y.iter().map(|y| y[0]).collect(),
        sol.y.iter().map(|y| y[1]).collect(),
    )
}
