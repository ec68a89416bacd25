//! Residual oracles and end-to-end roundtrips.
//!
//! Candidate fields are substituted back into the nonlinear equations with
//! explicit second-order centered differences. Those stencils are independent
//! of the implicit tridiagonal steps and adaptive integrators that produced
//! the fields.

pub mod cases;
mod report;
mod residual;
mod roundtrip;

pub use report::{Equation, GridMeta, ResidualReport, ResidualSamples, Verdict};
pub use residual::{identity_report, ode_residual, pde_residual, POLE_DILATION, SPATIAL_TRIM};
pub use roundtrip::{
    roundtrip_burgers, roundtrip_ode, BurgersOutcome, BurgersRun, OdeOutcome, OdeRun, TOL_ODE, TOL_PDE,
};
