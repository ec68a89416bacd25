//! Generalized Cole-Hopf linearization.
//!
//! Nonlinear convective equations are paired with linear ones through
//! `psi = P + Q * phi' / phi`:
//!
//! * the Burgers-type PDE `psi_t - M psi_xx = H psi psi_x + V psi + W psi^2`
//!   with the variable-coefficient heat equation `phi_t = M phi_xx`;
//! * the ODE `psi'' = S + (V + F psi') psi + W psi^2` with `phi'' = U phi`.
//!
//! [`burgers`] and [`ode`] derive transform pairs and induced coefficients,
//! [`linsolve`] solves the linear equations, [`hopf`] applies the transform and
//! [`verify`] substitutes the result back into the nonlinear equation with
//! independent finite-difference stencils. Named coefficient families and
//! bundled verification cases live in registries ([`families`],
//! [`verify::cases`]).

pub mod burgers;
mod error;
pub mod expr;
pub mod families;
pub mod grid;
pub mod hopf;
pub mod linsolve;
pub mod numeric;
pub mod ode;
pub mod verify;

pub use error::{Error, Result, Stage};
pub use expr::{parse, Expr, ParamEnv};
pub use grid::Grid1D;
