//! Numerical building blocks shared by the solvers.

pub mod interp;
pub mod quadrature;
pub mod rk45;
pub mod roots;
pub mod tridiag;
