//! Space-time isogeometric solver for time-periodic incompressible flow.
//!
//! The crate builds (2+1)-dimensional NURBS meshes in which time is the last
//! parametric direction, assembles a residual-based stabilized formulation of
//! the incompressible Navier-Stokes equations with weakly enforced boundary
//! conditions, and marches a pseudo-time iteration until the time-periodic
//! solution is reached. Post-processing recovers boundary forces either from
//! the weak-boundary traction terms or from a conservative auxiliary flux.

pub mod error;
pub mod quadrature;

pub mod nurbs;

pub mod mesh;

pub mod formulation;

pub mod solver;

pub mod postprocess;

pub mod driver;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
