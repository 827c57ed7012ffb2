//! Discrete weak form of the periodic space-time flow problem: Galerkin
//! terms, pseudo-transient continuation, residual-based multiscale
//! stabilization, weak wall conditions, and outflow stabilization, evaluated
//! as element-level residuals and tangents.

mod basis;
mod kernel;
mod stab;

pub use basis::{eval_local_basis, DirEval, LocalBasis};
pub use kernel::{
    element_cps, element_quadrature, face_quadrature, ElementMatrices, FaceQp, FlowProperties,
    LocalState, PseudoStep, QpData, WeakForm,
};
pub use stab::{tau_boundary, tau_continuity, tau_momentum, C_I, C_IB};
