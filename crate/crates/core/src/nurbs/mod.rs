//! Tensor-product NURBS: knot vectors, basis evaluation, patches, curve
//! interpolation, and geometry-preserving knot refinement.

mod basis;
mod interpolate;
mod knots;
mod patch;

pub use basis::{eval_basis_ders, BasisEval};
pub use interpolate::{interpolate_curve, interpolate_with_kv};
pub use knots::KnotVector;
pub use patch::{GeomEval, NurbsPatch};
