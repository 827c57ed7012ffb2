//! Constraint handling, assembly, linear algebra, and the pseudo-time march.

mod assemble;
mod dofmap;
mod linear;
mod march;
mod sparse;

pub use assemble::{free_dof_positions, raw_residual, Assembler};
pub use dofmap::{build_dof_map, DofClass, DofMap, Resolved, FIELDS};
pub use linear::{LinearConfig, LinearMethod, LinearSolver};
pub use march::{
    free_stream_state, pseudo_transient_march, ConvergenceReport, HistoryRow, SolverConfig,
};
pub use sparse::{dissection_order, lu_factor, CscMatrix, LuFactors};
