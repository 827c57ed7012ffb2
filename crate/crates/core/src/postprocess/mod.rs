//! Conservation diagnostics and artifact extraction on converged states:
//! global mass and momentum bookkeeping, the auxiliary boundary flux, wall
//! force histories, convergence-order estimation, and field exports.

mod export;
mod flux;
mod reference;
mod sample;
mod traction;

pub use export::{export_fields, export_force_csv, render_run_summary};
pub use flux::{
    auxiliary_flux, global_mass_report, momentum_balance, AuxiliaryFlux, MomentumBalance,
};
pub use reference::{effective_aoa, richardson_extrapolate, RichardsonResult};
pub use traction::{
    conservative_traction, force_coefficients, traction_balance, ForceCoefficients,
    TractionBalance, TractionSeries,
};
