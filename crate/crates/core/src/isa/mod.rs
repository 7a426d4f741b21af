//! Intensive states of affairs and the finite graph of powers.
//!
//! A state `Ψ` assigns every power (orthogonal projector) an intensity in
//! `[0, 1]` with `Ψ(I) = 1`, additively over mutually orthogonal families.
//! At finite dimension such a valuation is carried by a density operator and
//! evaluated as `Ψ(P) = Tr(ρP)`.

mod power;
mod state;
mod table;

pub use power::{power_graph, Power, PowerGraph};
pub use state::{
    check_additivity, clamp_unit, intensity, make_isa, mix, AdditivityReport, IntensiveState,
};
pub use table::{fit_isa, traceless_hermitian_basis, FitOutcome, FitReport, GivTable};
