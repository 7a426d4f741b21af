//! Screens, detector bases and experimental arrangements.
//!
//! A factorization `C^{i1} ⊗ … ⊗ C^{in}` declares `n` screens; choosing a
//! unitary per screen fixes the detectors and hence the product basis
//! `{|k1 … kn>}`. An arrangement is the state's coefficient tensor in that
//! basis, and a [`BasisChange`] carries it to any other basis of the same
//! total dimension.

mod basis;
mod ea;
mod invariance;
mod transport;

pub use basis::{power_of_action, DetectorBasis, Factorization, DEFAULT_MAX_DIM};
pub use ea::{
    build_arrangement, coarse_grain, induced_partition, marginal_intensities, potentia,
    potentia_givtable, ExperimentalArrangement,
};
pub use invariance::{
    check_basis_invariance, check_factorization_invariance, BasisInvarianceReport, Embedding,
    FactorizationInvarianceReport, FactorizationRow, QuantumLab,
};
pub use transport::{transform_arrangement, BasisChange};
