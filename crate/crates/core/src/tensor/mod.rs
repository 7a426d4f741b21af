//! Dense complex linear and multi-index algebra shared by every other module.
//!
//! Multi-indices are flattened row-major with the first screen (axis) as the
//! most significant digit, so `kron(a, b)` and `|k1 k2>` enumerate in the same
//! order.

mod matrix;
mod multi;
mod vector;

pub use matrix::{
    commutator_norm, is_projector, is_unitary, kron, kron_all, partial_trace, projector_deviation,
    unitarity_deviation, ComplexMatrix, RANK_TOL,
};
pub use multi::{flat_index, multi_indices, unflatten, ComplexTensor, MultiIndices};
pub use vector::{nu_embed, UnitVector};

/// Normalization tolerance for unit vectors.
pub const NORM_TOL: f64 = 1e-9;

/// Default tolerance for projector, unitarity and state predicates.
pub const PREDICATE_TOL: f64 = 1e-9;

/// Tolerance for exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;
