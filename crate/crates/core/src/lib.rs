//! Intensive states of affairs, multi-screen experimental arrangements and
//! basis transport for finite-dimensional quantum systems.

pub mod arrangement;
pub mod cli;
pub mod contextuality;
pub mod error;
pub mod isa;
pub mod lab;
pub mod random;
pub mod tensor;

pub use error::{Error, Result, StateViolation};
