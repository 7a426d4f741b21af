use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::matrix::ComplexMatrix;
use crate::tensor::NORM_TOL;

/// A ket `|x>` with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    components: Vec<Complex64>,
}

impl UnitVector {
    /// Accepts components whose norm is within [`NORM_TOL`] of one.
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::ZeroVector);
        }
        if let Some(pos) = components
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(pos));
        }
        let norm = euclidean_norm(&components);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { components })
    }

    /// Scales any non-zero finite vector to unit norm.
    pub fn normalized(components: Vec<Complex64>) -> Result<Self> {
        let norm = euclidean_norm(&components);
        if !norm.is_finite() {
            return Err(Error::NonFinite(0));
        }
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let scaled = components.into_iter().map(|z| z / norm).collect();
        Self::new(scaled)
    }

    /// Normalizes a real vector.
    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::normalized(components.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Standard basis vector `|k>` of `C^dim` (0-based `k`).
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange(format!("basis index {k} of {dim}")));
        }
        let mut components = vec![Complex64::new(0.0, 0.0); dim];
        components[k] = Complex64::new(1.0, 0.0);
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &UnitVector) -> Complex64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Same ket times a global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            components: self.components.iter().map(|z| z * phase).collect(),
        }
    }
}

fn euclidean_norm(components: &[Complex64]) -> f64 {
    components.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `ν(|x>) = |x><x|`, the rank-one projector onto `x`.
///
/// The map forgets the global phase of `x`, so it is injective on rays but
/// not on vectors. Mixed states such as `I/2` have rank above one and lie
/// outside its image.
pub fn nu_embed(x: &UnitVector) -> ComplexMatrix {
    ComplexMatrix::outer(x.components(), x.components())
}
