use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tensor::{
    commutator_norm, nu_embed, projector_deviation, ComplexMatrix, UnitVector, PREDICATE_TOL,
};

/// An orthogonal projector, i.e. a vertex of the graph of powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Power {
    matrix: ComplexMatrix,
}

impl Power {
    /// Validates `matrix` as a projector at the default tolerance.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, PREDICATE_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        matrix.dim()?;
        let (idempotence, hermiticity) = projector_deviation(&matrix);
        if idempotence > tol || hermiticity > tol {
            return Err(Error::NotAProjector {
                idempotence,
                hermiticity,
            });
        }
        Ok(Self { matrix })
    }

    /// For matrices that are projectors by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        debug_assert!(crate::tensor::is_projector(&matrix, 1e-8));
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// Rank-one power `|v><v|`.
    pub fn from_vector(v: &UnitVector) -> Self {
        Self {
            matrix: nu_embed(v),
        }
    }

    /// Sum of a family of powers on `C^dim`; the result must again be a
    /// projector (true for mutually orthogonal families).
    pub fn sum<'a>(dim: usize, family: impl IntoIterator<Item = &'a Power>) -> Result<Self> {
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for p in family {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            acc = &acc + &p.matrix;
        }
        Self::new(acc)
    }

    /// `I - P`.
    pub fn complement(&self) -> Self {
        Self {
            matrix: &ComplexMatrix::identity(self.dim()) - &self.matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().max(0.0) as usize
    }
}

/// A finite induced subgraph of the graph of powers: vertices are powers,
/// edges join commuting pairs.
#[derive(Debug, Clone)]
pub struct PowerGraph {
    vertices: Vec<Power>,
    edges: BTreeSet<(usize, usize)>,
}

impl PowerGraph {
    pub fn vertices(&self) -> &[Power] {
        &self.vertices
    }

    /// Edges as ordered pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn is_complete(&self) -> bool {
        let n = self.vertices.len();
        self.edges.len() == n * n.saturating_sub(1) / 2
    }
}

/// Joins every pair of powers whose commutator has Frobenius norm `<= tol`.
pub fn power_graph(powers: &[Power], tol: f64) -> Result<PowerGraph> {
    if let Some(first) = powers.first() {
        if let Some(bad) = powers.iter().find(|p| p.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
    }
    let mut edges = BTreeSet::new();
    for i in 0..powers.len() {
        for j in i + 1..powers.len() {
            if commutator_norm(powers[i].matrix(), powers[j].matrix())? <= tol {
                edges.insert((i, j));
            }
        }
    }
    Ok(PowerGraph {
        vertices: powers.to_vec(),
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_projectors() {
        let half = ComplexMatrix::diag_real(&[0.5, 0.5]);
        assert!(matches!(Power::new(half), Err(Error::NotAProjector { .. })));
        assert!(matches!(
            Power::new(ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn complement_and_rank() {
        let p = Power::from_vector(&UnitVector::basis(3, 1).unwrap());
        assert_eq!(p.rank(), 1);
        assert_eq!(p.complement().rank(), 2);
        assert_eq!(Power::identity(4).rank(), 4);
        assert_eq!(Power::zero(4).rank(), 0);
    }

    #[test]
    fn commuting_quadruple_is_complete() {
        let p = Power::from_vector(&UnitVector::from_real(&[1.0, 2.0]).unwrap());
        let family = [
            p.clone(),
            p.complement(),
            Power::identity(2),
            Power::zero(2),
        ];
        let g = power_graph(&family, 1e-9).unwrap();
        assert!(g.is_complete());
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn z_and_x_projectors_do_not_commute() {
        let zero = Power::from_vector(&UnitVector::basis(2, 0).unwrap());
        let plus = Power::from_vector(&UnitVector::from_real(&[1.0, 1.0]).unwrap());
        let g = power_graph(&[zero, plus], 1e-9).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn diagonal_projectors_of_c3_commute() {
        let mut family = Vec::new();
        for mask in 0u8..8 {
            let diag: Vec<f64> = (0..3).map(|k| f64::from((mask >> k) & 1)).collect();
            family.push(Power::new(ComplexMatrix::diag_real(&diag)).unwrap());
        }
        let g = power_graph(&family, 1e-9).unwrap();
        assert!(g.is_complete());
        assert!(!g.has_edge(3, 3));
    }

    #[test]
    fn mixed_dimensions_fail() {
        let err = power_graph(&[Power::identity(2), Power::identity(3)], 1e-9);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
