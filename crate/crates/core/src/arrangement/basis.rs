use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::isa::Power;
use crate::tensor::{
    flat_index, kron_all, multi_indices, unitarity_deviation, ComplexMatrix, PREDICATE_TOL,
};

/// Largest total dimension accepted unless overridden.
pub const DEFAULT_MAX_DIM: usize = 64;

/// Screen structure `C^{i1} ⊗ … ⊗ C^{in}`: `n` screens, screen `j` with `i_j`
/// detector places.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    screen_dims: Vec<usize>,
}

impl Factorization {
    pub fn new(screen_dims: Vec<usize>) -> Result<Self> {
        Self::with_max_dim(screen_dims, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(screen_dims: Vec<usize>, max_dim: usize) -> Result<Self> {
        if screen_dims.is_empty() {
            return Err(Error::InvalidFactorization("no screens".into()));
        }
        if let Some((j, d)) = screen_dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::InvalidFactorization(format!(
                "screen {j} has {d} places, need at least 2"
            )));
        }
        let dim = screen_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if dim > max_dim {
            return Err(Error::DimensionTooLarge { dim, max: max_dim });
        }
        Ok(Self { screen_dims })
    }

    /// A single screen with `dim` places.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn screen_dims(&self) -> &[usize] {
        &self.screen_dims
    }

    pub fn screens(&self) -> usize {
        self.screen_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.screen_dims.iter().product()
    }

    /// Flat position of a multi-index (0-based per screen).
    pub fn flat(&self, indices: &[usize]) -> Result<usize> {
        flat_index(&self.screen_dims, indices)
    }
}

/// Detectors chosen on every screen of a factorization: column `k` of the
/// unitary for screen `j` is detector `k` of that screen. The product basis
/// vector `|k1 … kn>` is the Kronecker product of the chosen columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBasis {
    factorization: Factorization,
    unitaries: Vec<ComplexMatrix>,
    product: ComplexMatrix,
}

impl DetectorBasis {
    pub fn new(factorization: Factorization, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        if unitaries.len() != factorization.screens() {
            return Err(Error::DimensionMismatch {
                expected: factorization.screens(),
                found: unitaries.len(),
            });
        }
        for (screen, (u, &d)) in unitaries
            .iter()
            .zip(factorization.screen_dims())
            .enumerate()
        {
            if u.rows() != d || u.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.rows().max(u.cols()),
                });
            }
            let deviation = unitarity_deviation(u);
            if deviation > PREDICATE_TOL {
                return Err(Error::NotUnitary { screen, deviation });
            }
        }
        let product = kron_all(&unitaries);
        let deviation = unitarity_deviation(&product);
        if deviation > PREDICATE_TOL {
            return Err(Error::NotUnitary {
                screen: usize::MAX,
                deviation,
            });
        }
        Ok(Self {
            factorization,
            unitaries,
            product,
        })
    }

    /// Standard basis on every screen.
    pub fn computational(factorization: Factorization) -> Self {
        let unitaries = factorization
            .screen_dims()
            .iter()
            .map(|&d| ComplexMatrix::identity(d))
            .collect();
        Self::new(factorization, unitaries).expect("identity screens are unitary")
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    pub fn screen_dims(&self) -> &[usize] {
        self.factorization.screen_dims()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn total_dim(&self) -> usize {
        self.factorization.total_dim()
    }

    /// Matrix whose column `flat(k)` is `|k1 … kn>`.
    pub fn product_matrix(&self) -> &ComplexMatrix {
        &self.product
    }

    pub fn vector(&self, indices: &[usize]) -> Result<Vec<Complex64>> {
        Ok(self.product.column(self.factorization.flat(indices)?))
    }

    /// All multi-indices in flattened order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> {
        multi_indices(self.screen_dims())
    }

    /// Same screens and detectors up to `tol` entrywise.
    pub fn approx_eq(&self, other: &DetectorBasis, tol: f64) -> bool {
        self.factorization == other.factorization
            && self
                .unitaries
                .iter()
                .zip(&other.unitaries)
                .all(|(a, b)| a.max_abs_diff(b).is_ok_and(|d| d <= tol))
    }
}

/// The power `|k1 … kn><k1 … kn|` determined by a product basis element.
pub fn power_of_action(basis: &DetectorBasis, indices: &[usize]) -> Result<Power> {
    let v = basis.vector(indices)?;
    Ok(Power::from_matrix_unchecked(ComplexMatrix::outer(&v, &v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::is_projector;

    fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).unwrap()
    }

    #[test]
    fn factorization_limits() {
        assert!(Factorization::new(vec![]).is_err());
        assert!(Factorization::new(vec![2, 1]).is_err());
        assert!(matches!(
            Factorization::new(vec![4, 4, 8]),
            Err(Error::DimensionTooLarge { dim: 128, max: 64 })
        ));
        assert!(Factorization::with_max_dim(vec![4, 4, 8], 128).is_ok());
        let f = Factorization::new(vec![2, 3]).unwrap();
        assert_eq!(f.total_dim(), 6);
        assert_eq!(f.flat(&[1, 2]).unwrap(), 5);
    }

    #[test]
    fn rejects_non_unitary_screen() {
        let f = Factorization::new(vec![2]).unwrap();
        let shear = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            DetectorBasis::new(f.clone(), vec![shear]),
            Err(Error::NotUnitary { screen: 0, .. })
        ));
        assert!(matches!(
            DetectorBasis::new(f, vec![ComplexMatrix::identity(3)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn computational_power_of_action() {
        let basis = DetectorBasis::computational(Factorization::new(vec![2, 2]).unwrap());
        let p = power_of_action(&basis, &[0, 0]).unwrap();
        assert_eq!(p.matrix(), &ComplexMatrix::diag_real(&[1.0, 0.0, 0.0, 0.0]));
        let q = power_of_action(&basis, &[1, 0]).unwrap();
        assert_eq!(q.matrix(), &ComplexMatrix::diag_real(&[0.0, 0.0, 1.0, 0.0]));
        assert!(matches!(
            power_of_action(&basis, &[0, 2]),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn hadamard_power_of_action() {
        let basis =
            DetectorBasis::new(Factorization::single(2).unwrap(), vec![hadamard()]).unwrap();
        let p = power_of_action(&basis, &[0]).unwrap();
        let want = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(p.matrix().max_abs_diff(&want).unwrap() < 1e-15);
        assert!(is_projector(p.matrix(), 1e-12));
        assert_eq!(p.matrix().rank(), 1);
    }

    #[test]
    fn product_vectors_follow_screen_order() {
        // Screen 1 Hadamard, screen 2 computational: |k1 k2> = H e_k1 ⊗ e_k2.
        let f = Factorization::new(vec![2, 2]).unwrap();
        let basis = DetectorBasis::new(f, vec![hadamard(), ComplexMatrix::identity(2)]).unwrap();
        let v = basis.vector(&[1, 0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [h, 0.0, -h, 0.0];
        for (a, b) in v.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }
}
