use num_complex::Complex64;

use crate::arrangement::basis::DetectorBasis;
use crate::arrangement::ea::ExperimentalArrangement;
use crate::error::{Error, Result};
use crate::tensor::{
    multi_indices, unitarity_deviation, ComplexMatrix, ComplexTensor, PREDICATE_TOL,
};

/// Change-of-basis coefficients `λ_κ^k` relating a source detector basis
/// `{|k>}` to a target `{|κ>}` through `|k> = Σ_κ λ_κ^k |κ>`.
///
/// `λ` has shape `(ι1, …, ιm, i1, …, in)`: target axes first, then source
/// axes. Flattened it is an `N × N` unitary `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChange {
    source: DetectorBasis,
    target: DetectorBasis,
    lambda: ComplexTensor,
}

impl BasisChange {
    /// Explicit coefficients, given as the flattened matrix `Λ[κ][k]`.
    pub fn new(
        source: DetectorBasis,
        target: DetectorBasis,
        lambda: ComplexMatrix,
    ) -> Result<Self> {
        let n = source.total_dim();
        if target.total_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: target.total_dim(),
            });
        }
        if lambda.rows() != n || lambda.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lambda.rows().max(lambda.cols()),
            });
        }
        let deviation = unitarity_deviation(&lambda);
        if deviation > PREDICATE_TOL {
            return Err(Error::NonUnitaryLambda { deviation });
        }
        let lambda =
            ComplexTensor::from_matrix(&lambda, target.screen_dims(), source.screen_dims())?;
        Ok(Self {
            source,
            target,
            lambda,
        })
    }

    /// Derives `λ_κ^k = <κ|k>` from the two product bases.
    pub fn between(source: &DetectorBasis, target: &DetectorBasis) -> Result<Self> {
        if source.total_dim() != target.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: source.total_dim(),
                found: target.total_dim(),
            });
        }
        let lambda = &target.product_matrix().adjoint() * source.product_matrix();
        Self::new(source.clone(), target.clone(), lambda)
    }

    /// `λ = I`: relabels the same vectors under a new screen structure.
    pub fn identity(source: DetectorBasis, target: DetectorBasis) -> Result<Self> {
        let n = source.total_dim();
        Self::new(source, target, ComplexMatrix::identity(n))
    }

    pub fn source(&self) -> &DetectorBasis {
        &self.source
    }

    pub fn target(&self) -> &DetectorBasis {
        &self.target
    }

    pub fn lambda(&self) -> &ComplexTensor {
        &self.lambda
    }

    /// `Λ`, rows indexed by target, columns by source.
    pub fn lambda_matrix(&self) -> ComplexMatrix {
        self.lambda
            .to_matrix(self.target.factorization().screens())
            .expect("shape checked at construction")
    }

    /// `self` followed by `next`: `Λ = Λ_next Λ_self`.
    pub fn then(&self, next: &BasisChange) -> Result<BasisChange> {
        if !self.target.approx_eq(&next.source, PREDICATE_TOL) {
            return Err(Error::BasisMismatch(
                "the second change does not start where the first ends".into(),
            ));
        }
        let lambda = &next.lambda_matrix() * &self.lambda_matrix();
        BasisChange::new(self.source.clone(), next.target.clone(), lambda)
    }
}

/// Transports an arrangement through a basis change:
///
/// `α'_κ^{κ'} = Σ_{k,k'} α_k^{k'} λ_κ^k conj(λ_{κ'}^{k'})`
///
/// evaluated as a contraction over the screen multi-indices, one side at a
/// time.
pub fn transform_arrangement(
    ea: &ExperimentalArrangement,
    change: &BasisChange,
) -> Result<ExperimentalArrangement> {
    if !ea.basis().approx_eq(change.source(), PREDICATE_TOL) {
        return Err(Error::BasisMismatch(
            "arrangement basis differs from the change's source".into(),
        ));
    }
    let deviation = unitarity_deviation(&change.lambda_matrix());
    if deviation > PREDICATE_TOL {
        return Err(Error::NonUnitaryLambda { deviation });
    }

    let source_dims = change.source().screen_dims();
    let target_dims = change.target().screen_dims();
    let alpha = ea.coefficients();
    let lambda = change.lambda();
    let zero = Complex64::new(0.0, 0.0);

    // half[κ, k'] = Σ_k λ_κ^k α_k^{k'}
    let mut half = ComplexTensor::zeros([target_dims, source_dims].concat())?;
    for kappa in multi_indices(target_dims) {
        for k_bra in multi_indices(source_dims) {
            let mut acc = zero;
            for k in multi_indices(source_dims) {
                let l = lambda.get(&[kappa.as_slice(), &k].concat())?;
                let a = alpha.get(&[k.as_slice(), &k_bra].concat())?;
                acc += l * a;
            }
            half.set(&[kappa.as_slice(), &k_bra].concat(), acc)?;
        }
    }

    // α'[κ, κ'] = Σ_{k'} half[κ, k'] conj(λ_{κ'}^{k'})
    let mut out = ComplexTensor::zeros([target_dims, target_dims].concat())?;
    for kappa in multi_indices(target_dims) {
        for kappa_bra in multi_indices(target_dims) {
            let mut acc = zero;
            for k_bra in multi_indices(source_dims) {
                let h = half.get(&[kappa.as_slice(), &k_bra].concat())?;
                let l = lambda.get(&[kappa_bra.as_slice(), &k_bra].concat())?;
                acc += h * l.conj();
            }
            out.set(&[kappa.as_slice(), &kappa_bra].concat(), acc)?;
        }
    }

    ExperimentalArrangement::from_coefficients(change.target().clone(), out)
}
