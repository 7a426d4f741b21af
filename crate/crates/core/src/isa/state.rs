use crate::error::{Error, Result, StateViolation};
use crate::isa::power::Power;
use crate::tensor::{nu_embed, ComplexMatrix, UnitVector, IDENTITY_TOL, PREDICATE_TOL};

/// Clamps an intensity into `[0, 1]`. Values within [`IDENTITY_TOL`] of an
/// endpoint land exactly on it.
pub fn clamp_unit(value: f64) -> f64 {
    if value <= IDENTITY_TOL {
        0.0
    } else if value >= 1.0 - IDENTITY_TOL {
        1.0
    } else {
        value
    }
}

/// An intensive state of affairs `Ψ`, held as the density operator `ρ` with
/// `Ψ(P) = Tr(ρP)`.
///
/// The stored density is the Hermitian part of the validated input rescaled
/// to unit trace, so `Ψ(I) = 1` holds to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensiveState {
    density: ComplexMatrix,
}

/// Validates a density operator at the default tolerance.
pub fn make_isa(density: ComplexMatrix) -> Result<IntensiveState> {
    IntensiveState::with_tolerance(density, PREDICATE_TOL)
}

impl IntensiveState {
    /// Checks Hermiticity, positivity (smallest eigenvalue `>= -tol`) and unit
    /// trace, reporting every violated invariant at once.
    pub fn with_tolerance(density: ComplexMatrix, tol: f64) -> Result<Self> {
        density.dim()?;
        let mut violations = Vec::new();

        let deviation = density.hermiticity_deviation();
        if deviation > tol {
            violations.push(StateViolation::NotHermitian { deviation });
        }
        let trace = density.trace().re;
        if (trace - 1.0).abs() > tol {
            violations.push(StateViolation::TraceNotOne { trace });
        }
        let (eigenvalues, _) = density.hermitian_eigen()?;
        let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
        if min_eigenvalue < -tol {
            violations.push(StateViolation::NotPositive { min_eigenvalue });
        }

        if !violations.is_empty() {
            return Err(Error::InvalidState(violations));
        }
        let density = density.hermitian_part().scale_real(1.0 / trace);
        Ok(Self { density })
    }

    /// Pure state `ν(|x>)`.
    pub fn pure(x: &UnitVector) -> Self {
        Self {
            density: nu_embed(x),
        }
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            density: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.density.rows()
    }

    pub fn density(&self) -> &ComplexMatrix {
        &self.density
    }

    /// `Ψ(P)`; see [`intensity`].
    pub fn intensity(&self, p: &Power) -> Result<f64> {
        intensity(self, p)
    }
}

/// `Re Tr(ρP)` clamped to `[0, 1]`.
pub fn intensity(isa: &IntensiveState, p: &Power) -> Result<f64> {
    if p.dim() != isa.dim() {
        return Err(Error::DimensionMismatch {
            expected: isa.dim(),
            found: p.dim(),
        });
    }
    Ok(clamp_unit(trace_of_product(isa.density(), p.matrix())))
}

/// `Re Tr(AB)` without forming the product.
pub(crate) fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a.get(i, j) * b.get(j, i)).re;
        }
    }
    acc
}

/// Outcome of an additivity check over a mutually orthogonal family.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    /// `Ψ(ΣPᵢ)`.
    pub intensity_of_sum: f64,
    /// `ΣΨ(Pᵢ)`.
    pub sum_of_intensities: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

impl AdditivityReport {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Verifies `Ψ(ΣPᵢ) = ΣΨ(Pᵢ)` for a family whose members satisfy
/// `||PᵢPⱼ||_F <= 1e-9` pairwise.
pub fn check_additivity(isa: &IntensiveState, family: &[Power]) -> Result<AdditivityReport> {
    let dim = isa.dim();
    for (i, p) in family.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        for (j, q) in family.iter().enumerate().skip(i + 1) {
            let overlap = (p.matrix() * q.matrix()).frobenius_norm();
            if overlap > PREDICATE_TOL {
                return Err(Error::FamilyNotOrthogonal {
                    first: i,
                    second: j,
                    overlap,
                });
            }
        }
    }
    let total = Power::sum(dim, family)?;
    let intensity_of_sum = intensity(isa, &total)?;
    let sum_of_intensities = family
        .iter()
        .map(|p| intensity(isa, p))
        .sum::<Result<f64>>()?;
    Ok(AdditivityReport {
        intensity_of_sum,
        sum_of_intensities,
        deviation: (intensity_of_sum - sum_of_intensities).abs(),
        tolerance: PREDICATE_TOL,
    })
}

/// Convex combination `Σ wᵢ ρᵢ`.
pub fn mix(states: &[IntensiveState], weights: &[f64]) -> Result<IntensiveState> {
    if states.is_empty() {
        return Err(Error::WeightsInvalid("no states to mix".into()));
    }
    if states.len() != weights.len() {
        return Err(Error::WeightsInvalid(format!(
            "{} states but {} weights",
            states.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::WeightsInvalid(format!(
            "weight {w} is negative or not finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PREDICATE_TOL {
        return Err(Error::WeightsInvalid(format!("weights sum to {total}")));
    }
    let dim = states[0].dim();
    let mut density = ComplexMatrix::zeros(dim, dim);
    for (state, &w) in states.iter().zip(weights) {
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.dim(),
            });
        }
        density = &density + &state.density().scale_real(w);
    }
    IntensiveState::with_tolerance(density, PREDICATE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::kron;
    use num_complex::Complex64;

    fn bell() -> IntensiveState {
        let v = UnitVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        IntensiveState::pure(&v)
    }

    #[test]
    fn accepts_pure_and_mixed() {
        assert!(make_isa(ComplexMatrix::diag_real(&[1.0, 0.0])).is_ok());
        assert!(make_isa(ComplexMatrix::diag_real(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn reports_every_violation() {
        // diag(2, -1) has unit trace, so positivity is its only defect.
        let err = make_isa(ComplexMatrix::diag_real(&[2.0, -1.0])).unwrap_err();
        let Error::InvalidState(v) = err else {
            panic!("wrong error");
        };
        assert_eq!(
            v,
            vec![StateViolation::NotPositive {
                min_eigenvalue: -1.0
            }]
        );

        let err = make_isa(ComplexMatrix::diag_real(&[2.0, -0.5])).unwrap_err();
        let Error::InvalidState(v) = err else {
            panic!("wrong error");
        };
        assert!(v
            .iter()
            .any(|x| matches!(x, StateViolation::TraceNotOne { .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, StateViolation::NotPositive { .. })));
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn reports_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.5, 0.3], &[0.0, 0.5]]).unwrap();
        let err = make_isa(m).unwrap_err();
        assert!(err.to_string().contains("NotHermitian"));
    }

    #[test]
    fn trace_error_names_invariant() {
        let err = make_isa(ComplexMatrix::diag_real(&[0.45, 0.45])).unwrap_err();
        assert!(err.to_string().contains("TraceNotOne"));
    }

    #[test]
    fn identity_and_zero_are_exact() {
        let isa = make_isa(ComplexMatrix::diag_real(&[0.3 + 4e-10, 0.7])).unwrap();
        assert_eq!(intensity(&isa, &Power::identity(2)).unwrap(), 1.0);
        assert_eq!(intensity(&isa, &Power::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn maximally_mixed_intensity() {
        let isa = IntensiveState::maximally_mixed(2);
        let p = Power::from_vector(&UnitVector::basis(2, 0).unwrap());
        assert_eq!(intensity(&isa, &p).unwrap(), 0.5);
    }

    #[test]
    fn bell_intensity_of_00() {
        // <00|Φ+><Φ+|00> = (1/√2)² = 1/2.
        let p = Power::from_vector(&UnitVector::basis(4, 0).unwrap());
        assert!((intensity(&bell(), &p).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            intensity(&bell(), &Power::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn additivity_on_computational_basis() {
        let isa = bell();
        let family: Vec<Power> = (0..4)
            .map(|k| Power::from_vector(&UnitVector::basis(4, k).unwrap()))
            .collect();
        let report = check_additivity(&isa, &family).unwrap();
        assert!(report.passed());
        assert_eq!(report.intensity_of_sum, 1.0);
        assert!((report.sum_of_intensities - 1.0).abs() < 1e-15);
        let single = check_additivity(&isa, &family[..1]).unwrap();
        assert_eq!(single.deviation, 0.0);
    }

    #[test]
    fn additivity_names_offending_pair() {
        let isa = IntensiveState::maximally_mixed(2);
        let zero = Power::from_vector(&UnitVector::basis(2, 0).unwrap());
        let one = Power::from_vector(&UnitVector::basis(2, 1).unwrap());
        let plus = Power::from_vector(&UnitVector::from_real(&[1.0, 1.0]).unwrap());
        let err = check_additivity(&isa, &[zero, one, plus]).unwrap_err();
        assert!(matches!(
            err,
            Error::FamilyNotOrthogonal {
                first: 0,
                second: 2,
                ..
            }
        ));
    }

    #[test]
    fn mix_of_basis_states_is_maximally_mixed() {
        let a = IntensiveState::pure(&UnitVector::basis(2, 0).unwrap());
        let b = IntensiveState::pure(&UnitVector::basis(2, 1).unwrap());
        let m = mix(&[a.clone(), b], &[0.5, 0.5]).unwrap();
        assert_eq!(m, IntensiveState::maximally_mixed(2));
        assert_eq!(mix(std::slice::from_ref(&a), &[1.0]).unwrap(), a);
    }

    #[test]
    fn mix_of_plus_and_minus() {
        // 0.3|+><+| + 0.7|-><-| = [[.5, .3*.5 - .7*.5], ...] = [[.5, -.2], [-.2, .5]].
        let plus = IntensiveState::pure(&UnitVector::from_real(&[1.0, 1.0]).unwrap());
        let minus = IntensiveState::pure(&UnitVector::from_real(&[1.0, -1.0]).unwrap());
        let m = mix(&[plus, minus], &[0.3, 0.7]).unwrap();
        let want = ComplexMatrix::from_real_rows(&[&[0.5, -0.2], &[-0.2, 0.5]]).unwrap();
        assert!(m.density().max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let a = IntensiveState::maximally_mixed(2);
        for w in [vec![0.5], vec![1.2, -0.2], vec![0.5, 0.6]] {
            let states = vec![a.clone(); w.len().max(2)];
            assert!(matches!(
                mix(&states[..2], &w),
                Err(Error::WeightsInvalid(_))
            ));
        }
        let b = IntensiveState::maximally_mixed(3);
        assert!(matches!(
            mix(&[a, b], &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn complex_density_accepted() {
        let i = Complex64::new(0.0, 0.25);
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), -i],
            vec![i, Complex64::new(0.5, 0.0)],
        ])
        .unwrap();
        let isa = make_isa(m).unwrap();
        let p = kron(
            &ComplexMatrix::identity(1),
            &ComplexMatrix::diag_real(&[1.0, 0.0]),
        );
        assert_eq!(isa.intensity(&Power::new(p).unwrap()).unwrap(), 0.5);
    }
}
