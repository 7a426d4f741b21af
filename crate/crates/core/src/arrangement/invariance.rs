use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::arrangement::basis::{power_of_action, DetectorBasis};
use crate::arrangement::ea::{build_arrangement, ExperimentalArrangement};
use crate::arrangement::transport::{transform_arrangement, BasisChange};
use crate::error::{Error, Result};
use crate::isa::{clamp_unit, IntensiveState, Power};
use crate::tensor::{kron, partial_trace, ComplexMatrix, PREDICATE_TOL};

/// A fixed state of affairs together with the arrangements registered
/// against it.
#[derive(Debug, Clone)]
pub struct QuantumLab {
    isa: IntensiveState,
    arrangements: BTreeMap<String, ExperimentalArrangement>,
}

impl QuantumLab {
    pub fn new(isa: IntensiveState) -> Self {
        Self {
            isa,
            arrangements: BTreeMap::new(),
        }
    }

    pub fn isa(&self) -> &IntensiveState {
        &self.isa
    }

    /// Registers (or replaces) a named arrangement no larger than the lab.
    pub fn register(&mut self, name: impl Into<String>, ea: ExperimentalArrangement) -> Result<()> {
        if ea.isa_dim() > self.isa.dim() {
            return Err(Error::ArrangementTooLarge {
                arrangement: ea.isa_dim(),
                lab: self.isa.dim(),
            });
        }
        self.arrangements.insert(name.into(), ea);
        Ok(())
    }

    pub fn arrangement(&self, name: &str) -> Option<&ExperimentalArrangement> {
        self.arrangements.get(name)
    }

    pub fn arrangements(&self) -> impl Iterator<Item = (&str, &ExperimentalArrangement)> {
        self.arrangements.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Builds the lab's arrangement over `basis`.
    pub fn arrange(&self, basis: &DetectorBasis) -> Result<ExperimentalArrangement> {
        build_arrangement(&self.isa, basis)
    }
}

#[derive(Debug, Clone)]
pub struct BasisInvarianceReport {
    pub degree: usize,
    /// Largest entrywise gap between the transported and the rebuilt
    /// coefficients.
    pub deviation: f64,
    pub transported: ExperimentalArrangement,
    pub direct: ExperimentalArrangement,
}

impl BasisInvarianceReport {
    pub fn passed(&self) -> bool {
        self.passed_within(PREDICATE_TOL)
    }

    pub fn passed_within(&self, tol: f64) -> bool {
        self.deviation <= tol
    }
}

/// Transports the lab's arrangement over `b1` to `b2` with `λ_κ^k = <κ|k>`
/// and compares it with the arrangement built over `b2` directly.
pub fn check_basis_invariance(
    lab: &QuantumLab,
    b1: &DetectorBasis,
    b2: &DetectorBasis,
) -> Result<BasisInvarianceReport> {
    for b in [b1, b2] {
        if b.total_dim() != lab.isa().dim() {
            return Err(Error::DimensionMismatch {
                expected: lab.isa().dim(),
                found: b.total_dim(),
            });
        }
    }
    let change = BasisChange::between(b1, b2)?;
    let transported = transform_arrangement(&lab.arrange(b1)?, &change)?;
    let direct = lab.arrange(b2)?;
    let deviation = transported
        .coefficients()
        .max_abs_diff(direct.coefficients())?;
    Ok(BasisInvarianceReport {
        degree: b1.total_dim(),
        deviation,
        transported,
        direct,
    })
}

/// How a small screen structure sits inside the lab's space.
///
/// An isometry `W: C^n ⊗ C^m → C^D` maps the small space, tensored with an
/// `m`-dimensional factor that is coarse-grained away, into the big space.
/// A small power `P` is realized as `W (P ⊗ I_m) W^dag`, a sum of `m` big
/// powers. With `m = 1` this is a plain subspace; with `n·m = D` and
/// `W = I` it is a tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    isometry: ComplexMatrix,
    small_dim: usize,
    multiplicity: usize,
}

impl Embedding {
    pub fn new(isometry: ComplexMatrix, small_dim: usize) -> Result<Self> {
        let cols = isometry.cols();
        if small_dim == 0 || !cols.is_multiple_of(small_dim) {
            return Err(Error::NotASubspace(format!(
                "{cols} isometry columns are not a multiple of the small dimension {small_dim}"
            )));
        }
        if cols > isometry.rows() {
            return Err(Error::NotASubspace(format!(
                "cannot embed {cols} dimensions into {}",
                isometry.rows()
            )));
        }
        let gram = &isometry.adjoint() * &isometry;
        let deviation = (&gram - &ComplexMatrix::identity(cols)).frobenius_norm();
        if deviation > PREDICATE_TOL {
            return Err(Error::NotASubspace(format!(
                "columns are not orthonormal (||W^dag W - I||_F = {deviation:e})"
            )));
        }
        Ok(Self {
            isometry,
            small_dim,
            multiplicity: cols / small_dim,
        })
    }

    /// Default embedding of `C^small` into `C^big`: the leading tensor factor
    /// when `small` divides `big`, otherwise the span of the first `small`
    /// coordinates.
    pub fn derive(small_dim: usize, big_dim: usize) -> Result<Self> {
        if small_dim == 0 || small_dim > big_dim {
            return Err(Error::NotASubspace(format!(
                "cannot embed dimension {small_dim} into {big_dim}"
            )));
        }
        if big_dim.is_multiple_of(small_dim) {
            Self::new(ComplexMatrix::identity(big_dim), small_dim)
        } else {
            let w = ComplexMatrix::from_fn(big_dim, small_dim, |i, j| {
                Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            });
            Self::new(w, small_dim)
        }
    }

    pub fn small_dim(&self) -> usize {
        self.small_dim
    }

    pub fn big_dim(&self) -> usize {
        self.isometry.rows()
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    /// `W (P ⊗ I_m) W^dag`.
    pub fn embedded_power(&self, p: &Power) -> Result<Power> {
        if p.dim() != self.small_dim {
            return Err(Error::DimensionMismatch {
                expected: self.small_dim,
                found: p.dim(),
            });
        }
        let lifted = kron(p.matrix(), &ComplexMatrix::identity(self.multiplicity));
        Power::new(&(&self.isometry * &lifted) * &self.isometry.adjoint())
    }

    /// `W W^dag`, the power of the whole embedded subspace.
    pub fn support(&self) -> Power {
        Power::new(&self.isometry * &self.isometry.adjoint()).expect("isometry range projector")
    }

    /// The small state seen through the embedding:
    /// `Tr_m(W^dag ρ W) / Ψ(W W^dag)`.
    pub fn restrict(&self, isa: &IntensiveState) -> Result<IntensiveState> {
        if isa.dim() != self.big_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.big_dim(),
                found: isa.dim(),
            });
        }
        let compressed = &(&self.isometry.adjoint() * isa.density()) * &self.isometry;
        let weight = compressed.trace().re;
        if weight <= PREDICATE_TOL {
            return Err(Error::NotASubspace(format!(
                "state has weight {weight:e} on the embedded subspace"
            )));
        }
        let reduced = partial_trace(&compressed, &[self.small_dim, self.multiplicity], &[1])?;
        IntensiveState::with_tolerance(reduced.scale_real(1.0 / weight), PREDICATE_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationRow {
    pub indices: Vec<usize>,
    /// Potentia read from the small arrangement.
    pub small: f64,
    /// The same number predicted by the big arrangement.
    pub recovered: f64,
}

#[derive(Debug, Clone)]
pub struct FactorizationInvarianceReport {
    pub small_degree: usize,
    pub big_degree: usize,
    /// `Ψ(W W^dag)` as predicted by the big arrangement.
    pub support_intensity: f64,
    pub rows: Vec<FactorizationRow>,
    pub deviation: f64,
    pub small_arrangement: ExperimentalArrangement,
}

impl FactorizationInvarianceReport {
    pub fn passed(&self) -> bool {
        self.passed_within(PREDICATE_TOL)
    }

    pub fn passed_within(&self, tol: f64) -> bool {
        self.deviation <= tol
    }
}

/// Checks that every potentia of the small arrangement (built from the lab's
/// state restricted through `embedding`) is predicted by the big arrangement
/// as the intensity of the embedded power, conditioned on the embedded
/// subspace. Without an explicit embedding, [`Embedding::derive`] is used.
pub fn check_factorization_invariance(
    lab: &QuantumLab,
    small_basis: &DetectorBasis,
    big_basis: &DetectorBasis,
    embedding: Option<&Embedding>,
) -> Result<FactorizationInvarianceReport> {
    let big_dim = lab.isa().dim();
    if big_basis.total_dim() != big_dim {
        return Err(Error::DimensionMismatch {
            expected: big_dim,
            found: big_basis.total_dim(),
        });
    }
    let derived;
    let embedding = match embedding {
        Some(e) => e,
        None => {
            derived = Embedding::derive(small_basis.total_dim(), big_dim)?;
            &derived
        }
    };
    if embedding.small_dim() != small_basis.total_dim() || embedding.big_dim() != big_dim {
        return Err(Error::NotASubspace(format!(
            "embedding maps {} into {}, bases need {} into {}",
            embedding.small_dim(),
            embedding.big_dim(),
            small_basis.total_dim(),
            big_dim
        )));
    }

    let big = lab.arrange(big_basis)?;
    let small = build_arrangement(&embedding.restrict(lab.isa())?, small_basis)?;
    let support_intensity = big.raw_intensity_of(&embedding.support())?;

    let mut rows = Vec::with_capacity(small.degree());
    let mut deviation: f64 = 0.0;
    for (indices, small_potentia) in small.potentia_table() {
        let power = embedding.embedded_power(&power_of_action(small_basis, &indices)?)?;
        let recovered = clamp_unit(big.raw_intensity_of(&power)? / support_intensity);
        deviation = deviation.max((recovered - small_potentia).abs());
        rows.push(FactorizationRow {
            indices,
            small: small_potentia,
            recovered,
        });
    }

    Ok(FactorizationInvarianceReport {
        small_degree: small.degree(),
        big_degree: big.degree(),
        support_intensity,
        rows,
        deviation,
        small_arrangement: small,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::basis::Factorization;
    use crate::arrangement::ea::marginal_intensities;
    use crate::tensor::UnitVector;

    fn bell_lab() -> QuantumLab {
        QuantumLab::new(IntensiveState::pure(
            &UnitVector::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap(),
        ))
    }

    fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).unwrap()
    }

    #[test]
    fn same_basis_has_zero_deviation() {
        let lab = bell_lab();
        let b = DetectorBasis::computational(Factorization::new(vec![2, 2]).unwrap());
        let report = check_basis_invariance(&lab, &b, &b).unwrap();
        assert_eq!(report.deviation, 0.0);
        assert!(report.passed());
    }

    #[test]
    fn bell_across_hadamard_screens() {
        let lab = bell_lab();
        let b1 = DetectorBasis::computational(Factorization::new(vec![2, 2]).unwrap());
        let b2 = DetectorBasis::new(
            Factorization::new(vec![2, 2]).unwrap(),
            vec![hadamard(), hadamard()],
        )
        .unwrap();
        let report = check_basis_invariance(&lab, &b1, &b2).unwrap();
        assert!(report.deviation < 1e-14);
        // Φ+ is invariant under H ⊗ H, so the potentia are again (1/2, 0, 0, 1/2).
        let p: Vec<f64> = report.direct.potentia_table().iter().map(|r| r.1).collect();
        assert!(p
            .iter()
            .zip([0.5, 0.0, 0.0, 0.5])
            .all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn wrong_dimension_rejected() {
        let lab = bell_lab();
        let b = DetectorBasis::computational(Factorization::single(2).unwrap());
        assert!(matches!(
            check_basis_invariance(&lab, &b, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn registry_enforces_dimension() {
        let mut lab = QuantumLab::new(IntensiveState::maximally_mixed(2));
        let small = DetectorBasis::computational(Factorization::single(2).unwrap());
        let ea = lab.arrange(&small).unwrap();
        lab.register("z", ea).unwrap();
        assert!(lab.arrangement("z").is_some());
        let big = build_arrangement(
            &IntensiveState::maximally_mixed(4),
            &DetectorBasis::computational(Factorization::single(4).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            lab.register("big", big),
            Err(Error::ArrangementTooLarge { .. })
        ));
    }

    #[test]
    fn small_equals_big() {
        let lab = bell_lab();
        let b = DetectorBasis::computational(Factorization::new(vec![2, 2]).unwrap());
        let report = check_factorization_invariance(&lab, &b, &b, None).unwrap();
        assert!(report.deviation < 1e-15);
        assert!((report.support_intensity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_screen_as_small_arrangement() {
        let lab = QuantumLab::new(
            IntensiveState::with_tolerance(ComplexMatrix::diag_real(&[0.1, 0.2, 0.3, 0.4]), 1e-9)
                .unwrap(),
        );
        let small = DetectorBasis::computational(Factorization::single(2).unwrap());
        let big = DetectorBasis::computational(Factorization::new(vec![2, 2]).unwrap());
        let report = check_factorization_invariance(&lab, &small, &big, None).unwrap();
        assert!(report.passed());
        let marginal = marginal_intensities(&lab.arrange(&big).unwrap(), &[0]).unwrap();
        for (row, m) in report.rows.iter().zip(marginal.intensities()) {
            assert!((row.small - m).abs() < 1e-15);
        }
        assert!((report.rows[0].small - 0.3).abs() < 1e-15);
    }

    #[test]
    fn coordinate_subspace_conditions_on_support() {
        // ρ = diag(0.2, 0.3, 0.5) restricted to span{e0, e1} is diag(0.4, 0.6).
        let lab = QuantumLab::new(
            IntensiveState::with_tolerance(ComplexMatrix::diag_real(&[0.2, 0.3, 0.5]), 1e-9)
                .unwrap(),
        );
        let small = DetectorBasis::computational(Factorization::single(2).unwrap());
        let big = DetectorBasis::computational(Factorization::single(3).unwrap());
        let report = check_factorization_invariance(&lab, &small, &big, None).unwrap();
        assert!((report.support_intensity - 0.5).abs() < 1e-15);
        assert!((report.rows[0].small - 0.4).abs() < 1e-15);
        assert!(report.passed());
    }

    #[test]
    fn bad_embeddings() {
        let not_iso =
            ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            Embedding::new(not_iso, 2),
            Err(Error::NotASubspace(_))
        ));
        assert!(matches!(
            Embedding::derive(4, 2),
            Err(Error::NotASubspace(_))
        ));
        let e = Embedding::derive(2, 4).unwrap();
        assert_eq!(e.multiplicity(), 2);
        let e = Embedding::derive(2, 3).unwrap();
        assert_eq!(e.multiplicity(), 1);
        // A state with no weight on the subspace cannot be restricted.
        let lab = QuantumLab::new(IntensiveState::pure(&UnitVector::basis(3, 2).unwrap()));
        assert!(matches!(e.restrict(lab.isa()), Err(Error::NotASubspace(_))));
    }
}
