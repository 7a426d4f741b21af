use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::isa::power::Power;
use crate::isa::state::{clamp_unit, trace_of_product, IntensiveState};
use crate::tensor::{ComplexMatrix, PREDICATE_TOL, RANK_TOL};

/// A global intensive valuation restricted to finitely many powers.
#[derive(Debug, Clone, PartialEq)]
pub struct GivTable {
    powers: Vec<Power>,
    intensities: Vec<f64>,
}

impl GivTable {
    /// Pairs powers with intensities. Intensities may overshoot `[0, 1]` by
    /// at most `1e-9` and are clamped when read.
    pub fn new(powers: Vec<Power>, intensities: Vec<f64>) -> Result<Self> {
        if powers.len() != intensities.len() {
            return Err(Error::DimensionMismatch {
                expected: powers.len(),
                found: intensities.len(),
            });
        }
        for (row, &value) in intensities.iter().enumerate() {
            if !(-PREDICATE_TOL..=1.0 + PREDICATE_TOL).contains(&value) {
                return Err(Error::IntensityOutOfRange { row, value });
            }
        }
        Ok(Self {
            powers,
            intensities,
        })
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[Power] {
        &self.powers
    }

    pub fn intensity(&self, row: usize) -> f64 {
        clamp_unit(self.intensities[row])
    }

    pub fn intensities(&self) -> Vec<f64> {
        (0..self.len()).map(|r| self.intensity(r)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Power, f64)> + '_ {
        self.powers.iter().zip(self.intensities())
    }

    /// Sum of the (clamped) intensities.
    pub fn total(&self) -> f64 {
        self.intensities().iter().sum()
    }
}

/// Diagnostics returned alongside a fitted state.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// `sqrt(Σ (Tr(ρ_fit Pᵢ) - tᵢ)²)` after PSD projection.
    pub residual: f64,
    /// Whether `{Pᵢ} ∪ {I}` spans the Hermitian matrices.
    pub informationally_complete: bool,
    /// Dimension of the span of the traceless parts of the powers.
    pub rank: usize,
    /// Whether the least-squares solution had negative eigenvalues that were
    /// clipped.
    pub clipped: bool,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub isa: IntensiveState,
    pub report: FitReport,
}

/// Orthonormal basis (Hilbert-Schmidt) of the traceless Hermitian matrices on
/// `C^dim`: symmetric and antisymmetric off-diagonal units followed by the
/// normalized diagonal generators.
pub fn traceless_hermitian_basis(dim: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(dim * dim - 1);
    for j in 0..dim {
        for k in j + 1..dim {
            let mut sym = ComplexMatrix::zeros(dim, dim);
            sym[(j, k)] = Complex64::new(s, 0.0);
            sym[(k, j)] = Complex64::new(s, 0.0);
            basis.push(sym);
            let mut anti = ComplexMatrix::zeros(dim, dim);
            anti[(j, k)] = Complex64::new(0.0, -s);
            anti[(k, j)] = Complex64::new(0.0, s);
            basis.push(anti);
        }
    }
    for l in 1..dim {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(dim, dim);
        for i in 0..l {
            diag[(i, i)] = Complex64::new(1.0 / norm, 0.0);
        }
        diag[(l, l)] = Complex64::new(-(l as f64) / norm, 0.0);
        basis.push(diag);
    }
    basis
}

/// Reconstructs a state from a table of intensities.
///
/// Writing `ρ = I/d + Σ cⱼ Gⱼ` over the traceless Hermitian basis makes the
/// Hermiticity and unit-trace constraints implicit; the coefficients are the
/// minimum-norm least-squares solution of `Tr(ρPᵢ) = tᵢ`. Negative eigenvalues
/// of the result are clipped to zero and the trace renormalized.
pub fn fit_isa(table: &GivTable) -> Result<FitOutcome> {
    let first = table.powers().first().ok_or(Error::EmptyTable)?;
    let dim = first.dim();
    if let Some(bad) = table.powers().iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }

    let basis = traceless_hermitian_basis(dim);
    let n = table.len();
    let targets = table.intensities();
    let design = DMatrix::from_fn(n, basis.len(), |i, j| {
        trace_of_product(table.powers()[i].matrix(), &basis[j])
    });
    let rhs = DVector::from_fn(n, |i, _| {
        targets[i] - table.powers()[i].matrix().trace().re / dim as f64
    });

    let (coefficients, rank) = if basis.is_empty() {
        (DVector::zeros(0), 0)
    } else {
        let svd = design.svd(true, true);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL)
            .count();
        let sigma_max = svd.singular_values.max().max(1.0);
        let coefficients = svd
            .solve(&rhs, 1e-10 * sigma_max)
            .map_err(|e| Error::InvalidCoefficients(e.to_string()))?;
        (coefficients, rank)
    };

    let mut rho = ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64);
    for (g, &c) in basis.iter().zip(coefficients.iter()) {
        rho = &rho + &g.scale_real(c);
    }

    let (values, vectors) = rho.hermitian_eigen()?;
    let clipped = values.iter().any(|&v| v < 0.0);
    if clipped {
        let kept: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = kept.iter().sum();
        let scaled: Vec<f64> = kept.iter().map(|v| v / total).collect();
        rho = &(&vectors * &ComplexMatrix::diag_real(&scaled)) * &vectors.adjoint();
    }
    let isa = IntensiveState::with_tolerance(rho, PREDICATE_TOL)?;

    let residual = table
        .powers()
        .iter()
        .zip(&targets)
        .map(|(p, t)| (trace_of_product(isa.density(), p.matrix()) - t).powi(2))
        .sum::<f64>()
        .sqrt();

    Ok(FitOutcome {
        isa,
        report: FitReport {
            residual,
            informationally_complete: rank == dim * dim - 1,
            rank,
            clipped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::UnitVector;

    fn tomography_powers() -> Vec<Power> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            Power::from_vector(&UnitVector::basis(2, 0).unwrap()),
            Power::from_vector(&UnitVector::basis(2, 1).unwrap()),
            Power::from_vector(&UnitVector::from_real(&[1.0, 1.0]).unwrap()),
            Power::from_vector(
                &UnitVector::new(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]).unwrap(),
            ),
        ]
    }

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        for dim in 1..5 {
            let b = traceless_hermitian_basis(dim);
            assert_eq!(b.len(), dim * dim - 1);
            for (i, g) in b.iter().enumerate() {
                assert!(g.trace().norm() < 1e-15);
                assert!(g.hermiticity_deviation() < 1e-15);
                for (j, h) in b.iter().enumerate() {
                    let ip = trace_of_product(g, h);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            GivTable::new(vec![Power::identity(2)], vec![]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            GivTable::new(vec![Power::identity(2)], vec![1.1]),
            Err(Error::IntensityOutOfRange { row: 0, .. })
        ));
        let t = GivTable::new(vec![Power::identity(2)], vec![1.0 + 5e-10]).unwrap();
        assert_eq!(t.intensity(0), 1.0);
    }

    #[test]
    fn recovers_known_qubit_state() {
        // ρ = [[0.7, 0.1-0.2i], [0.1+0.2i, 0.3]]. Intensities on |0>, |1>, |+>,
        // |+i> are ρ00, ρ11, (1 + 2 Re ρ01)/2 = 0.6 and (1 + 2 Im ρ10)/2 = 0.7.
        let rho = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.1, -0.2)],
            vec![Complex64::new(0.1, 0.2), Complex64::new(0.3, 0.0)],
        ])
        .unwrap();
        let table = GivTable::new(tomography_powers(), vec![0.7, 0.3, 0.6, 0.7]).unwrap();
        let fit = fit_isa(&table).unwrap();
        assert!(fit.report.residual <= 1e-8);
        assert!(fit.report.informationally_complete);
        assert!(!fit.report.clipped);
        assert!(fit.isa.density().max_abs_diff(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn identity_only_gives_maximally_mixed() {
        let table = GivTable::new(vec![Power::identity(3)], vec![1.0]).unwrap();
        let fit = fit_isa(&table).unwrap();
        assert_eq!(fit.report.rank, 0);
        assert!(!fit.report.informationally_complete);
        let mixed = IntensiveState::maximally_mixed(3);
        assert!(fit.isa.density().max_abs_diff(mixed.density()).unwrap() < 1e-15);
        assert!(fit.report.residual < 1e-15);
    }

    #[test]
    fn inconsistent_table_is_a_compromise() {
        // Minimizing (x - 0.9)² + (x - 0.1)² gives x = 0.5, residual sqrt(0.32).
        let p = Power::from_vector(&UnitVector::basis(2, 0).unwrap());
        let table = GivTable::new(vec![p.clone(), p.clone()], vec![0.9, 0.1]).unwrap();
        let fit = fit_isa(&table).unwrap();
        assert!((fit.isa.intensity(&p).unwrap() - 0.5).abs() < 1e-12);
        assert!((fit.report.residual - 0.32f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unphysical_table_gets_clipped() {
        // Intensity 1 on |0> and on |+> cannot both hold; the raw fit has a
        // negative eigenvalue.
        let powers = tomography_powers();
        let table = GivTable::new(
            vec![powers[0].clone(), powers[2].clone(), powers[3].clone()],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let fit = fit_isa(&table).unwrap();
        assert!(fit.report.clipped);
        assert!(fit.report.residual > 0.1);
    }

    #[test]
    fn empty_and_mixed_tables_fail() {
        let empty = GivTable::new(vec![], vec![]).unwrap();
        assert!(matches!(fit_isa(&empty), Err(Error::EmptyTable)));
        let mixed =
            GivTable::new(vec![Power::identity(2), Power::identity(3)], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            fit_isa(&mixed),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
