use crate::arrangement::basis::{power_of_action, DetectorBasis};
use crate::error::{Error, Result};
use crate::isa::{clamp_unit, GivTable, IntensiveState, Power};
use crate::tensor::{
    kron_all, multi_indices, partial_trace, ComplexMatrix, ComplexTensor, PREDICATE_TOL,
};

/// A state read through a detector basis: `ρ = Σ α_k^{k'} |k><k'|`.
///
/// `α` has shape `(i1, …, in, i1, …, in)`, the first block indexing the ket
/// and the second the bra. The diagonal `α_k^k` is the potentia of the power
/// `|k><k|`; off-diagonal coherences are kept so the arrangement can be
/// transported to other bases.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalArrangement {
    basis: DetectorBasis,
    alpha: ComplexTensor,
}

impl ExperimentalArrangement {
    /// Accepts a coefficient tensor after checking it is Hermitian under the
    /// ket/bra block swap with a real, normalized, `[0, 1]`-valued diagonal.
    pub fn from_coefficients(basis: DetectorBasis, alpha: ComplexTensor) -> Result<Self> {
        let dims = basis.screen_dims();
        let expected_shape = [dims, dims].concat();
        if alpha.shape() != expected_shape.as_slice() {
            return Err(Error::ShapeMismatch {
                shape: expected_shape,
                expected: basis.total_dim().pow(2),
                found: alpha.len(),
            });
        }
        let m = alpha.to_matrix(dims.len())?;
        let herm = m.hermiticity_deviation();
        if herm > PREDICATE_TOL {
            return Err(Error::InvalidCoefficients(format!(
                "not Hermitian under block swap (deviation {herm:e})"
            )));
        }
        let mut total = 0.0;
        for k in 0..m.rows() {
            let d = m.get(k, k);
            if d.im.abs() > PREDICATE_TOL || d.re < -PREDICATE_TOL || d.re > 1.0 + PREDICATE_TOL {
                return Err(Error::InvalidCoefficients(format!(
                    "diagonal entry {k} = {d} is not a potentia"
                )));
            }
            total += d.re;
        }
        if (total - 1.0).abs() > PREDICATE_TOL {
            return Err(Error::InvalidCoefficients(format!(
                "potentia sum to {total}"
            )));
        }
        Ok(Self { basis, alpha })
    }

    pub fn basis(&self) -> &DetectorBasis {
        &self.basis
    }

    /// Dimension of the state the arrangement reads.
    pub fn isa_dim(&self) -> usize {
        self.basis.total_dim()
    }

    /// Degree of complexity `N`: the cardinality of the basis.
    pub fn degree(&self) -> usize {
        self.basis.total_dim()
    }

    pub fn coefficients(&self) -> &ComplexTensor {
        &self.alpha
    }

    /// `α` flattened to an `N × N` matrix.
    pub fn coefficient_matrix(&self) -> ComplexMatrix {
        self.alpha
            .to_matrix(self.basis.factorization().screens())
            .expect("shape checked at construction")
    }

    /// `α_k^k` clamped to `[0, 1]`, for a 0-based multi-index.
    pub fn potentia(&self, indices: &[usize]) -> Result<f64> {
        let k = self.basis.factorization().flat(indices)?;
        Ok(clamp_unit(self.coefficient_matrix().get(k, k).re))
    }

    /// `(multi-index, potentia)` for every power of the basis, in flattened
    /// order.
    pub fn potentia_table(&self) -> Vec<(Vec<usize>, f64)> {
        let m = self.coefficient_matrix();
        self.basis
            .indices()
            .enumerate()
            .map(|(k, idx)| (idx, clamp_unit(m.get(k, k).re)))
            .collect()
    }

    /// The density operator in the physical coordinates, `V α V^dag`.
    pub fn density(&self) -> ComplexMatrix {
        let v = self.basis.product_matrix();
        &(v * &self.coefficient_matrix()) * &v.adjoint()
    }

    /// Intensity of an arbitrary power predicted by this arrangement,
    /// `Tr(α V^dag P V)`, clamped.
    pub fn intensity_of(&self, power: &Power) -> Result<f64> {
        Ok(clamp_unit(self.raw_intensity_of(power)?))
    }

    pub(crate) fn raw_intensity_of(&self, power: &Power) -> Result<f64> {
        if power.dim() != self.degree() {
            return Err(Error::DimensionMismatch {
                expected: self.degree(),
                found: power.dim(),
            });
        }
        let v = self.basis.product_matrix();
        let local = &(&v.adjoint() * power.matrix()) * v;
        Ok((&self.coefficient_matrix() * &local).trace().re)
    }
}

/// `α_k^{k'} = <k| ρ |k'>` over the product basis.
pub fn build_arrangement(
    isa: &IntensiveState,
    basis: &DetectorBasis,
) -> Result<ExperimentalArrangement> {
    if isa.dim() != basis.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.total_dim(),
            found: isa.dim(),
        });
    }
    let v = basis.product_matrix();
    let alpha = &(&v.adjoint() * isa.density()) * v;
    let dims = basis.screen_dims();
    Ok(ExperimentalArrangement {
        basis: basis.clone(),
        alpha: ComplexTensor::from_matrix(&alpha, dims, dims)?,
    })
}

/// `α_k^k`; see [`ExperimentalArrangement::potentia`].
pub fn potentia(ea: &ExperimentalArrangement, indices: &[usize]) -> Result<f64> {
    ea.potentia(indices)
}

/// Merges basis powers into coarser ones: each group `g` of flat basis
/// indices (0-based) becomes the power `Σ_{k∈g} |k><k|` carrying the summed
/// potentia. Groups must partition `0..N` into non-empty blocks.
pub fn coarse_grain(ea: &ExperimentalArrangement, groups: &[Vec<usize>]) -> Result<GivTable> {
    let n = ea.degree();
    let mut seen = vec![false; n];
    for (g, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::NotAPartition(format!("group {g} is empty")));
        }
        for &k in group {
            if k >= n {
                return Err(Error::NotAPartition(format!("index {k} outside 0..{n}")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::NotAPartition(format!("index {k} appears twice")));
            }
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::NotAPartition(format!("index {k} is not covered")));
    }

    let v = ea.basis().product_matrix();
    let alpha = ea.coefficient_matrix();
    let mut powers = Vec::with_capacity(groups.len());
    let mut intensities = Vec::with_capacity(groups.len());
    for group in groups {
        let mut p = ComplexMatrix::zeros(n, n);
        let mut weight = 0.0;
        for &k in group {
            let col = v.column(k);
            p = &p + &ComplexMatrix::outer(&col, &col);
            weight += alpha.get(k, k).re;
        }
        powers.push(Power::new(p)?);
        intensities.push(clamp_unit(weight));
    }
    GivTable::new(powers, intensities)
}

/// The partition of flat basis indices induced by the values on the kept
/// screens, ordered like the kept multi-indices.
pub fn induced_partition(basis: &DetectorBasis, kept: &[usize]) -> Result<Vec<Vec<usize>>> {
    let kept = normalize_screens(basis, kept)?;
    let dims = basis.screen_dims();
    let kept_dims: Vec<usize> = kept.iter().map(|&j| dims[j]).collect();
    let mut groups = vec![Vec::new(); kept_dims.iter().product()];
    for (flat, idx) in basis.indices().enumerate() {
        let sub: Vec<usize> = kept.iter().map(|&j| idx[j]).collect();
        groups[crate::tensor::flat_index(&kept_dims, &sub)?].push(flat);
    }
    Ok(groups)
}

fn normalize_screens(basis: &DetectorBasis, screens: &[usize]) -> Result<Vec<usize>> {
    if screens.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = basis.factorization().screens();
    if let Some(&bad) = screens.iter().find(|&&j| j >= n) {
        return Err(Error::IndexOutOfRange(format!("screen {bad} of {n}")));
    }
    let mut kept = screens.to_vec();
    kept.sort_unstable();
    kept.dedup();
    Ok(kept)
}

/// Intensities of the per-screen powers on a subset of screens (0-based),
/// obtained by partial-tracing `α` over the discarded screens. Rows follow
/// the kept multi-indices in flattened order; each power acts on the kept
/// screens only.
pub fn marginal_intensities(ea: &ExperimentalArrangement, screens: &[usize]) -> Result<GivTable> {
    let basis = ea.basis();
    let kept = normalize_screens(basis, screens)?;
    let dims = basis.screen_dims();
    let traced: Vec<usize> = (0..dims.len()).filter(|j| !kept.contains(j)).collect();
    let reduced = partial_trace(&ea.coefficient_matrix(), dims, &traced)?;

    let kept_dims: Vec<usize> = kept.iter().map(|&j| dims[j]).collect();
    let local = kron_all(kept.iter().map(|&j| &basis.unitaries()[j]));
    let mut powers = Vec::new();
    let mut intensities = Vec::new();
    for (k, _) in multi_indices(&kept_dims).enumerate() {
        let col = local.column(k);
        powers.push(Power::new(ComplexMatrix::outer(&col, &col))?);
        intensities.push(clamp_unit(reduced.get(k, k).re));
    }
    GivTable::new(powers, intensities)
}

/// Every basis power with its potentia as a table.
pub fn potentia_givtable(ea: &ExperimentalArrangement) -> Result<GivTable> {
    let mut powers = Vec::new();
    let mut values = Vec::new();
    for (idx, p) in ea.potentia_table() {
        powers.push(power_of_action(ea.basis(), &idx)?);
        values.push(p);
    }
    GivTable::new(powers, values)
}
