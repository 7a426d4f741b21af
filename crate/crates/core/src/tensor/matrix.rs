use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Singular values above this count towards the rank.
pub const RANK_TOL: f64 = 1e-8;

/// Dense complex matrix. Entries are addressed `(row, col)`; constructors
/// taking a flat slice read it in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                shape: vec![rows, cols],
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(pos) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                shape: vec![rows.len(), cols],
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Real matrix from nested rows, for tests and literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn diag_real(diagonal: &[f64]) -> Self {
        let n = diagonal.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diagonal[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `|v><w|` for column vectors `v` and `w`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.inner.transpose().as_slice().to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        self.inner.column(col).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok((&self.inner - &other.inner)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// `||A - A^dag||_F`.
    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.inner - self.inner.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(A + A^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvector columns of
    /// the Hermitian part of a square matrix.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.dim()?;
        let eig = self.hermitian_part().inner.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = self.rows();
        let vectors = Self::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((values, vectors))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.inner.singular_values().iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Number of singular values above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        self.singular_values()
            .into_iter()
            .filter(|&s| s > RANK_TOL)
            .count()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn from_nalgebra(inner: DMatrix<Complex64>) -> Self {
        Self { inner }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: other.rows(),
            });
        }
        if self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: other.cols(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.inner[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes, like the underlying dense product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for row in self.to_rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  {}", cells.join("  "))?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`: for `p×r` and `q×s` inputs, the `(pq)×(rs)`
/// matrix with entry `a[i][j] * b[k][l]` at `(i*q + k, j*s + l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (q, s) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * q, a.cols() * s, |row, col| {
        a.get(row / q, col / s) * b.get(row % q, col % s)
    })
}

/// Kronecker product of a non-empty sequence, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Traces out the factors listed in `traced` (0-based) of a square matrix
/// acting on `⊗ C^{factor_dims[j]}`. The result acts on the remaining factors
/// in their original order; tracing everything yields the 1×1 matrix `[Tr m]`.
pub fn partial_trace(
    m: &ComplexMatrix,
    factor_dims: &[usize],
    traced: &[usize],
) -> Result<ComplexMatrix> {
    let dim = m.dim()?;
    let total: usize = factor_dims.iter().product();
    if total != dim || factor_dims.contains(&0) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: total,
        });
    }
    if let Some(&bad) = traced.iter().find(|&&t| t >= factor_dims.len()) {
        return Err(Error::IndexOutOfRange(format!(
            "factor {bad} of {}",
            factor_dims.len()
        )));
    }

    let is_traced: Vec<bool> = (0..factor_dims.len())
        .map(|j| traced.contains(&j))
        .collect();
    let kept_dim: usize = factor_dims
        .iter()
        .zip(&is_traced)
        .filter(|(_, &t)| !t)
        .map(|(d, _)| d)
        .product();

    // Split every flat index into its (kept, traced) flat components.
    let split: Vec<(usize, usize)> = (0..dim)
        .map(|flat| {
            let (mut rem, mut kept, mut kept_stride, mut tr, mut tr_stride) = (flat, 0, 1, 0, 1);
            for (j, &d) in factor_dims.iter().enumerate().rev() {
                let digit = rem % d;
                rem /= d;
                if is_traced[j] {
                    tr += digit * tr_stride;
                    tr_stride *= d;
                } else {
                    kept += digit * kept_stride;
                    kept_stride *= d;
                }
            }
            (kept, tr)
        })
        .collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += m.get(i, j);
            }
        }
    }
    Ok(out)
}

/// Frobenius norm of `pq - qp`.
pub fn commutator_norm(p: &ComplexMatrix, q: &ComplexMatrix) -> Result<f64> {
    let d = p.dim()?;
    let e = q.dim()?;
    if d != e {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: e,
        });
    }
    Ok((&(p * q) - &(q * p)).frobenius_norm())
}

/// True iff `||p² - p||_F <= tol` and `||p - p^dag||_F <= tol`.
pub fn is_projector(p: &ComplexMatrix, tol: f64) -> bool {
    let (idem, herm) = projector_deviation(p);
    idem <= tol && herm <= tol
}

/// `(||p² - p||_F, ||p - p^dag||_F)`, infinite for non-square input.
pub fn projector_deviation(p: &ComplexMatrix) -> (f64, f64) {
    if !p.is_square() {
        return (f64::INFINITY, f64::INFINITY);
    }
    ((&(p * p) - p).frobenius_norm(), p.hermiticity_deviation())
}

/// True iff `||u^dag u - I||_F <= tol`.
pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    unitarity_deviation(u) <= tol
}

/// `||u^dag u - I||_F`, infinite for non-square input.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    match u.dim() {
        Ok(n) => (&(&u.adjoint() * u) - &ComplexMatrix::identity(n)).frobenius_norm(),
        Err(_) => f64::INFINITY,
    }
}
