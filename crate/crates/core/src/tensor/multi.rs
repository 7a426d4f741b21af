use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::matrix::ComplexMatrix;

/// Row-major flat offset of `index` within `shape`; the first axis is the
/// most significant.
pub fn flat_index(shape: &[usize], index: &[usize]) -> Result<usize> {
    if shape.len() != index.len() {
        return Err(Error::IndexOutOfRange(format!(
            "index {index:?} has {} axes, shape {shape:?} has {}",
            index.len(),
            shape.len()
        )));
    }
    let mut flat = 0;
    for (axis, (&extent, &k)) in shape.iter().zip(index).enumerate() {
        if k >= extent {
            return Err(Error::IndexOutOfRange(format!(
                "axis {axis}: {k} >= {extent}"
            )));
        }
        flat = flat * extent + k;
    }
    Ok(flat)
}

/// Inverse of [`flat_index`]. `flat` must be below the product of `shape`.
pub fn unflatten(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; shape.len()];
    for (slot, &extent) in index.iter_mut().zip(shape).rev() {
        *slot = flat % extent;
        flat /= extent;
    }
    index
}

/// All multi-indices of `shape` in row-major order.
pub fn multi_indices(shape: &[usize]) -> MultiIndices {
    MultiIndices {
        shape: shape.to_vec(),
        next: if shape.contains(&0) {
            None
        } else {
            Some(vec![0; shape.len()])
        },
    }
}

/// Odometer over a shape, last axis fastest.
#[derive(Debug, Clone)]
pub struct MultiIndices {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for MultiIndices {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut axis = succ.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            succ[axis] += 1;
            if succ[axis] < self.shape[axis] {
                self.next = Some(succ);
                break;
            }
            succ[axis] = 0;
        }
        Some(current)
    }
}

/// Dense complex array with an arbitrary number of axes, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) || data.len() != expected {
            return Err(Error::ShapeMismatch {
                shape,
                expected,
                found: data.len(),
            });
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![Complex64::new(0.0, 0.0); n])
    }

    /// Reshapes a matrix into a tensor whose leading axes `row_shape` split
    /// the rows and trailing axes `col_shape` split the columns.
    pub fn from_matrix(
        m: &ComplexMatrix,
        row_shape: &[usize],
        col_shape: &[usize],
    ) -> Result<Self> {
        let rows: usize = row_shape.iter().product();
        let cols: usize = col_shape.iter().product();
        if rows != m.rows() || cols != m.cols() {
            return Err(Error::ShapeMismatch {
                shape: [row_shape, col_shape].concat(),
                expected: rows * cols,
                found: m.rows() * m.cols(),
            });
        }
        Self::new([row_shape, col_shape].concat(), m.to_row_major())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> Result<Complex64> {
        Ok(self.data[flat_index(&self.shape, index)?])
    }

    pub fn set(&mut self, index: &[usize], value: Complex64) -> Result<()> {
        let flat = flat_index(&self.shape, index)?;
        self.data[flat] = value;
        Ok(())
    }

    /// Views the first `split` axes as rows and the rest as columns.
    pub fn to_matrix(&self, split: usize) -> Result<ComplexMatrix> {
        if split > self.shape.len() {
            return Err(Error::IndexOutOfRange(format!(
                "split {split} beyond {} axes",
                self.shape.len()
            )));
        }
        let rows = self.shape[..split].iter().product();
        let cols = self.shape[split..].iter().product();
        ComplexMatrix::new(rows, cols, self.data.clone())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                shape: other.shape.clone(),
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
