//! Haar-style samplers for unitaries, kets, densities and projector families.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{ComplexMatrix, UnitVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let entries = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::new(rows, cols, entries).expect("gaussian entries are finite")
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal folded back into Q.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.as_nalgebra().clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<Complex64> = (0..dim)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    ComplexMatrix::from_nalgebra(DMatrix::from_fn(dim, dim, |i, j| q[(i, j)] * phases[j]))
}

/// `dim × cols` matrix with orthonormal columns.
pub fn isometry<R: Rng + ?Sized>(dim: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let u = unitary(dim, rng);
    ComplexMatrix::from_fn(dim, cols, |i, j| u.get(i, j))
}

/// Uniformly distributed unit vector.
pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitVector {
    loop {
        let components: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(v) = UnitVector::normalized(components) {
            return v;
        }
    }
}

/// Random density matrix of the given rank (`G G^dag / Tr`, `G` Ginibre).
pub fn density_of_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rank.max(1), rng);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

/// Random density matrix with a rank drawn uniformly from `1..=dim`.
pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let rank = rng.random_range(1..=dim);
    density_of_rank(dim, rank, rng)
}

/// Splits the columns of a random unitary into a random number of mutually
/// orthogonal projectors. When `cover` is false a random tail of columns is
/// dropped, so the family need not sum to the identity.
pub fn orthogonal_family<R: Rng + ?Sized>(
    dim: usize,
    cover: bool,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let u = unitary(dim, rng);
    let used = if cover {
        dim
    } else {
        rng.random_range(1..=dim)
    };
    let mut family = Vec::new();
    let mut start = 0;
    while start < used {
        let width = rng.random_range(1..=used - start);
        let mut p = ComplexMatrix::zeros(dim, dim);
        for col in start..start + width {
            let v = u.column(col);
            p = &p + &ComplexMatrix::outer(&v, &v);
        }
        family.push(p);
        start += width;
    }
    family
}
