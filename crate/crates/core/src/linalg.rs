//! Small dense helpers shared by the physics modules.
//!
//! Density matrices are vectorized column-major, matching nalgebra storage:
//! `vec(ρ)[j + n k] = ρ[(j, k)]`. With this convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::DMatrix;

use crate::{CMatrix, RMatrix, C64};

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

/// Largest entry-wise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn projector(n: usize, j: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    p[(j, j)] = C64::new(1.0, 0.0);
    p
}

/// `|j⟩⟨k|` on an `n`-dimensional space.
pub fn ket_bra(n: usize, j: usize, k: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    p[(j, k)] = C64::new(1.0, 0.0);
    p
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue_hermitian(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Superoperator of `X ↦ A X B`.
pub fn sandwich_superop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

pub fn vectorize(m: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &nalgebra::DVector<C64>, n: usize) -> CMatrix {
    DMatrix::from_column_slice(n, n, v.as_slice())
}
