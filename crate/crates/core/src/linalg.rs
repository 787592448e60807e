//! Thin wrappers over the LAPACK-backed routines used across the crate.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, EigValsh, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64;

use crate::error::Result;

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub(crate) fn eig(a: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    Ok(a.eig()?)
}

pub(crate) fn eigvals(a: &Array2<C64>) -> Result<Array1<C64>> {
    Ok(a.eigvals()?)
}

pub(crate) fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    Ok(a.inv()?)
}

/// Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix.
pub(crate) fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // LAPACK sees a row-major Hermitian matrix as its conjugate, so the
    // backend hands back conjugated eigenvectors for standard-layout input.
    let (w, v) = if a.is_standard_layout() { a.eigh(UPLO::Lower)? } else { a.as_standard_layout().eigh(UPLO::Lower)? };
    Ok((w, v.mapv(|z| z.conj())))
}

pub(crate) fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    Ok(a.eigvalsh(UPLO::Lower)?)
}

pub(crate) fn singular_values(a: &Array2<C64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s)
}

pub(crate) fn inverse_real(a: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(a.inv()?)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// ln k!
pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_eigenvectors_satisfy_the_eigen_equation() {
        let a = ndarray::array![[c(1.0), C64::new(0.0, 1.0)], [C64::new(0.0, -1.0), c(2.0)]];
        let (w, v) = eigh(&a).unwrap();
        let av = a.dot(&v);
        for k in 0..2 {
            for r in 0..2 {
                assert!((av[[r, k]] - v[[r, k]] * w[k]).norm() < 1e-12);
            }
        }
    }
}
