//! Hermitian eigendecomposition helpers bridging `ndarray` storage to
//! `nalgebra`'s symmetric eigensolver.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending by
/// eigenvalue. Column `k` of `vectors` belongs to `values[k]`.
pub struct EigH {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

fn to_na(m: &Array2<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    DMatrix::from_fn(n, m.ncols(), |i, j| m[[i, j]])
}

/// Full eigendecomposition of a Hermitian matrix. The input is assumed
/// Hermitian; only its lower triangle is referenced by the solver.
pub fn eigh(m: &Array2<C64>) -> EigH {
    let n = m.nrows();
    let eig = to_na(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, col]] = eig.eigenvectors[(i, k)];
        }
    }
    EigH { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &Array2<C64>) -> Vec<f64> {
    let ev = to_na(m).symmetric_eigenvalues();
    let mut vals: Vec<f64> = ev.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigval(m: &Array2<C64>) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}
