//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.clone().exp()
}

/// max |A − A†|
pub fn hermitian_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// max |A†A − I|
pub fn unitary_residual(m: &DMatrix<C64>) -> f64 {
    let prod = m.adjoint() * m;
    let n = prod.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    // symmetrize to kill rounding asymmetry before handing to the solver
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Top-left `dim × dim` block.
pub fn crop(m: &DMatrix<C64>, dim: usize) -> DMatrix<C64> {
    m.view((0, 0), (dim, dim)).into_owned()
}

pub fn real_to_complex(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}
