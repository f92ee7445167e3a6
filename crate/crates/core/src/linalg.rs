//! Dense symmetric eigensolves shared by the FPCA and Nyström code.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, eigenvalues descending. Column `j` of the
/// returned matrix is the unit eigenvector for eigenvalue `j`.
pub(crate) fn symmetric_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let order = descending_order(eig.eigenvalues.as_slice());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Eigenvalues only, descending.
pub(crate) fn symmetric_eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps the solver's order among exact ties, so output is deterministic.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Flip `v` so that its entry of largest absolute value is positive. The first
/// such entry wins ties.
pub(crate) fn orient(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
