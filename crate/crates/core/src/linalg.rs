//! Small dense linear-algebra helpers shared across modules.

use nalgebra::DMatrix;

/// Max absolute row sum.
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of the symmetric part (M + M^T)/2.
pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    nalgebra::linalg::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Numerical rank via singular values with the usual max(dim)*eps*s_max cutoff.
pub(crate) fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 16.0;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Stack matrices left-to-right. All blocks must share a row count.
pub(crate) fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn rank_of_rank_one_matrix() {
        let m = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert_eq!(numeric_rank(&m), 1);
    }

    #[test]
    fn min_eig_of_identity() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!((min_symmetric_eigenvalue(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hstack_concatenates_columns() {
        let a = dmatrix![1.0; 2.0];
        let b = dmatrix![3.0, 4.0; 5.0, 6.0];
        let s = hstack(&[&a, &b]);
        assert_eq!(s, dmatrix![1.0, 3.0, 4.0; 2.0, 5.0, 6.0]);
    }
}
