//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Modified Gram-Schmidt, run twice, dropping columns whose residual falls
/// below `tol` relative to their original norm.
pub(crate) fn orthonormalize_columns(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let mut v = m.column(j).clone_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let r = v.norm();
        if r > tol * norm0 {
            out.push(v / r);
        }
    }
    if out.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&out)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
pub(crate) fn sym_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).clone_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Split the eigenvectors of a PSD matrix into (null space, range) using a
/// threshold relative to the largest eigenvalue.
pub(crate) fn psd_split(m: DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let rows = m.nrows();
    let (vals, vecs) = sym_eigen_sorted(m);
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let cut = vals.iter().take_while(|&&v| v <= rel_tol * top).count();
    let null = if cut == 0 { DMatrix::zeros(rows, 0) } else { vecs.columns(0, cut).clone_owned() };
    let range = if cut == rows { DMatrix::zeros(rows, 0) } else { vecs.columns(cut, rows - cut).clone_owned() };
    (null, range)
}

/// Deterministic orthonormal basis of the column span of `v`: reduced row
/// echelon form of `v^T` followed by Gram-Schmidt. Spans that contain
/// coordinate axes come out aligned with them.
pub(crate) fn canonical_span(v: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (d, k) = (v.nrows(), v.ncols());
    if k == 0 {
        return v.clone();
    }
    let mut a = v.transpose(); // k x d
    let mut row = 0;
    for col in 0..d {
        if row == k {
            break;
        }
        let (piv, val) = (row..k)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        a.swap_rows(row, piv);
        let p = a[(row, col)];
        for c in 0..d {
            a[(row, c)] /= p;
        }
        for r in 0..k {
            if r != row {
                let f = a[(r, col)];
                if f != 0.0 {
                    for c in 0..d {
                        let x = a[(row, c)];
                        a[(r, c)] -= f * x;
                    }
                }
            }
        }
        row += 1;
    }
    for x in a.iter_mut() {
        if x.abs() < 1e-14 {
            *x = 0.0;
        }
    }
    orthonormalize_columns(&a.rows(0, row).transpose(), 1e-8)
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `y` inside `R^w`.
pub(crate) fn complement(y: &DMatrix<f64>) -> DMatrix<f64> {
    let w = y.nrows();
    let proj = DMatrix::<f64>::identity(w, w) - y * y.transpose();
    let (vals, vecs) = sym_eigen_sorted(proj);
    let keep: Vec<_> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| vecs.column(i).clone_owned())
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(w, 0)
    } else {
        DMatrix::from_columns(&keep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_span_aligns_with_axes() {
        // span{e0 + e2, e0 - e2} = span{e0, e2}
        let v = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, -1.0]);
        let c = canonical_span(&v, 1e-12);
        assert_eq!(c.ncols(), 2);
        assert!((c[(0, 0)] - 1.0).abs() < 1e-14 && c[(2, 0)].abs() < 1e-14);
        assert!((c[(2, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthogonal() {
        let y = orthonormalize_columns(&DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 0.0, 0.0]), 1e-12);
        let c = complement(&y);
        assert_eq!(c.ncols(), 3);
        assert!((y.transpose() * &c).iter().all(|x| x.abs() < 1e-12));
    }
}
