//! Small dense helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|v| v / n).collect()
}

/// Angle between two directions, in radians.
pub(crate) fn angle(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b) / (norm(a) * norm(b));
    c.clamp(-1.0, 1.0).acos()
}

/// Orthonormal basis of the complement of the unit vector `t`, as columns.
pub(crate) fn tangent_basis(t: &[f64]) -> DMatrix<f64> {
    let n = t.len();
    // Householder reflection mapping e_k to ±t; its other columns span t^⊥.
    let k = (0..n).max_by(|&a, &b| t[a].abs().total_cmp(&t[b].abs())).unwrap();
    let mut v = DVector::from_column_slice(t);
    let s = if t[k] >= 0.0 { 1.0 } else { -1.0 };
    v[k] += s;
    let vv = v.dot(&v);
    let h = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    let cols: Vec<usize> = (0..n).filter(|&c| c != k).collect();
    DMatrix::from_fn(n, n - 1, |i, j| h[(i, cols[j])])
}

/// Sum with pairwise reduction; deterministic for a fixed input order.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub(crate) fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        for t in [vec![1.0, 0.0, 0.0], vec![0.3, -0.4, 0.5], vec![-0.1, 0.2, -0.9, 0.3]] {
            let t = normalized(&t);
            let b = tangent_basis(&t);
            let tv = DVector::from_column_slice(&t);
            assert!((b.transpose() * &tv).amax() < 1e-14);
            let g = b.transpose() * &b;
            assert!((g - DMatrix::identity(t.len() - 1, t.len() - 1)).amax() < 1e-14);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }
}
