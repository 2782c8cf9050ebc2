//! Small dense linear-algebra helpers shared by the estimator modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; eigenvectors are the matching columns.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        SortedEigen { values, vectors }
    }

    pub fn largest(&self) -> f64 {
        self.values.get(0).copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.iter().copied().last().unwrap_or(0.0)
    }
}

/// Eigenvalues only, sorted descending.
pub fn sorted_eigenvalues(m: DMatrix<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(v)
}

/// Largest relative asymmetry `|a_ij - a_ji| / max|a|`, with the offending pair.
pub fn max_asymmetry(m: &DMatrix<f64>) -> (f64, usize, usize) {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = (0.0, 0, 0);
    for j in 0..m.ncols() {
        for i in (j + 1)..m.nrows() {
            let d = (m[(i, j)] - m[(j, i)]).abs() / scale;
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

/// Gathers the submatrix `m[rows, cols]`.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

/// Median of a slice (mean of the two middle order statistics for even length).
/// Returns NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Indices of the `h` smallest scores; ties go to the smaller index. The
/// result is sorted ascending.
pub fn smallest_indices(scores: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut picked = order[..h.min(scores.len())].to_vec();
    picked.sort_unstable();
    picked
}

/// Diagonally pivoted Cholesky factor `F` (`n x r`) with `K ~ F F'`.
///
/// Stops once the largest remaining diagonal entry of the Schur complement
/// is at most `rel_tol` times the largest diagonal entry of `K`. Returns
/// `None` if more than `max_rank` columns would be needed. Ties between
/// pivots go to the smaller index.
pub fn pivoted_cholesky(k: &DMatrix<f64>, rel_tol: f64, max_rank: usize) -> Option<DMatrix<f64>> {
    let n = k.nrows();
    let mut resid: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
    let top = resid.iter().copied().fold(0.0, f64::max);
    let tol = rel_tol * top;
    let mut cols: Vec<DVector<f64>> = Vec::new();
    loop {
        let (piv, &best) = resid
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
        if !(best > tol) {
            break;
        }
        if cols.len() == max_rank {
            return None;
        }
        let root = best.sqrt();
        let mut col = DVector::from_fn(n, |i, _| k[(i, piv)]);
        for c in &cols {
            let cp = c[piv];
            col.axpy(-cp, c, 1.0);
        }
        col /= root;
        for i in 0..n {
            resid[i] -= col[i] * col[i];
        }
        resid[piv] = 0.0;
        cols.push(col);
    }
    if cols.is_empty() {
        return Some(DMatrix::zeros(n, 0));
    }
    Some(DMatrix::from_columns(&cols))
}
