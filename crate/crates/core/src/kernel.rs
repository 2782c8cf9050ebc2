//! Kernel functions, Gram matrices and feature-space centering.
//!
//! Every estimator in this crate works on an `n x n` Gram matrix
//! `K[i][j] = k(x_i, x_j)`. Centering a Gram matrix corresponds to subtracting
//! the (possibly weighted) mean of the feature vectors, so all feature-space
//! quantities can be expressed through `K` alone.

use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{KmrcdError, Result};
use crate::linalg::{max_asymmetry, sorted_eigenvalues};

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_TOL * lambda_max` make a Gram matrix indefinite.
pub const PSD_TOL: f64 = 1e-8;

/// Kernel function and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `k(x, y) = x'y`
    Linear,
    /// `k(x, y) = exp(-|x - y|^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
    /// `k(x, y) = (x'y + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// The Gram matrix is supplied directly; there is no kernel function.
    Precomputed,
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Rbf { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                KmrcdError::InvalidKernel(format!("RBF sigma must be positive and finite, got {sigma}")),
            ),
            KernelSpec::Polynomial { degree, .. } if degree < 1 => Err(KmrcdError::InvalidKernel(
                "polynomial degree must be at least 1".into(),
            )),
            KernelSpec::Polynomial { offset, .. } if !offset.is_finite() => Err(
                KmrcdError::InvalidKernel("polynomial offset must be finite".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    /// Evaluates `k(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(KmrcdError::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        self.validate()?;
        match *self {
            KernelSpec::Precomputed => Err(KmrcdError::NoKernelFunction),
            _ => Ok(self.eval_unchecked(x, y)),
        }
    }

    /// Evaluates the kernel without parameter or dimension checks.
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
            KernelSpec::Precomputed => f64::NAN,
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `kernel_eval(spec, x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// An `n x p` matrix of observations (one row each).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: DMatrix<f64>,
    standardized: bool,
}

impl DataMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        Self::with_flag(rows, false)
    }

    /// Wraps data that has already been robustly standardized.
    pub fn standardized(rows: DMatrix<f64>) -> Result<Self> {
        Self::with_flag(rows, true)
    }

    fn with_flag(rows: DMatrix<f64>, standardized: bool) -> Result<Self> {
        Self::checked(rows, standardized, 2)
    }

    fn checked(rows: DMatrix<f64>, standardized: bool, min_rows: usize) -> Result<Self> {
        if rows.nrows() < min_rows {
            return Err(KmrcdError::InvalidData(format!(
                "need at least 2 observations, got {}",
                rows.nrows()
            )));
        }
        if rows.ncols() == 0 {
            return Err(KmrcdError::InvalidData("observations have no variables".into()));
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % rows.nrows(), pos / rows.nrows());
            return Err(KmrcdError::InvalidData(format!("non-finite value at row {i}, column {j}")));
        }
        Ok(DataMatrix { rows, standardized })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(KmrcdError::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }

    /// Rows as contiguous vectors, the layout kernel evaluation wants.
    pub fn row_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// The rows listed in `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DataMatrix> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(KmrcdError::InvalidData(format!("row {bad} out of range")));
        }
        let rows = DMatrix::from_fn(indices.len(), self.p(), |a, j| self.rows[(indices[a], j)]);
        Self::checked(rows, self.standardized, 1)
    }
}

/// What a Gram matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    Raw,
    Centered,
    WeightedCentered,
    Regularized,
}

/// Symmetric matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    kind: GramKind,
}

impl GramMatrix {
    pub(crate) fn from_parts(entries: DMatrix<f64>, kind: GramKind) -> Self {
        GramMatrix { entries, kind }
    }

    /// Accepts a user-supplied raw Gram matrix after checking that it is
    /// square, finite, symmetric and positive semidefinite up to round-off.
    pub fn precomputed(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(KmrcdError::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.nrows() < 2 {
            return Err(KmrcdError::InvalidData("Gram matrix needs at least 2 rows".into()));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            let n = entries.nrows();
            return Err(KmrcdError::NonFiniteKernel { i: pos % n, j: pos / n });
        }
        let (asym, i, j) = max_asymmetry(&entries);
        if asym > SYMMETRY_TOL {
            return Err(KmrcdError::NotSymmetric {
                i,
                j,
                a: entries[(i, j)],
                b: entries[(j, i)],
            });
        }
        check_psd(&entries)?;
        Ok(GramMatrix {
            entries,
            kind: GramKind::Raw,
        })
    }

    /// Reads a precomputed Gram matrix from headerless CSV: `n` rows of `n`
    /// comma-separated reals.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        KmrcdError::InvalidData(format!("row {line}: cannot parse {field:?} as a number"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(KmrcdError::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::precomputed(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

fn check_psd(entries: &DMatrix<f64>) -> Result<()> {
    let eigs = sorted_eigenvalues(entries.clone());
    let largest = eigs[0];
    let smallest = eigs[eigs.len() - 1];
    if smallest < -PSD_TOL * largest.abs().max(f64::MIN_POSITIVE) {
        return Err(KmrcdError::NotPositiveSemidefinite {
            eigenvalue: smallest,
            largest,
        });
    }
    Ok(())
}

/// `K[i][j] = k(x_i, x_j)` for all pairs of rows.
pub fn gram_matrix(spec: &KernelSpec, data: &DataMatrix) -> Result<GramMatrix> {
    if matches!(spec, KernelSpec::Precomputed) {
        return Err(KmrcdError::NoKernelFunction);
    }
    spec.validate()?;
    let rows = data.row_vectors();
    let n = rows.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = spec.eval_unchecked(&rows[i], &rows[j]);
            if !v.is_finite() {
                return Err(KmrcdError::NonFiniteKernel { i, j });
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries: k,
        kind: GramKind::Raw,
    })
}

/// Double centering `K - 1K - K1 + 1K1` with `1` the matrix of `1/n` entries.
pub fn center_gram(k: &GramMatrix) -> GramMatrix {
    let n = k.n();
    let w = DVector::from_element(n, 1.0 / n as f64);
    GramMatrix {
        entries: weighted_center(k.entries(), &w),
        kind: GramKind::Centered,
    }
}

/// Centering at the weighted feature-space mean `c = sum_i w_i phi(x_i)`:
/// `K - Kw1' - 1w'K + (w'Kw)11'`.
pub fn center_gram_weighted(k: &GramMatrix, w: &DVector<f64>) -> Result<GramMatrix> {
    if w.len() != k.n() {
        return Err(KmrcdError::DimensionMismatch {
            expected: k.n(),
            found: w.len(),
        });
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(KmrcdError::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(KmrcdError::InvalidWeights(format!("weights must sum to 1, got {total}")));
    }
    Ok(GramMatrix {
        entries: weighted_center(k.entries(), w),
        kind: GramKind::WeightedCentered,
    })
}

pub(crate) fn weighted_center(k: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let kw = k * w;
    let c = w.dot(&kw);
    let n = k.nrows();
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - kw[i] - kw[j] + c)
}

/// Double centering of kernel values with respect to the mean of an
/// `h`-subset in feature space.
///
/// For `a` in the subset and any observation `x`,
/// `k~(x_a, x) = k(x_a, x) - (1/h) sum_i k(x_i, x) - (1/h) sum_i k(x_i, x_a) + (1/h^2) sum_ij k(x_i, x_j)`,
/// which equals `(phi(x_a) - c)'(phi(x) - c)` for the subset mean `c`.
#[derive(Debug, Clone)]
pub struct SubsetCentering {
    subset: Vec<usize>,
    /// `(1/h) sum_{i in H} K[i][j]` for every observation `j`.
    column_means: DVector<f64>,
    /// `(1/h^2) sum_{i,j in H} K[i][j]`.
    grand_mean: f64,
}

impl SubsetCentering {
    pub fn new(k: &DMatrix<f64>, subset: &[usize]) -> Self {
        let n = k.nrows();
        let h = subset.len() as f64;
        let column_means = DVector::from_fn(n, |j, _| subset.iter().map(|&i| k[(i, j)]).sum::<f64>() / h);
        let grand_mean = subset.iter().map(|&i| column_means[i]).sum::<f64>() / h;
        SubsetCentering {
            subset: subset.to_vec(),
            column_means,
            grand_mean,
        }
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// Centered Gram block of the subset, `h x h`.
    pub fn centered_block(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let h = self.subset.len();
        DMatrix::from_fn(h, h, |a, b| {
            let (i, j) = (self.subset[a], self.subset[b]);
            k[(i, j)] - self.column_means[i] - self.column_means[j] + self.grand_mean
        })
    }

    /// `k~(H, x_j)` for every observation `j`, as the columns of an `h x n` matrix.
    pub fn cross_block(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let h = self.subset.len();
        let n = k.nrows();
        DMatrix::from_fn(h, n, |a, j| {
            let i = self.subset[a];
            k[(i, j)] - self.column_means[j] - self.column_means[i] + self.grand_mean
        })
    }

    /// `k~(x_j, x_j)` for every observation `j`.
    pub fn self_terms(&self, k: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(k.nrows(), |j, _| {
            k[(j, j)] - 2.0 * self.column_means[j] + self.grand_mean
        })
    }
}

/// Centering data for new points when only the subset's coordinates and the
/// kernel are known.
#[derive(Debug, Clone)]
pub struct SubsetKernelCenter {
    spec: KernelSpec,
    rows: Vec<Vec<f64>>,
    /// `(1/h) sum_{i in H} k(x_i, x_a)` for each subset member `a`.
    member_means: DVector<f64>,
    grand_mean: f64,
}

impl SubsetKernelCenter {
    pub fn new(spec: &KernelSpec, subset_rows: &DataMatrix) -> Result<Self> {
        let k = gram_matrix(spec, subset_rows)?;
        let h = subset_rows.n() as f64;
        let member_means = DVector::from_fn(subset_rows.n(), |a, _| k.entries().row(a).sum() / h);
        let grand_mean = member_means.sum() / h;
        Ok(SubsetKernelCenter {
            spec: *spec,
            rows: subset_rows.row_vectors(),
            member_means,
            grand_mean,
        })
    }

    pub fn h(&self) -> usize {
        self.rows.len()
    }

    pub fn dimension(&self) -> usize {
        self.rows[0].len()
    }

    fn raw_cross(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dimension() {
            return Err(KmrcdError::DimensionMismatch {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.h(),
            self.rows.iter().map(|r| self.spec.eval_unchecked(r, x)),
        ))
    }

    /// `[k~(x_i(1), x), ..., k~(x_i(h), x)]`.
    pub fn cross_kernel(&self, x: &[f64]) -> Result<DVector<f64>> {
        let raw = self.raw_cross(x)?;
        let mean_x = raw.sum() / self.h() as f64;
        Ok(DVector::from_fn(self.h(), |a, _| {
            raw[a] - mean_x - self.member_means[a] + self.grand_mean
        }))
    }

    /// `k~(x, x) = |phi(x) - c|^2`.
    pub fn self_kernel(&self, x: &[f64]) -> Result<f64> {
        let raw = self.raw_cross(x)?;
        let mean_x = raw.sum() / self.h() as f64;
        Ok(self.spec.eval_unchecked(x, x) - 2.0 * mean_x + self.grand_mean)
    }
}

/// `cross_kernel(spec, X_H, x)`: centered kernel values between the subset
/// rows and `x`, centering at the subset mean.
pub fn cross_kernel(spec: &KernelSpec, subset_rows: &DataMatrix, x: &[f64]) -> Result<DVector<f64>> {
    SubsetKernelCenter::new(spec, subset_rows)?.cross_kernel(x)
}

/// Median heuristic: `sigma^2 = median_{i<j} |x_i - x_j|^2` over standardized data.
pub fn median_heuristic_bandwidth(data: &DataMatrix) -> Result<f64> {
    if !data.is_standardized() {
        return Err(KmrcdError::InvalidData(
            "median heuristic expects standardized data".into(),
        ));
    }
    let rows = data.row_vectors();
    let n = rows.len();
    let mut d2 = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push(rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    let med = crate::linalg::median(&d2);
    if !(med > 0.0) {
        return Err(KmrcdError::DegenerateBandwidth);
    }
    Ok(med.sqrt())
}
