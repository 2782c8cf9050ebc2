//! Univariate robust estimators: median, MAD, Qn, the univariate (reweighted)
//! MCD, and robust column-wise standardization.

use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

use crate::error::{KmrcdError, Result};
use crate::kernel::DataMatrix;
use crate::linalg::median;

/// Normal-consistency constant for the MAD.
pub const MAD_CONSISTENCY: f64 = 1.4826;
/// Normal-consistency constant for Qn.
pub const QN_CONSISTENCY: f64 = 2.2219;
/// Cutoff on standardized residuals in the reweighting step.
pub const REWEIGHT_CUTOFF: f64 = 2.5;

/// A robust location/scale pair plus the observations it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationScale {
    pub location: f64,
    pub scale: f64,
    pub support: Vec<usize>,
}

/// Median absolute deviation scaled by 1.4826.
pub fn mad(values: &[f64]) -> f64 {
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    MAD_CONSISTENCY * median(&dev)
}

/// Contiguous window of sorted values with minimal variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McdWindow {
    /// Start position within the sorted values.
    pub start: usize,
    pub mean: f64,
    /// Sample standard deviation of the window (divisor `h - 1`), before any
    /// consistency factor.
    pub raw_scale: f64,
}

/// Scans all `n - h + 1` windows of length `h` of `sorted` and returns the one
/// with the smallest sum of squared deviations. Ties keep the earliest window.
pub fn min_variance_window(sorted: &[f64], h: usize) -> McdWindow {
    let n = sorted.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for start in 0..=(n - h) {
        let window = &sorted[start..start + h];
        let mean = window.iter().sum::<f64>() / h as f64;
        let ss: f64 = window.iter().map(|v| (v - mean) * (v - mean)).sum();
        if best.is_none_or(|(b, _, _)| ss < b) {
            best = Some((ss, start, mean));
        }
    }
    let (ss, start, mean) = best.expect("at least one window");
    let raw_scale = if h > 1 { (ss / (h - 1) as f64).sqrt() } else { 0.0 };
    McdWindow { start, mean, raw_scale }
}

/// `c_alpha = alpha / P(chi2_3 <= q_alpha)` with `q_alpha` the alpha-quantile
/// of `chi2_1`; makes the raw MCD variance consistent at the normal model.
pub fn mcd_consistency_factor(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let q = ChiSquared::new(1.0).expect("valid dof").inverse_cdf(alpha);
    alpha / ChiSquared::new(3.0).expect("valid dof").cdf(q)
}

fn argsort(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(KmrcdError::InvalidData("non-finite value".into()));
    }
    Ok(())
}

/// Univariate MCD with coverage `h`: the mean and consistency-corrected
/// standard deviation of the `h` contiguous order statistics with minimal
/// variance.
pub fn univariate_mcd(values: &[f64], h: usize) -> Result<LocationScale> {
    let n = values.len();
    if n < 2 {
        return Err(KmrcdError::TooFewValues { needed: 2, found: n });
    }
    check_finite(values)?;
    if 2 * h < n || h > n {
        return Err(KmrcdError::SubsetSize {
            h,
            n,
            reason: "univariate MCD needs n/2 <= h <= n".into(),
        });
    }
    let order = argsort(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let window = min_variance_window(&sorted, h);
    let factor = mcd_consistency_factor(h as f64 / n as f64);
    let mut support = order[window.start..window.start + h].to_vec();
    support.sort_unstable();
    Ok(LocationScale {
        location: window.mean,
        scale: window.raw_scale * factor.sqrt(),
        support,
    })
}

/// Variance of a standard normal truncated to `[-c, c]`.
fn truncated_normal_variance(c: f64) -> f64 {
    let std = Normal::standard();
    1.0 - 2.0 * c * std.pdf(c) / (2.0 * std.cdf(c) - 1.0)
}

/// Reweighted univariate MCD with coverage `floor(n/2) + 1`: observations
/// within 2.5 raw scales of the raw location are kept and summarized by their
/// mean and a consistency-corrected standard deviation.
pub fn reweighted_univariate_mcd(values: &[f64]) -> Result<LocationScale> {
    let n = values.len();
    if n < 2 {
        return Err(KmrcdError::TooFewValues { needed: 2, found: n });
    }
    let raw = univariate_mcd(values, n / 2 + 1)?;
    if raw.scale == 0.0 {
        return Ok(raw);
    }
    let support: Vec<usize> = (0..n)
        .filter(|&i| (values[i] - raw.location).abs() / raw.scale <= REWEIGHT_CUTOFF)
        .collect();
    let m = support.len() as f64;
    let location = support.iter().map(|&i| values[i]).sum::<f64>() / m;
    let ss: f64 = support.iter().map(|&i| (values[i] - location).powi(2)).sum();
    let sd = if support.len() > 1 { (ss / (m - 1.0)).sqrt() } else { 0.0 };
    Ok(LocationScale {
        location,
        scale: sd / truncated_normal_variance(REWEIGHT_CUTOFF).sqrt(),
        support,
    })
}

/// Small-sample correction for Qn.
fn qn_correction(n: usize) -> f64 {
    match n {
        0..=1 => f64::NAN,
        2 => 0.399,
        3 => 0.994,
        4 => 0.512,
        5 => 0.844,
        6 => 0.611,
        7 => 0.857,
        8 => 0.669,
        9 => 0.872,
        _ if n % 2 == 1 => n as f64 / (n as f64 + 1.4),
        _ => n as f64 / (n as f64 + 3.8),
    }
}

/// Rank `k = C(floor(n/2) + 1, 2)` of the pairwise-difference order statistic.
pub fn qn_rank(n: usize) -> usize {
    let h = n / 2 + 1;
    h * (h - 1) / 2
}

/// Qn scale estimator: `2.2219 * c(n) * {|v_i - v_j|; i < j}_(k)`.
pub fn qn_scale(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(KmrcdError::TooFewValues { needed: 2, found: n });
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let stat = kth_pairwise_difference(&sorted, qn_rank(n));
    Ok(QN_CONSISTENCY * qn_correction(n) * stat)
}

/// The `k`-th smallest (1-based) of `y_j - y_i`, `i < j`, for sorted `y`.
///
/// Row `i` of the implicit difference matrix holds `y_j - y_i` for `j > i`
/// and is nondecreasing in `j`. Candidate column ranges `[left_i, right_i)`
/// are narrowed around random pivots until few enough remain to sort.
fn kth_pairwise_difference(y: &[f64], k: usize) -> f64 {
    let n = y.len();
    let mut left: Vec<usize> = (0..n).map(|i| i + 1).collect();
    let mut right: Vec<usize> = vec![n; n];
    // Deterministic pivot choice: a simple LCG keeps results reproducible.
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    loop {
        let total: usize = (0..n).map(|i| right[i] - left[i]).sum();
        let below: usize = (0..n).map(|i| left[i] - (i + 1)).sum();
        if total <= n.max(64) {
            let mut cand: Vec<f64> = Vec::with_capacity(total);
            for i in 0..n {
                for j in left[i]..right[i] {
                    cand.push(y[j] - y[i]);
                }
            }
            cand.sort_by(f64::total_cmp);
            return cand[k - below - 1];
        }
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut r = ((state >> 11) % total as u64) as usize;
        let mut pivot = f64::NAN;
        for i in 0..n {
            let width = right[i] - left[i];
            if r < width {
                pivot = y[left[i] + r] - y[i];
                break;
            }
            r -= width;
        }
        // less[i] / not_greater[i]: entries of row i strictly below / at most pivot.
        let mut less = vec![0usize; n];
        let mut not_greater = vec![0usize; n];
        let (mut jl, mut jg) = (1usize, 1usize);
        for i in 0..n {
            jl = jl.max(i + 1);
            jg = jg.max(i + 1);
            while jl < n && y[jl] - y[i] < pivot {
                jl += 1;
            }
            while jg < n && y[jg] - y[i] <= pivot {
                jg += 1;
            }
            less[i] = jl - (i + 1);
            not_greater[i] = jg - (i + 1);
        }
        let count_less: usize = less.iter().sum();
        let count_not_greater: usize = not_greater.iter().sum();
        if k <= count_less {
            for i in 0..n {
                right[i] = right[i].min(i + 1 + less[i]);
                left[i] = left[i].min(right[i]);
            }
        } else if k > count_not_greater {
            for i in 0..n {
                left[i] = left[i].max(i + 1 + not_greater[i]);
                right[i] = right[i].max(left[i]);
            }
        } else {
            return pivot;
        }
    }
}

/// Robust column-wise standardization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub columns: Vec<LocationScale>,
}

impl Standardization {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.columns.len() {
            return Err(KmrcdError::DimensionMismatch {
                expected: self.columns.len(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.columns)
            .map(|(v, c)| (v - c.location) / c.scale)
            .collect())
    }

    pub fn locations(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.location).collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.scale).collect()
    }
}

/// Transforms every column to robust z-scores using the reweighted univariate MCD.
pub fn robust_standardize(data: &DataMatrix) -> Result<(DataMatrix, Standardization)> {
    let x = data.matrix();
    let mut columns = Vec::with_capacity(data.p());
    for j in 0..data.p() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        let est = reweighted_univariate_mcd(&col)?;
        if !(est.scale > 0.0) {
            return Err(KmrcdError::ZeroScale { column: j });
        }
        columns.push(est);
    }
    let z = DMatrix::from_fn(data.n(), data.p(), |i, j| {
        (x[(i, j)] - columns[j].location) / columns[j].scale
    });
    Ok((DataMatrix::standardized(z)?, Standardization { columns }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_qn_stat(v: &[f64]) -> f64 {
        let mut d = Vec::new();
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                d.push((v[i] - v[j]).abs());
            }
        }
        d.sort_by(f64::total_cmp);
        d[qn_rank(v.len()) - 1]
    }

    #[test]
    fn mcd_window_example() {
        let est = univariate_mcd(&[0.0, 1.0, 2.0, 10.0], 3).unwrap();
        assert_eq!(est.location, 1.0);
        assert_eq!(est.support, vec![0, 1, 2]);
        let w = min_variance_window(&[0.0, 1.0, 2.0, 10.0], 3);
        assert_eq!(w.start, 0);
        assert_eq!(w.raw_scale, 1.0);
        assert_relative_eq!(est.scale, mcd_consistency_factor(0.75).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn mcd_constant_and_full_coverage() {
        let est = univariate_mcd(&[2.5; 7], 4).unwrap();
        assert_eq!(est.scale, 0.0);
        assert_eq!(est.location, 2.5);

        let v = [1.0, 4.0, -2.0, 0.5, 3.0];
        let est = univariate_mcd(&v, 5).unwrap();
        let mean = v.iter().sum::<f64>() / 5.0;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert_relative_eq!(est.location, mean, epsilon = 1e-15);
        assert_relative_eq!(est.scale, sd, epsilon = 1e-15);
    }

    #[test]
    fn mcd_rejects_bad_h() {
        assert!(univariate_mcd(&[1.0, 2.0, 3.0, 4.0], 1).is_err());
        assert!(univariate_mcd(&[1.0, 2.0, 3.0, 4.0], 5).is_err());
        assert!(univariate_mcd(&[1.0], 1).is_err());
    }

    #[test]
    fn consistency_factor_limits() {
        assert_eq!(mcd_consistency_factor(1.0), 1.0);
        // alpha = 0.5: roughly 6.98
        let c = mcd_consistency_factor(0.5);
        assert!(c > 6.9 && c < 7.1, "{c}");
    }

    #[test]
    fn reweighted_degenerate_and_symmetric() {
        let est = reweighted_univariate_mcd(&[0.0, 0.0, 0.0, 0.0, 100.0]).unwrap();
        assert_eq!(est.location, 0.0);
        assert_eq!(est.scale, 0.0);
        let sym: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let est = reweighted_univariate_mcd(&sym).unwrap();
        assert_eq!(est.location, 0.0);
    }

    #[test]
    fn qn_examples() {
        let q = qn_scale(&[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(q, 2.2219 * 0.994, epsilon = 1e-15);
        assert_eq!(qn_scale(&[3.0; 6]).unwrap(), 0.0);
        assert!(qn_scale(&[1.0]).is_err());
    }

    #[test]
    fn qn_selection_matches_brute_force_with_ties() {
        let v: Vec<f64> = (0..150).map(|i| ((i * 37) % 23) as f64).collect();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        for k in [1, 7, 100, 2000, qn_rank(150), 150 * 149 / 2] {
            let mut d = Vec::new();
            for i in 0..150 {
                for j in (i + 1)..150 {
                    d.push(sorted[j] - sorted[i]);
                }
            }
            d.sort_by(f64::total_cmp);
            assert_eq!(kth_pairwise_difference(&sorted, k), d[k - 1], "k = {k}");
        }
        assert_eq!(qn_scale(&v).unwrap(), QN_CONSISTENCY * qn_correction(150) * brute_qn_stat(&v));
    }

    #[test]
    fn qn_equivariance() {
        let v = [0.3, -1.2, 2.2, 0.9, 5.0, -0.4, 1.7];
        let q = qn_scale(&v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| -3.0 * x + 11.0).collect();
        assert_relative_eq!(qn_scale(&shifted).unwrap(), 3.0 * q, max_relative = 1e-14);
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DataMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0], vec![4.0, 5.0]]).unwrap();
        assert!(matches!(robust_standardize(&x), Err(KmrcdError::ZeroScale { column: 1 })));
    }

    #[test]
    fn mad_scaled() {
        assert_relative_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.4826, epsilon = 1e-15);
    }
}
