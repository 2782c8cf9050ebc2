//! Kernelized refinement of an initial estimate.
//!
//! The eigenvalues of the initial scatter are replaced by squared Qn scales of
//! the projections on its eigenvectors, the center is re-estimated by a
//! spatial median in the whitened feature space, and the `h` points closest to
//! that center (in the refined metric) form the refined subset.

use nalgebra::{DMatrix, DVector};

use crate::error::{KmrcdError, Result};
use crate::initial::{spatial_median_weights, HSubset, WeightPair, SPATIAL_MEDIAN_ITERATIONS};
use crate::kernel::{weighted_center, GramMatrix};
use crate::linalg::{smallest_indices, SortedEigen};
use crate::robust::qn_scale;

/// Eigenpairs below `RANK_TOL * lambda_max` are dropped.
pub const RANK_TOL: f64 = 1e-9;
/// Qn values are floored here before squaring.
pub const QN_FLOOR: f64 = 1e-10;

/// Intermediate quantities of one refinement.
#[derive(Debug, Clone)]
pub struct RefinementState {
    /// Normalized covariance weights `u_i / sum u` (the diagonal of `D`).
    pub d: DVector<f64>,
    /// Retained eigenvalues of `D^(1/2) K~_w D^(1/2)`, descending.
    pub eigenvalues: DVector<f64>,
    /// Projections of the uncentered feature vectors on the unit-norm
    /// feature-space eigenvectors (`n x r`).
    pub projections: DMatrix<f64>,
    /// Squared Qn scale of every projection column.
    pub scales: DVector<f64>,
    /// Gram matrix of the whitened feature vectors.
    pub whitened_gram: DMatrix<f64>,
    /// Spatial-median coefficients in the whitened space.
    pub gamma: DVector<f64>,
    /// Squared refined distances `d*`.
    pub distances: DVector<f64>,
}

impl RefinementState {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn normalized_weights(n: usize, wp: &WeightPair) -> Result<(DVector<f64>, DVector<f64>)> {
    wp.validate()?;
    if wp.w.len() != n {
        return Err(KmrcdError::DimensionMismatch {
            expected: n,
            found: wp.w.len(),
        });
    }
    Ok((&wp.w / wp.w.sum(), &wp.u / wp.u.sum()))
}

fn retained_rank(values: &DVector<f64>) -> Result<usize> {
    let lambda_max = values.get(0).copied().unwrap_or(0.0);
    let r = if lambda_max > 0.0 {
        values.iter().take_while(|&&l| l > RANK_TOL * lambda_max).count()
    } else {
        0
    };
    if r == 0 {
        return Err(KmrcdError::AllVarianceInCenter);
    }
    Ok(r)
}

/// Steps 2 and 3: squared Qn scales of the projections and the spatial median
/// of the whitened feature vectors.
fn whiten(projections: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let (n, r) = projections.shape();
    let mut scales = DVector::zeros(r);
    for j in 0..r {
        let col: Vec<f64> = projections.column(j).iter().copied().collect();
        let q = qn_scale(&col)?.max(QN_FLOOR);
        scales[j] = q * q;
    }
    // K* = B L^-1 B'
    let scaled = DMatrix::from_fn(n, r, |i, j| projections[(i, j)] / scales[j]);
    let whitened_gram = &scaled * projections.transpose();
    let gamma = spatial_median_weights(&whitened_gram, SPATIAL_MEDIAN_ITERATIONS);
    Ok((scales, whitened_gram, gamma))
}

/// Runs the four refinement steps on the Gram matrix and returns all
/// intermediate quantities.
pub fn refine_state(k: &GramMatrix, wp: &WeightPair) -> Result<RefinementState> {
    let n = k.n();
    let (w, d) = normalized_weights(n, wp)?;
    let km = k.entries();

    // Step 1: eigenvectors of the weighted centered Gram matrix. Rows with
    // zero covariance weight do not enter D^(1/2) K~_w D^(1/2), so the
    // eigenproblem is solved on the support of d.
    let support: Vec<usize> = (0..n).filter(|&i| d[i] > 0.0).collect();
    let d_sqrt = d.map(f64::sqrt);
    let kc = weighted_center(km, &w);
    let khat = DMatrix::from_fn(support.len(), support.len(), |a, b| {
        let (i, j) = (support[a], support[b]);
        d_sqrt[i] * kc[(i, j)] * d_sqrt[j]
    });
    let eig = SortedEigen::new(khat);
    let r = retained_rank(&eig.values)?;
    let eigenvalues = eig.values.rows(0, r).into_owned();

    // G = D^(1/2) V_r Lambda_r^(-1/2); feature-space eigenvectors are Phi~' G.
    let mut g = DMatrix::zeros(n, r);
    for (a, &i) in support.iter().enumerate() {
        for j in 0..r {
            g[(i, j)] = d_sqrt[i] * eig.vectors[(a, j)] / eigenvalues[j].sqrt();
        }
    }

    // Phi Phi~' = K - K w 1'
    let kw = km * &w;
    let uncentered_cross = DMatrix::from_fn(n, n, |a, i| km[(a, i)] - kw[a]);
    let projections = &uncentered_cross * &g;

    let (scales, whitened_gram, gamma) = whiten(&projections)?;

    // Step 4: k*(x_i, X)_l = k(x_i, x_l) - sum_m w_m k(x_i, x_m)
    //                        - sum_j gamma_j k(x_j, x_l) + sum_mj w_m gamma_j k(x_m, x_j).
    // The last term enters with a plus sign: k*(x, X) = (phi(x) - c*)' Phi~'.
    let kg = km * &gamma;
    let wkg = w.dot(&kg);
    let kstar = DMatrix::from_fn(n, n, |i, l| km[(i, l)] - kw[i] - kg[l] + wkg);
    let t = &kstar * &g;
    let distances = DVector::from_fn(n, |i, _| (0..r).map(|j| t[(i, j)] * t[(i, j)] / scales[j]).sum::<f64>());

    Ok(RefinementState {
        d,
        eigenvalues,
        projections,
        scales,
        whitened_gram,
        gamma,
        distances,
    })
}

/// The same refinement when the kernel is given by explicit feature
/// coordinates `F` (`n x r`, `K = F F'`). The feature-space eigenvectors are
/// then the eigenvectors of the weighted covariance `sum_i d_i (f_i - m)(f_i - m)'`.
pub fn refine_state_factored(f: &DMatrix<f64>, wp: &WeightPair) -> Result<RefinementState> {
    let n = f.nrows();
    let (w, d) = normalized_weights(n, wp)?;
    let m = f.transpose() * &w;
    let centered = DMatrix::from_fn(n, f.ncols(), |i, j| (f[(i, j)] - m[j]) * d[i].sqrt());
    let eig = SortedEigen::new(centered.transpose() * &centered);
    let r = retained_rank(&eig.values)?;
    let eigenvalues = eig.values.rows(0, r).into_owned();
    let axes = eig.vectors.columns(0, r).into_owned();

    let projections = f * &axes;
    let (scales, whitened_gram, gamma) = whiten(&projections)?;

    let center = f.transpose() * &gamma;
    let t = (f - DMatrix::from_fn(n, f.ncols(), |_, j| center[j])) * &axes;
    let distances = DVector::from_fn(n, |i, _| (0..r).map(|j| t[(i, j)] * t[(i, j)] / scales[j]).sum::<f64>());

    Ok(RefinementState {
        d,
        eigenvalues,
        projections,
        scales,
        whitened_gram,
        gamma,
        distances,
    })
}

fn check_h(h: usize, n: usize) -> Result<()> {
    if h == 0 || h > n {
        return Err(KmrcdError::SubsetSize {
            h,
            n,
            reason: "need 1 <= h <= n".into(),
        });
    }
    Ok(())
}

/// Refined `h`-subset: the `h` smallest refined distances (ties to the smaller index).
pub fn refine(k: &GramMatrix, wp: &WeightPair, h: usize) -> Result<HSubset> {
    check_h(h, k.n())?;
    let state = refine_state(k, wp)?;
    HSubset::new(smallest_indices(state.distances.as_slice(), h), k.n())
}

/// [`refine`] on explicit feature coordinates.
pub fn refine_factored(f: &DMatrix<f64>, wp: &WeightPair, h: usize) -> Result<HSubset> {
    check_h(h, f.nrows())?;
    let state = refine_state_factored(f, wp)?;
    HSubset::new(smallest_indices(state.distances.as_slice(), h), f.nrows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{subset_from_scores, InitialEstimator};
    use crate::kernel::{gram_matrix, DataMatrix, KernelSpec};

    fn indicator_pair(n: usize, members: &[usize]) -> WeightPair {
        let mut scores = vec![1.0; n];
        for &i in members {
            scores[i] = 0.0;
        }
        subset_from_scores(&scores, members.len(), InitialEstimator::SpatialMedian).unwrap().1
    }

    #[test]
    fn full_subset_returns_all() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let k = gram_matrix(&KernelSpec::Linear, &DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let wp = indicator_pair(6, &[0, 1, 2, 3, 4, 5]);
        let h = refine(&k, &wp, 6).unwrap();
        assert_eq!(h.indices(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn far_points_are_dropped() {
        let mut rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = i as f64 * 0.8;
                vec![t.cos() * (1.0 + 0.1 * i as f64), t.sin()]
            })
            .collect();
        rows.push(vec![1e6, 1e6]);
        rows.push(vec![-1e6, 2e6]);
        let k = gram_matrix(&KernelSpec::Linear, &DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let wp = indicator_pair(10, &[0, 1, 2, 3, 4, 5, 6, 7]);
        let h = refine(&k, &wp, 8).unwrap();
        assert_eq!(h.indices(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn degenerate_center_errors() {
        let rows = vec![vec![1.0, 1.0]; 5];
        let k = gram_matrix(&KernelSpec::Linear, &DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let wp = indicator_pair(5, &[0, 1, 2]);
        assert!(matches!(refine(&k, &wp, 3), Err(KmrcdError::AllVarianceInCenter)));
    }

    #[test]
    fn weight_scaling_does_not_matter() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 1.3).sin() * 2.0, (i as f64 * 0.4).cos() + 0.1 * i as f64])
            .collect();
        let k = gram_matrix(&KernelSpec::rbf(1.5).unwrap(), &DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let w = DVector::from_fn(12, |i, _| 1.0 + (i % 3) as f64);
        let u = DVector::from_fn(12, |i, _| 0.5 + (i % 5) as f64);
        let a = WeightPair { w: w.clone(), u: u.clone(), origin: InitialEstimator::Sscm };
        let b = WeightPair { w: w * 7.0, u: u * 0.01, origin: InitialEstimator::Sscm };
        assert_eq!(refine(&k, &a, 8).unwrap(), refine(&k, &b, 8).unwrap());
    }

    #[test]
    fn factored_matches_gram() {
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|i| vec![(i as f64 * 0.9).sin() * 3.0, (i as f64 * 0.35).cos() + 0.2 * i as f64, (i % 4) as f64])
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let k = gram_matrix(&KernelSpec::Linear, &x).unwrap();
        let u = DVector::from_fn(15, |i, _| if i % 3 == 0 { 0.0 } else { 1.0 + (i % 5) as f64 });
        let w = DVector::from_fn(15, |i, _| 0.5 + (i % 2) as f64);
        let wp = WeightPair { w, u, origin: InitialEstimator::Sscm };
        let a = refine_state(&k, &wp).unwrap();
        let b = refine_state_factored(x.matrix(), &wp).unwrap();
        assert_eq!(a.rank(), 3);
        assert_eq!(b.rank(), 3);
        for j in 0..3 {
            assert!((a.eigenvalues[j] - b.eigenvalues[j]).abs() < 1e-10 * a.eigenvalues[0]);
            assert!((a.scales[j] - b.scales[j]).abs() < 1e-9 * a.scales[j]);
        }
        for i in 0..15 {
            assert!((a.distances[i] - b.distances[i]).abs() < 1e-8 * (1.0 + a.distances[i]));
        }
    }
}
