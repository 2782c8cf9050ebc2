//! Kernelized initial estimators of location and scatter.
//!
//! Each estimator turns a raw Gram matrix into location weights `w` and
//! covariance weights `u`: the initial center is `sum_i w_i phi(x_i) / sum w`
//! and the initial scatter is the `u`-weighted covariance around it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{KmrcdError, Result};
use crate::kernel::GramMatrix;
use crate::linalg::{median, smallest_indices};

/// Expressions at or below this are treated as zero distances.
pub const DISTANCE_EPS: f64 = 1e-12;
/// Fixed number of Weiszfeld-type iterations for the spatial median.
pub const SPATIAL_MEDIAN_ITERATIONS: usize = 10;
/// Default number of random projection directions for SDO.
pub const SDO_DIRECTIONS: usize = 500;
/// Smallest distance used when inverting distances to the spatial median.
pub const SSCM_MIN_DISTANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialEstimator {
    SpatialMedian,
    Sdo,
    SpatialRank,
    Sscm,
}

impl InitialEstimator {
    pub const ALL: [InitialEstimator; 4] = [
        InitialEstimator::SpatialMedian,
        InitialEstimator::Sdo,
        InitialEstimator::SpatialRank,
        InitialEstimator::Sscm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitialEstimator::SpatialMedian => "spatial_median",
            InitialEstimator::Sdo => "sdo",
            InitialEstimator::SpatialRank => "spatial_rank",
            InitialEstimator::Sscm => "sscm",
        }
    }
}

/// Location and covariance weights of one initial estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    pub w: DVector<f64>,
    pub u: DVector<f64>,
    pub origin: InitialEstimator,
}

impl WeightPair {
    pub fn validate(&self) -> Result<()> {
        if self.w.len() != self.u.len() {
            return Err(KmrcdError::DimensionMismatch {
                expected: self.w.len(),
                found: self.u.len(),
            });
        }
        for (name, v) in [("w", &self.w), ("u", &self.u)] {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(KmrcdError::InvalidWeights(format!("{name} must be finite and nonnegative")));
            }
            if !(v.sum() > 0.0) {
                return Err(KmrcdError::InvalidWeights(format!("{name} must have a positive sum")));
            }
        }
        Ok(())
    }
}

/// Sorted set of `h` distinct observation indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HSubset {
    indices: Vec<usize>,
}

impl HSubset {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(KmrcdError::InvalidData("subset indices must be distinct".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(KmrcdError::InvalidData(format!("subset index {bad} out of range for n = {n}")));
        }
        if indices.is_empty() {
            return Err(KmrcdError::InvalidData("subset must not be empty".into()));
        }
        Ok(HSubset { indices })
    }

    pub fn h(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn indicator(&self, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        for &i in &self.indices {
            v[i] = 1.0;
        }
        v
    }
}

/// `h` smallest scores (ties to the smaller index) as a subset and as
/// indicator weights `w = u`.
pub fn subset_from_scores(scores: &[f64], h: usize, origin: InitialEstimator) -> Result<(HSubset, WeightPair)> {
    let n = scores.len();
    if h > n || h == 0 {
        return Err(KmrcdError::SubsetSize {
            h,
            n,
            reason: "need 1 <= h <= n".into(),
        });
    }
    let subset = HSubset::new(smallest_indices(scores, h), n)?;
    let w = subset.indicator(n);
    let pair = WeightPair {
        u: w.clone(),
        w,
        origin,
    };
    Ok((subset, pair))
}

/// Coefficients `gamma` of the spatial median `m = sum_i gamma_i phi(x_i)`
/// after a fixed number of reweighting iterations.
pub fn spatial_median_weights(k: &DMatrix<f64>, iterations: usize) -> DVector<f64> {
    let n = k.nrows();
    let mut gamma = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..iterations {
        let kg = k * &gamma;
        let gkg = gamma.dot(&kg);
        let mut next = DVector::from_fn(n, |i, _| {
            let e = k[(i, i)] - 2.0 * kg[i] + gkg;
            if e <= DISTANCE_EPS {
                DISTANCE_EPS.powf(-0.5)
            } else {
                e.powf(-0.5)
            }
        });
        let total = next.sum();
        next /= total;
        gamma = next;
    }
    gamma
}

/// `|phi(x_i) - sum_j gamma_j phi(x_j)|` for every observation.
pub fn distances_to_spatial_median(k: &DMatrix<f64>, gamma: &DVector<f64>) -> DVector<f64> {
    let kg = k * gamma;
    let gkg = gamma.dot(&kg);
    DVector::from_fn(k.nrows(), |i, _| (k[(i, i)] + gkg - 2.0 * kg[i]).max(0.0).sqrt())
}

/// Spatial-median initial estimator: the `h` points closest to the spatial median.
pub fn spatial_median_subset(k: &GramMatrix, h: usize) -> Result<WeightPair> {
    let gamma = spatial_median_weights(k.entries(), SPATIAL_MEDIAN_ITERATIONS);
    let d = distances_to_spatial_median(k.entries(), &gamma);
    Ok(subset_from_scores(d.as_slice(), h, InitialEstimator::SpatialMedian)?.1)
}

/// Draws `count` ordered index pairs `i != j` uniformly.
pub fn draw_direction_pairs<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Stahel-Donoho outlyingness of every observation over the directions
/// `phi(x_i) - phi(x_j)` for the given pairs.
pub fn sdo_outlyingness(k: &DMatrix<f64>, pairs: &[(usize, usize)]) -> Result<DVector<f64>> {
    let n = k.nrows();
    let mut eta = DVector::zeros(n);
    let mut used = 0usize;
    let mut a = vec![0.0; n];
    for &(i, j) in pairs {
        let s = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
        if s <= DISTANCE_EPS {
            continue;
        }
        let norm = s.sqrt();
        for (l, al) in a.iter_mut().enumerate() {
            *al = (k[(l, i)] - k[(l, j)]) / norm;
        }
        let med = median(&a);
        let dev: Vec<f64> = a.iter().map(|v| (v - med).abs()).collect();
        let spread = crate::robust::MAD_CONSISTENCY * median(&dev);
        if !(spread > 0.0) {
            continue;
        }
        used += 1;
        for l in 0..n {
            let r = dev[l] / spread;
            if r > eta[l] {
                eta[l] = r;
            }
        }
    }
    if used == 0 {
        return Err(KmrcdError::DegenerateSdo);
    }
    Ok(eta)
}

/// SDO initial estimator: the `h` least outlying points over random directions.
pub fn sdo_weights<R: Rng + ?Sized>(
    k: &GramMatrix,
    h: usize,
    n_directions: usize,
    rng: &mut R,
) -> Result<WeightPair> {
    let pairs = draw_direction_pairs(k.n(), n_directions, rng);
    sdo_weights_with_pairs(k, h, &pairs)
}

pub fn sdo_weights_with_pairs(k: &GramMatrix, h: usize, pairs: &[(usize, usize)]) -> Result<WeightPair> {
    let eta = sdo_outlyingness(k.entries(), pairs)?;
    Ok(subset_from_scores(eta.as_slice(), h, InitialEstimator::Sdo)?.1)
}

/// Spatial ranks `R_i = |sum_{j != i} (phi_i - phi_j) / |phi_i - phi_j|| / n`.
/// Pairs at (numerically) zero distance are left out of the sum.
pub fn spatial_ranks(k: &DMatrix<f64>) -> DVector<f64> {
    let n = k.nrows();
    // beta[i][j] = 1 / alpha(x_i, x_j), zero for excluded pairs
    let beta = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let a2 = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
        if a2 <= 0.0 {
            return 0.0;
        }
        let a = a2.sqrt();
        if a <= DISTANCE_EPS {
            0.0
        } else {
            1.0 / a
        }
    });
    let bk = &beta * k;
    DVector::from_fn(n, |i, _| {
        let mut s = 0.0;
        let mut t = 0.0;
        let mut quad = 0.0;
        for j in 0..n {
            let b = beta[(i, j)];
            s += b;
            t += b * k[(i, j)];
            quad += bk[(i, j)] * b;
        }
        let total = k[(i, i)] * s * s - 2.0 * s * t + quad;
        total.max(0.0).sqrt() / n as f64
    })
}

/// Spatial-rank initial estimator: the `h` points with the smallest spatial rank.
pub fn spatial_rank_weights(k: &GramMatrix, h: usize) -> Result<WeightPair> {
    let r = spatial_ranks(k.entries());
    Ok(subset_from_scores(r.as_slice(), h, InitialEstimator::SpatialRank)?.1)
}

/// Kernel spatial sign covariance: location weights are the spatial-median
/// coefficients, covariance weights the inverse distances to that median.
pub fn sscm_weights(k: &GramMatrix) -> WeightPair {
    let gamma = spatial_median_weights(k.entries(), SPATIAL_MEDIAN_ITERATIONS);
    let d = distances_to_spatial_median(k.entries(), &gamma);
    let u = d.map(|v| 1.0 / v.max(SSCM_MIN_DISTANCE));
    WeightPair {
        w: gamma,
        u,
        origin: InitialEstimator::Sscm,
    }
}
