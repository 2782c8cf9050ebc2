//! Coordinate-space reference implementations used as oracles for the
//! kernel computations. Everything here works on explicit data rows and is
//! written independently of the library's Gram-matrix code paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Indices of the `h` smallest scores, ties to the smaller index, sorted.
pub fn smallest(scores: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    let mut out = order[..h].to_vec();
    out.sort_unstable();
    out
}

/// Eigenvalues in descending order.
pub fn eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Mean and sample covariance (divisor `rows.len() - 1`) of the selected rows.
pub fn mean_cov(x: &DMatrix<f64>, rows: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let p = x.ncols();
    let h = rows.len() as f64;
    let mut mean = DVector::zeros(p);
    for &i in rows {
        mean += x.row(i).transpose();
    }
    mean /= h;
    let mut cov = DMatrix::zeros(p, p);
    for &i in rows {
        let d = x.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    (mean, cov / (h - 1.0))
}

/// `(1 - rho) S_H + rho I_p`.
pub fn regularized_cov(x: &DMatrix<f64>, rows: &[usize], rho: f64) -> (DVector<f64>, DMatrix<f64>) {
    let (mean, cov) = mean_cov(x, rows);
    let p = x.ncols();
    (mean, cov * (1.0 - rho) + DMatrix::identity(p, p) * rho)
}

/// Squared Mahalanobis distances of all rows under the regularized covariance of `rows`.
pub fn coord_sq_distances(x: &DMatrix<f64>, rows: &[usize], rho: f64) -> Vec<f64> {
    let (mean, sigma) = regularized_cov(x, rows, rho);
    let inv = sigma.try_inverse().expect("regularized covariance is invertible");
    (0..x.nrows())
        .map(|i| {
            let d = x.row(i).transpose() - &mean;
            (d.transpose() * &inv * &d)[(0, 0)]
        })
        .collect()
}

pub fn log_det_regularized_cov(x: &DMatrix<f64>, rows: &[usize], rho: f64) -> f64 {
    let (_, sigma) = regularized_cov(x, rows, rho);
    eigenvalues_desc(sigma).iter().map(|l| l.ln()).sum()
}

/// The kernel objective expressed through the coordinate covariance:
/// `log det Sigma_reg + h log(h - 1) + (h - p) log rho`.
pub fn coord_objective(x: &DMatrix<f64>, rows: &[usize], rho: f64) -> f64 {
    let h = rows.len() as f64;
    let p = x.ncols() as f64;
    log_det_regularized_cov(x, rows, rho) + h * (h - 1.0).ln() + (h - p) * rho.ln()
}

/// Eigenvalues of the `h x h` centered Gram block of `rows`, obtained from the
/// `p x p` scatter and padded with zeros.
pub fn subset_kernel_eigenvalues(x: &DMatrix<f64>, rows: &[usize]) -> Vec<f64> {
    let h = rows.len();
    let (_, cov) = mean_cov(x, rows);
    let mut eigs: Vec<f64> = eigenvalues_desc(cov).iter().map(|l| l.max(0.0) * (h as f64 - 1.0)).collect();
    eigs.resize(h.max(eigs.len()), 0.0);
    eigs.truncate(h);
    eigs
}

pub fn kappa(eigs: &[f64], h: usize, rho: f64) -> f64 {
    let max = eigs.iter().copied().fold(0.0, f64::max);
    let min = eigs.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let base = (h as f64 - 1.0) * rho;
    (base + (1.0 - rho) * max) / (base + (1.0 - rho) * min)
}

/// Smallest rho with kappa <= kappa_max, found by bisection, floored at 1e-6.
pub fn bisect_rho(eigs: &[f64], h: usize, kappa_max: f64) -> f64 {
    if kappa(eigs, h, 1e-6) <= kappa_max {
        return 1e-6;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kappa(eigs, h, mid) <= kappa_max {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Weiszfeld coefficients of the spatial median of the rows of `z`
/// (ten reweighting steps from equal weights).
pub fn coord_spatial_median(z: &DMatrix<f64>) -> DVector<f64> {
    let n = z.nrows();
    let mut gamma = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..10 {
        let m = z.transpose() * &gamma;
        let mut next = DVector::from_fn(n, |i, _| {
            let e = (z.row(i).transpose() - &m).norm_squared();
            if e <= 1e-12 {
                1e6
            } else {
                1.0 / e.sqrt()
            }
        });
        next /= next.sum();
        gamma = next;
    }
    gamma
}

fn row_distance(x: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    (x.row(i).transpose() - c).norm()
}

pub fn coord_spatial_median_start(x: &DMatrix<f64>, h: usize) -> (DVector<f64>, DVector<f64>) {
    let gamma = coord_spatial_median(x);
    let m = x.transpose() * &gamma;
    let d: Vec<f64> = (0..x.nrows()).map(|i| row_distance(x, i, &m)).collect();
    indicator(x.nrows(), &smallest(&d, h))
}

pub fn coord_sdo_outlyingness(x: &DMatrix<f64>, pairs: &[(usize, usize)]) -> Vec<f64> {
    let n = x.nrows();
    let mut eta = vec![0.0; n];
    for &(i, j) in pairs {
        let v = x.row(i).transpose() - x.row(j).transpose();
        if v.norm_squared() <= 1e-12 {
            continue;
        }
        let v = &v / v.norm();
        let a: Vec<f64> = (0..n).map(|l| x.row(l).transpose().dot(&v)).collect();
        let med = median(&a);
        let dev: Vec<f64> = a.iter().map(|t| (t - med).abs()).collect();
        let mad = 1.4826 * median(&dev);
        if mad <= 0.0 {
            continue;
        }
        for l in 0..n {
            eta[l] = f64::max(eta[l], dev[l] / mad);
        }
    }
    eta
}

pub fn coord_sdo_start(x: &DMatrix<f64>, h: usize, pairs: &[(usize, usize)]) -> (DVector<f64>, DVector<f64>) {
    indicator(x.nrows(), &smallest(&coord_sdo_outlyingness(x, pairs), h))
}

pub fn coord_spatial_ranks(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut s = DVector::zeros(x.ncols());
            for j in 0..n {
                let d = x.row(i).transpose() - x.row(j).transpose();
                let a = d.norm();
                if j != i && a > 1e-12 {
                    s += d / a;
                }
            }
            s.norm() / n as f64
        })
        .collect()
}

pub fn coord_spatial_rank_start(x: &DMatrix<f64>, h: usize) -> (DVector<f64>, DVector<f64>) {
    indicator(x.nrows(), &smallest(&coord_spatial_ranks(x), h))
}

pub fn coord_sscm_start(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let gamma = coord_spatial_median(x);
    let m = x.transpose() * &gamma;
    let u = DVector::from_fn(x.nrows(), |i, _| 1.0 / row_distance(x, i, &m).max(1e-10));
    (gamma, u)
}

fn indicator(n: usize, rows: &[usize]) -> (DVector<f64>, DVector<f64>) {
    let mut w = DVector::zeros(n);
    for &i in rows {
        w[i] = 1.0;
    }
    (w.clone(), w)
}

/// Qn from its definition: all pairwise absolute differences, the
/// `C(floor(n/2) + 1, 2)`-th smallest, times the consistency constants.
pub fn qn_brute(values: &[f64]) -> f64 {
    let n = values.len();
    let mut diffs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            diffs.push((values[i] - values[j]).abs());
        }
    }
    diffs.sort_by(f64::total_cmp);
    let h = n / 2 + 1;
    let k = h * (h - 1) / 2;
    let c = match n {
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
    };
    2.2219 * c * diffs[k - 1]
}

/// Refined subset computed in coordinates: eigenvectors of the weighted
/// covariance, squared Qn scales of the projections, spatial median of the
/// whitened points and the squared refined distances.
pub fn coord_refine_distances(x: &DMatrix<f64>, w: &DVector<f64>, u: &DVector<f64>) -> Vec<f64> {
    let (n, p) = x.shape();
    let w = w / w.sum();
    let d = u / u.sum();
    let m = x.transpose() * &w;
    let mut c = DMatrix::zeros(p, p);
    for i in 0..n {
        let v = x.row(i).transpose() - &m;
        c += &v * v.transpose() * d[i];
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let keep: Vec<usize> = order.into_iter().filter(|&j| eig.eigenvalues[j] > 1e-9 * top).collect();
    let y = DMatrix::from_fn(p, keep.len(), |a, b| eig.eigenvectors[(a, keep[b])]);
    let b = x * &y;
    let scales: Vec<f64> = (0..keep.len())
        .map(|j| {
            let col: Vec<f64> = b.column(j).iter().copied().collect();
            qn_brute(&col).max(1e-10).powi(2)
        })
        .collect();
    let z = DMatrix::from_fn(n, keep.len(), |i, j| b[(i, j)] / scales[j].sqrt());
    let gamma = coord_spatial_median(&z);
    let center = x.transpose() * gamma;
    (0..n)
        .map(|i| {
            let t = y.transpose() * (x.row(i).transpose() - &center);
            (0..keep.len()).map(|j| t[j] * t[j] / scales[j]).sum()
        })
        .collect()
}

pub fn coord_refine(x: &DMatrix<f64>, w: &DVector<f64>, u: &DVector<f64>, h: usize) -> Vec<usize> {
    smallest(&coord_refine_distances(x, w, u), h)
}

pub struct CoordCSteps {
    pub subset: Vec<usize>,
    pub objectives: Vec<f64>,
}

pub fn coord_c_steps(x: &DMatrix<f64>, start: &[usize], rho: f64) -> CoordCSteps {
    let h = start.len();
    let mut subset = start.to_vec();
    let mut objectives = vec![coord_objective(x, &subset, rho)];
    for _ in 0..100 {
        let next = smallest(&coord_sq_distances(x, &subset, rho), h);
        if next == subset {
            break;
        }
        subset = next;
        objectives.push(coord_objective(x, &subset, rho));
    }
    CoordCSteps { subset, objectives }
}

pub struct CoordFit {
    pub subset: Vec<usize>,
    pub rho: f64,
    pub objective: f64,
    pub distances: Vec<f64>,
}

/// The whole estimator for the linear kernel, run in coordinates on already
/// standardized data.
pub fn coord_fit(z: &DMatrix<f64>, h: usize, pairs: &[(usize, usize)]) -> CoordFit {
    let starts = [
        coord_spatial_median_start(z, h),
        coord_sdo_start(z, h, pairs),
        coord_spatial_rank_start(z, h),
        coord_sscm_start(z),
    ];
    let refined: Vec<Vec<usize>> = starts.iter().map(|(w, u)| coord_refine(z, w, u, h)).collect();
    let rhos: Vec<f64> = refined
        .iter()
        .map(|s| bisect_rho(&subset_kernel_eigenvalues(z, s), h, 50.0))
        .collect();
    let max = rhos.iter().copied().fold(0.0, f64::max);
    let rho = if max <= 0.1 { max } else { median(&rhos).max(0.1) };

    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in &refined {
        let run = coord_c_steps(z, s, rho);
        let obj = *run.objectives.last().unwrap();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, run.subset));
        }
    }
    let (mut objective, subset) = best.unwrap();
    let eigs = subset_kernel_eigenvalues(z, &subset);
    let mut rho = rho;
    if kappa(&eigs, h, rho) > 50.0 {
        rho = bisect_rho(&eigs, h, 50.0);
        objective = coord_objective(z, &subset, rho);
    }
    let distances = coord_sq_distances(z, &subset, rho).iter().map(|d| d.max(0.0).sqrt()).collect();
    CoordFit {
        subset,
        rho,
        objective,
        distances,
    }
}
