//! The kernel MRCD estimator: regularization, kernel Mahalanobis distances,
//! concentration steps, outlier flagging and the full fitting pipeline.
//!
//! For an `h`-subset `H` with centered Gram block `K~^H`, the regularized
//! kernel matrix is `K~_reg = (1 - rho) K~^H + (h - 1) rho I`. Minimizing its
//! determinant over subsets is equivalent to minimizing the determinant of the
//! regularized feature-space covariance `(1 - rho) S^H + rho I`, so the whole
//! search runs on `h x h` kernel blocks.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KmrcdError, Result};
use crate::initial::{
    draw_direction_pairs, sdo_weights_with_pairs, spatial_median_subset, spatial_rank_weights, sscm_weights,
    HSubset, InitialEstimator, WeightPair, SDO_DIRECTIONS,
};
use crate::kernel::{gram_matrix, median_heuristic_bandwidth, DataMatrix, GramKind, GramMatrix, KernelSpec, SubsetCentering, SubsetKernelCenter};
use crate::linalg::{pivoted_cholesky, smallest_indices, sorted_eigenvalues};
use crate::refinement::{refine, refine_factored};
use crate::robust::{robust_standardize, univariate_mcd, Standardization};

/// Upper bound on the condition number of the regularized kernel matrix.
pub const KAPPA_MAX: f64 = 50.0;
/// Smallest regularization returned by [`select_rho`].
pub const RHO_FLOOR: f64 = 1e-6;
/// Safety bound on the number of concentration steps per start.
pub const MAX_C_STEPS: usize = 100;
/// 0.995 quantile of the standard normal distribution.
pub const Z_995: f64 = 2.575_829_303_548_900_4;
/// Floor on the spread of the log distances when computing the cutoff.
pub const LOG_SCALE_FLOOR: f64 = 1e-12;
/// Default seed for the random SDO directions.
pub const DEFAULT_SEED: u64 = 20_210_101;
/// Relative diagonal tolerance of the low-rank factorization of `K`.
pub const LOW_RANK_TOL: f64 = 1e-13;

/// Condition number of `(1 - rho) K~^H + (h - 1) rho I` from the eigenvalues of `K~^H`.
pub fn condition_number(eigenvalues: &[f64], h: usize, rho: f64) -> f64 {
    let (max, min) = extreme_eigenvalues(eigenvalues);
    let base = (h as f64 - 1.0) * rho;
    (base + (1.0 - rho) * max) / (base + (1.0 - rho) * min)
}

fn extreme_eigenvalues(eigenvalues: &[f64]) -> (f64, f64) {
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    (max, min)
}

/// Smallest `rho` in `(0, 1]` whose regularized kernel matrix has condition
/// number at most `kappa_max`. Eigenvalues are those of the centered subset
/// Gram block (all `h` of them, zeros included).
pub fn select_rho(eigenvalues: &[f64], h: usize, kappa_max: f64) -> f64 {
    let (max, min) = extreme_eigenvalues(eigenvalues);
    let excess = max - kappa_max * min;
    if excess <= 0.0 {
        return RHO_FLOOR;
    }
    // kappa(rho) = kappa_max is linear in rho.
    let closed = excess / (excess + (kappa_max - 1.0) * (h as f64 - 1.0));
    let kappa = |rho: f64| condition_number(eigenvalues, h, rho);
    let rho = if closed > 0.0 && closed <= 1.0 && kappa(closed) <= kappa_max * (1.0 + 1e-12) {
        closed
    } else {
        // kappa is nonincreasing in rho, so bisect on the feasible boundary.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if kappa(mid) <= kappa_max {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    rho.clamp(RHO_FLOOR, 1.0)
}

/// Combines the per-start regularization values: their maximum when it is at
/// most 0.1, otherwise `max(0.1, median)`.
pub fn combine_rhos(rhos: &[f64]) -> f64 {
    let max = rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.1 {
        return max;
    }
    let mut sorted = rhos.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    median.max(0.1)
}

/// `(1 - rho) K~^H + (h - 1) rho I` for a centered `h x h` Gram block.
pub fn regularized_gram(centered: &GramMatrix, rho: f64) -> GramMatrix {
    GramMatrix::from_parts(regularize(centered.entries(), rho), GramKind::Regularized)
}

fn regularize(centered: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let h = centered.nrows();
    let mut m = centered * (1.0 - rho);
    let diag = (h as f64 - 1.0) * rho;
    for i in 0..h {
        m[(i, i)] += diag;
    }
    m
}

/// Log-determinant of the regularized kernel matrix, computed from the
/// eigenvalues of the centered subset Gram block.
pub fn objective(centered: &GramMatrix, rho: f64) -> f64 {
    let h = centered.n();
    objective_from_eigenvalues(sorted_eigenvalues(centered.entries().clone()).as_slice(), h, rho)
}

pub fn objective_from_eigenvalues(eigenvalues: &[f64], h: usize, rho: f64) -> f64 {
    let base = (h as f64 - 1.0) * rho;
    eigenvalues.iter().map(|&l| ((1.0 - rho) * l.max(0.0) + base).ln()).sum()
}

/// Everything one concentration step needs about a subset: its objective and
/// the squared regularized kernel Mahalanobis distance of every observation.
#[derive(Debug, Clone)]
pub struct SubsetEvaluation {
    pub subset: HSubset,
    pub rho: f64,
    /// `log det K~_reg^H`.
    pub objective: f64,
    pub squared_distances: DVector<f64>,
}

impl SubsetEvaluation {
    pub fn distances(&self) -> DVector<f64> {
        self.squared_distances.map(f64::sqrt)
    }
}

/// Evaluates a subset on the full Gram matrix. `K~_reg^H` is factored once by
/// Cholesky and reused for all `n` observations.
pub fn evaluate_subset(k: &DMatrix<f64>, subset: &HSubset, rho: f64) -> Result<SubsetEvaluation> {
    let idx = subset.indices();
    let centering = SubsetCentering::new(k, idx);
    let reg = regularize(&centering.centered_block(k), rho);
    let chol = Cholesky::new(reg).ok_or(KmrcdError::NotPositiveDefinite("regularized kernel matrix"))?;
    let l = chol.l();
    let objective = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let cross = centering.cross_block(k);
    let solved = l
        .solve_lower_triangular(&cross)
        .ok_or(KmrcdError::NotPositiveDefinite("regularized kernel matrix"))?;
    let selfs = centering.self_terms(k);
    let n = k.nrows();
    let squared_distances = DVector::from_fn(n, |j, _| {
        let q = solved.column(j).norm_squared();
        ((selfs[j] - (1.0 - rho) * q) / rho).max(0.0)
    });
    Ok(SubsetEvaluation {
        subset: subset.clone(),
        rho,
        objective,
        squared_distances,
    })
}

/// Regularized kernel Mahalanobis distance of observation `i` relative to `H`.
pub fn kernel_mahalanobis(k: &GramMatrix, subset: &HSubset, rho: f64, i: usize) -> Result<f64> {
    if i >= k.n() {
        return Err(KmrcdError::InvalidData(format!("observation {i} out of range")));
    }
    Ok(evaluate_subset(k.entries(), subset, rho)?.squared_distances[i].sqrt())
}

/// Distances of all observations relative to `H`.
pub fn kernel_mahalanobis_all(k: &GramMatrix, subset: &HSubset, rho: f64) -> Result<DVector<f64>> {
    Ok(evaluate_subset(k.entries(), subset, rho)?.distances())
}

/// One concentration step: the `h` observations closest to the fit of `H`.
pub fn c_step(k: &GramMatrix, subset: &HSubset, rho: f64) -> Result<HSubset> {
    let eval = evaluate_subset(k.entries(), subset, rho)?;
    HSubset::new(smallest_indices(eval.squared_distances.as_slice(), subset.h()), k.n())
}

/// The path of one run of concentration steps.
#[derive(Debug, Clone)]
pub struct CStepTrace {
    /// Objective of every visited subset, starting subset first.
    pub objectives: Vec<f64>,
    /// Number of subset changes.
    pub steps: usize,
    /// Whether a fixed point was reached within the step limit.
    pub converged: bool,
    pub last: SubsetEvaluation,
}

/// Iterates concentration steps from `start` until the subset repeats or
/// `max_steps` changes have been made.
pub fn c_step_sequence(k: &GramMatrix, start: &HSubset, rho: f64, max_steps: usize) -> Result<CStepTrace> {
    run_c_steps(|s| evaluate_subset(k.entries(), s, rho), start, k.n(), max_steps)
}

fn run_c_steps<F>(evaluate: F, start: &HSubset, n: usize, max_steps: usize) -> Result<CStepTrace>
where
    F: Fn(&HSubset) -> Result<SubsetEvaluation>,
{
    let h = start.h();
    let mut current = evaluate(start)?;
    let mut objectives = vec![current.objective];
    let mut steps = 0;
    let mut converged = false;
    loop {
        let next = HSubset::new(smallest_indices(current.squared_distances.as_slice(), h), n)?;
        if next == current.subset {
            converged = true;
            break;
        }
        if steps == max_steps {
            break;
        }
        current = evaluate(&next)?;
        objectives.push(current.objective);
        steps += 1;
    }
    Ok(CStepTrace {
        objectives,
        steps,
        converged,
        last: current,
    })
}

/// Where the subset computations run. A Gram matrix of low numerical rank is
/// replaced by explicit feature coordinates `F` with `K = F F'`, which turns
/// every `h x h` problem into an `r x r` one.
enum Workspace<'a> {
    Dense(&'a DMatrix<f64>),
    Factored(DMatrix<f64>),
}

impl<'a> Workspace<'a> {
    fn new(k: &'a DMatrix<f64>) -> Self {
        match pivoted_cholesky(k, LOW_RANK_TOL, k.nrows() / 4) {
            Some(f) => Workspace::Factored(f),
            None => Workspace::Dense(k),
        }
    }

    fn refine(&self, gram: &GramMatrix, wp: &WeightPair, h: usize) -> Result<HSubset> {
        match self {
            Workspace::Dense(_) => refine(gram, wp, h),
            Workspace::Factored(f) => refine_factored(f, wp, h),
        }
    }

    /// All `h` eigenvalues of the centered subset Gram block, descending.
    fn subset_eigenvalues(&self, subset: &HSubset) -> DVector<f64> {
        match self {
            Workspace::Dense(k) => sorted_eigenvalues(SubsetCentering::new(k, subset.indices()).centered_block(k)),
            Workspace::Factored(f) => {
                let (_, scatter) = factored_scatter(f, subset);
                let mut v = sorted_eigenvalues(scatter).as_slice().to_vec();
                v.resize(subset.h().max(v.len()), 0.0);
                DVector::from_vec(v)
            }
        }
    }

    fn evaluate(&self, subset: &HSubset, rho: f64) -> Result<SubsetEvaluation> {
        match self {
            Workspace::Dense(k) => evaluate_subset(k, subset, rho),
            Workspace::Factored(f) => Ok(evaluate_factored(f, subset, rho)),
        }
    }
}

/// Subset mean of the feature rows and the scatter `F~_H' F~_H`.
fn factored_scatter(f: &DMatrix<f64>, subset: &HSubset) -> (DVector<f64>, DMatrix<f64>) {
    let idx = subset.indices();
    let r = f.ncols();
    let mean = DVector::from_fn(r, |j, _| idx.iter().map(|&i| f[(i, j)]).sum::<f64>() / idx.len() as f64);
    let centered = DMatrix::from_fn(idx.len(), r, |a, j| f[(idx[a], j)] - mean[j]);
    (mean, centered.transpose() * centered)
}

/// [`evaluate_subset`] in explicit feature coordinates: with `F~_H' F~_H = U S U'`
/// the objective is `sum_j log((1 - rho) s_j + (h - 1) rho) + (h - r) log((h - 1) rho)`
/// and `MD^2 = sum_j (u_j'(f - m_H))^2 (h - 1) / ((1 - rho) s_j + (h - 1) rho)`.
fn evaluate_factored(f: &DMatrix<f64>, subset: &HSubset, rho: f64) -> SubsetEvaluation {
    let h = subset.h();
    let (n, r) = f.shape();
    let (mean, scatter) = factored_scatter(f, subset);
    let eig = nalgebra::SymmetricEigen::new(scatter);
    let base = (h as f64 - 1.0) * rho;
    let denom: Vec<f64> = eig.eigenvalues.iter().map(|&s| (1.0 - rho) * s.max(0.0) + base).collect();
    let objective = denom.iter().map(|d| d.ln()).sum::<f64>() + (h as f64 - r as f64) * base.ln();
    let proj = (f - DMatrix::from_fn(n, r, |_, j| mean[j])) * &eig.eigenvectors;
    let squared_distances = DVector::from_fn(n, |i, _| {
        (0..r)
            .map(|j| proj[(i, j)] * proj[(i, j)] * (h as f64 - 1.0) / denom[j])
            .sum::<f64>()
    });
    SubsetEvaluation {
        subset: subset.clone(),
        rho,
        objective,
        squared_distances,
    }
}

/// Outlier cutoff on the robust distances and the resulting flags.
///
/// The distances are log-transformed as `log(0.1 + MD)`; the univariate MCD of
/// those values with coverage `h` gives a location and spread, and the cutoff
/// maps `location + z(0.995) * spread` back to the distance scale.
pub fn flag_outliers(distances: &[f64], h: usize) -> Result<(f64, Vec<bool>)> {
    if distances.iter().any(|d| !(*d >= 0.0)) {
        return Err(KmrcdError::InvalidData("distances must be nonnegative".into()));
    }
    let logs: Vec<f64> = distances.iter().map(|d| (0.1 + d).ln()).collect();
    let est = univariate_mcd(&logs, h)?;
    let spread = est.scale.max(LOG_SCALE_FLOOR);
    let cutoff = (est.location + Z_995 * spread).exp() - 0.1;
    let flags = distances.iter().map(|&d| d > cutoff).collect();
    Ok((cutoff, flags))
}

/// Center and regularized covariance in coordinate space for the linear
/// kernel: the subset mean and `((1 - rho)/(h - 1)) X~'X~ + rho I_p`.
pub fn linear_covariance(data: &DataMatrix, subset: &HSubset, rho: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if let Some(&bad) = subset.indices().iter().find(|&&i| i >= data.n()) {
        return Err(KmrcdError::DimensionMismatch {
            expected: data.n(),
            found: bad + 1,
        });
    }
    let rows = data.select_rows(subset.indices())?;
    let x = rows.matrix();
    let h = x.nrows();
    let p = x.ncols();
    let center = DVector::from_fn(p, |j, _| x.column(j).sum() / h as f64);
    let centered = DMatrix::from_fn(h, p, |i, j| x[(i, j)] - center[j]);
    let mut cov = centered.transpose() * &centered * ((1.0 - rho) / (h as f64 - 1.0));
    for j in 0..p {
        cov[(j, j)] += rho;
    }
    Ok((center, cov))
}

/// How the subset size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetSize {
    /// `floor(0.5 n)` for the linear kernel with at most 10 variables,
    /// `floor(0.75 n)` otherwise.
    Default,
    Count(usize),
    Fraction(f64),
}

/// Kernel selection for coordinate input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Fixed(KernelSpec),
    /// RBF kernel with the median-heuristic bandwidth of the standardized data.
    RbfMedianHeuristic,
}

impl From<KernelSpec> for KernelChoice {
    fn from(spec: KernelSpec) -> Self {
        KernelChoice::Fixed(spec)
    }
}

/// Data handed to [`fit`].
#[derive(Debug, Clone, Copy)]
pub enum FitInput<'a> {
    /// Raw coordinates; they are robustly standardized before the kernel is applied.
    Coordinates { data: &'a DataMatrix, kernel: KernelChoice },
    /// A precomputed raw Gram matrix.
    Gram(&'a GramMatrix),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub h: SubsetSize,
    pub seed: u64,
    pub sdo_directions: usize,
    /// Explicit SDO direction pairs; when set, `seed` and `sdo_directions` are ignored.
    pub sdo_pairs: Option<Vec<(usize, usize)>>,
    pub kappa_max: f64,
    pub max_c_steps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            h: SubsetSize::Default,
            seed: DEFAULT_SEED,
            sdo_directions: SDO_DIRECTIONS,
            sdo_pairs: None,
            kappa_max: KAPPA_MAX,
            max_c_steps: MAX_C_STEPS,
        }
    }
}

/// Resolves the subset size for `n` observations; valid sizes satisfy `n/2 <= h < n`.
pub fn resolve_h(size: SubsetSize, n: usize, kernel: &KernelSpec, p: Option<usize>) -> Result<usize> {
    let half = n.div_ceil(2);
    let from_fraction = |f: f64| -> Result<usize> {
        if !(0.5..1.0).contains(&f) {
            return Err(KmrcdError::SubsetSize {
                h: (f * n as f64).floor().max(0.0) as usize,
                n,
                reason: format!("h fraction {f} must lie in [0.5, 1)"),
            });
        }
        Ok(((f * n as f64).floor() as usize).max(half))
    };
    let h = match size {
        SubsetSize::Count(h) => h,
        SubsetSize::Fraction(f) => from_fraction(f)?,
        SubsetSize::Default => {
            if kernel.is_linear() && p.is_some_and(|p| p <= 10) {
                from_fraction(0.5)?
            } else {
                from_fraction(0.75)?
            }
        }
    };
    if 2 * h < n || h >= n {
        return Err(KmrcdError::SubsetSize {
            h,
            n,
            reason: "need n/2 <= h < n".into(),
        });
    }
    Ok(h)
}

/// Summary of one start of the algorithm.
#[derive(Debug, Clone)]
pub struct StartSummary {
    pub estimator: InitialEstimator,
    pub refined: HSubset,
    /// Regularization selected for the refined subset.
    pub rho: f64,
    pub trace: CStepTrace,
}

/// Center and regularized covariance in coordinate space (linear kernel only).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimates {
    pub center: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct KmrcdFit {
    pub subset: HSubset,
    pub h: usize,
    pub rho: f64,
    /// The regularization combined from the four starts, before any final
    /// adjustment for the condition-number bound.
    pub combined_rho: f64,
    pub kernel: KernelSpec,
    pub distances: DVector<f64>,
    pub objective: f64,
    pub cutoff: f64,
    pub flags: Vec<bool>,
    /// Eigenvalues of the centered Gram block of the final subset, descending.
    pub subset_eigenvalues: DVector<f64>,
    pub starts: Vec<StartSummary>,
    /// Index into `starts` of the winning start.
    pub best_start: usize,
    pub standardization: Option<Standardization>,
    /// Linear-kernel estimates in standardized coordinates.
    pub linear: Option<LinearEstimates>,
    new_points: Option<NewPointModel>,
}

/// What [`KmrcdFit::distance_to`] needs: the subset kernel centering and the
/// Cholesky factor of the final regularized kernel matrix.
#[derive(Debug, Clone)]
struct NewPointModel {
    center: SubsetKernelCenter,
    factor: DMatrix<f64>,
}

impl KmrcdFit {
    pub fn n(&self) -> usize {
        self.distances.len()
    }

    /// Condition number of the final regularized kernel matrix.
    pub fn condition_number(&self) -> f64 {
        condition_number(self.subset_eigenvalues.as_slice(), self.h, self.rho)
    }

    pub fn outlier_indices(&self) -> Vec<usize> {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }

    /// Linear-kernel estimates mapped back to the original coordinates.
    pub fn linear_estimates_original(&self) -> Option<LinearEstimates> {
        let lin = self.linear.as_ref()?;
        let Some(std) = &self.standardization else {
            return Some(lin.clone());
        };
        let loc = std.locations();
        let scale = std.scales();
        let p = lin.center.len();
        Some(LinearEstimates {
            center: DVector::from_fn(p, |j, _| loc[j] + scale[j] * lin.center[j]),
            covariance: DMatrix::from_fn(p, p, |i, j| scale[i] * lin.covariance[(i, j)] * scale[j]),
        })
    }

    /// Robust distance of a new point given in original coordinates. Only
    /// available when the fit was computed from coordinates.
    pub fn distance_to(&self, x: &[f64]) -> Result<f64> {
        let model = self.new_points.as_ref().ok_or(KmrcdError::NoKernelFunction)?;
        let z = match &self.standardization {
            Some(std) => std.apply(x)?,
            None => x.to_vec(),
        };
        let cross = model.center.cross_kernel(&z)?;
        let self_term = model.center.self_kernel(&z)?;
        let q = model
            .factor
            .solve_lower_triangular(&cross)
            .ok_or(KmrcdError::NotPositiveDefinite("regularized kernel matrix"))?
            .norm_squared();
        Ok(((self_term - (1.0 - self.rho) * q) / self.rho).max(0.0).sqrt())
    }
}

/// Fits the kernel MRCD estimator.
pub fn fit(input: FitInput<'_>, options: &FitOptions) -> Result<KmrcdFit> {
    let (gram, kernel, standardization, z) = match input {
        FitInput::Coordinates { data, kernel } => {
            let (z, std) = robust_standardize(data)?;
            let spec = match kernel {
                KernelChoice::Fixed(KernelSpec::Precomputed) => return Err(KmrcdError::NoKernelFunction),
                KernelChoice::Fixed(spec) => spec,
                KernelChoice::RbfMedianHeuristic => KernelSpec::rbf(median_heuristic_bandwidth(&z)?)?,
            };
            let gram = gram_matrix(&spec, &z)?;
            (gram, spec, Some(std), Some(z))
        }
        FitInput::Gram(g) => {
            if g.kind() != GramKind::Raw {
                return Err(KmrcdError::InvalidData("fit expects a raw Gram matrix".into()));
            }
            (g.clone(), KernelSpec::Precomputed, None, None)
        }
    };
    let n = gram.n();
    let h = resolve_h(options.h, n, &kernel, z.as_ref().map(DataMatrix::p))?;
    let km = gram.entries();

    let pairs = match &options.sdo_pairs {
        Some(p) => p.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            draw_direction_pairs(n, options.sdo_directions, &mut rng)
        }
    };
    let initial: Vec<WeightPair> = vec![
        spatial_median_subset(&gram, h)?,
        sdo_weights_with_pairs(&gram, h, &pairs)?,
        spatial_rank_weights(&gram, h)?,
        sscm_weights(&gram),
    ];

    let ws = Workspace::new(km);
    let mut refined = Vec::with_capacity(4);
    let mut rhos = Vec::with_capacity(4);
    for wp in &initial {
        let subset = ws.refine(&gram, wp, h)?;
        let eigs = ws.subset_eigenvalues(&subset);
        rhos.push(select_rho(eigs.as_slice(), h, options.kappa_max));
        refined.push(subset);
    }
    let combined_rho = combine_rhos(&rhos);

    let mut starts = Vec::with_capacity(4);
    for ((wp, subset), rho) in initial.iter().zip(refined).zip(rhos) {
        let trace = run_c_steps(|s| ws.evaluate(s, combined_rho), &subset, n, options.max_c_steps)?;
        starts.push(StartSummary {
            estimator: wp.origin,
            refined: subset,
            rho,
            trace,
        });
    }
    let best_start = starts
        .iter()
        .enumerate()
        .min_by(|(a, x), (b, y)| x.trace.last.objective.total_cmp(&y.trace.last.objective).then(a.cmp(b)))
        .map(|(i, _)| i)
        .expect("four starts");

    let best = &starts[best_start].trace.last;
    let subset = best.subset.clone();
    let subset_eigenvalues = ws.subset_eigenvalues(&subset);
    let mut rho = combined_rho;
    let mut eval = best.clone();
    if condition_number(subset_eigenvalues.as_slice(), h, rho) > options.kappa_max {
        rho = select_rho(subset_eigenvalues.as_slice(), h, options.kappa_max);
        eval = ws.evaluate(&subset, rho)?;
    }
    let distances = eval.distances();
    let (cutoff, flags) = flag_outliers(distances.as_slice(), h)?;

    let linear = match (&z, kernel) {
        (Some(z), KernelSpec::Linear) => {
            let (center, covariance) = linear_covariance(z, &subset, rho)?;
            Some(LinearEstimates { center, covariance })
        }
        _ => None,
    };
    let new_points = match &z {
        Some(z) => {
            let center = SubsetKernelCenter::new(&kernel, &z.select_rows(subset.indices())?)?;
            let reg = regularize(&SubsetCentering::new(km, subset.indices()).centered_block(km), rho);
            let factor = Cholesky::new(reg)
                .ok_or(KmrcdError::NotPositiveDefinite("regularized kernel matrix"))?
                .unpack();
            Some(NewPointModel { center, factor })
        }
        None => None,
    };

    Ok(KmrcdFit {
        subset,
        h,
        rho,
        combined_rho,
        kernel,
        distances,
        objective: eval.objective,
        cutoff,
        flags,
        subset_eigenvalues,
        starts,
        best_start,
        standardization,
        linear,
        new_points,
    })
}
