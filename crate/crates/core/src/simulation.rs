//! Data generators and performance measures for simulation studies.
//!
//! Elliptical settings draw from `N(0, Sigma)` with a random correlation
//! matrix of fixed condition number and replace a fraction of the rows by
//! point, shift or cluster outliers. Non-elliptical settings are bivariate:
//! t and Clayton copulas with uniform background outliers, and a circle with
//! Gaussian outliers at its center. Frank and Gumbel copulas are not provided.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{KmrcdError, Result};
use crate::kernel::DataMatrix;
use crate::estimator::{fit, FitInput, FitOptions, KernelChoice, KmrcdFit, SubsetSize};
use crate::linalg::{smallest_indices, SortedEigen};

/// Condition number of generated correlation matrices.
pub const ALYZ_CONDITION_NUMBER: f64 = 100.0;
const ALYZ_MAX_ITERATIONS: usize = 100;
/// Scale of the contamination center.
pub const CONTAMINATION_DISTANCE: f64 = 200.0;
/// Standard deviation of cluster outliers.
pub const CLUSTER_SD: f64 = 0.05;
/// Copula outliers closer than this to a clean point are redrawn.
pub const THINNING_RADIUS: f64 = 0.05;
pub const MAX_REJECTION_DRAWS: usize = 1_000_000;
/// Variance of the outliers in the circle setting.
pub const CIRCLE_OUTLIER_VARIANCE: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contamination {
    None,
    Point,
    Shift,
    Cluster,
}

impl Contamination {
    pub const NAMES: [&'static str; 4] = ["none", "point", "shift", "cluster"];

    pub fn name(&self) -> &'static str {
        match self {
            Contamination::None => "none",
            Contamination::Point => "point",
            Contamination::Shift => "shift",
            Contamination::Cluster => "cluster",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Contamination::None),
            "point" => Ok(Contamination::Point),
            "shift" => Ok(Contamination::Shift),
            "cluster" => Ok(Contamination::Cluster),
            _ => Err(KmrcdError::InvalidScenario(format!(
                "unknown contamination '{s}', expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    AlyzGaussian,
    TCopula { pearson: f64, nu: f64 },
    ClaytonCopula { tau: f64 },
    Circle,
}

impl Generator {
    pub const NAMES: [&'static str; 4] = ["alyz", "tcopula", "clayton", "circle"];

    pub fn name(&self) -> &'static str {
        match self {
            Generator::AlyzGaussian => "alyz",
            Generator::TCopula { .. } => "tcopula",
            Generator::ClaytonCopula { .. } => "clayton",
            Generator::Circle => "circle",
        }
    }

    /// Parses a generator name with default parameters.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alyz" => Ok(Generator::AlyzGaussian),
            "tcopula" => Ok(Generator::TCopula { pearson: 0.1, nu: 1.0 }),
            "clayton" => Ok(Generator::ClaytonCopula { tau: 0.6 }),
            "circle" => Ok(Generator::Circle),
            _ => Err(KmrcdError::InvalidScenario(format!(
                "unknown generator '{s}', expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn is_bivariate(&self) -> bool {
        !matches!(self, Generator::AlyzGaussian)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub epsilon: f64,
    pub contamination: Contamination,
    pub generator: Generator,
    pub seed: u64,
}

impl SimScenario {
    pub fn n_outliers(&self) -> usize {
        (self.epsilon * self.n as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(KmrcdError::InvalidScenario(msg));
        if !(0.0..0.5).contains(&self.epsilon) {
            return bad(format!("epsilon {} must lie in [0, 0.5)", self.epsilon));
        }
        if self.n < 4 {
            return bad(format!("n = {} is too small", self.n));
        }
        if 2 * self.n_outliers() >= self.n {
            return bad("contamination must be fewer than n/2 rows".into());
        }
        match self.generator {
            Generator::AlyzGaussian => {
                if self.p < 2 {
                    return bad("alyz needs p >= 2".into());
                }
                if self.epsilon > 0.0 && self.contamination == Contamination::None {
                    return bad("epsilon > 0 needs a contamination type".into());
                }
            }
            g => {
                if self.p != 2 {
                    return bad(format!("{} is bivariate, got p = {}", g.name(), self.p));
                }
                if self.contamination != Contamination::None {
                    return bad(format!("{} has its own outlier model; contamination must be none", g.name()));
                }
                match g {
                    Generator::TCopula { pearson, nu } if !(pearson.abs() < 1.0 && nu >= 1.0) => {
                        return bad("t copula needs |pearson| < 1 and nu >= 1".into());
                    }
                    Generator::ClaytonCopula { tau } if !(tau > 0.0 && tau < 1.0) => {
                        return bad("clayton needs tau in (0, 1)".into());
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Random stream of replication `rep`; streams are independent across replications.
    pub fn rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }
}

/// One simulated data set with the indices of its outliers.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub data: DataMatrix,
    pub outliers: Vec<usize>,
    /// The true scatter for elliptical settings.
    pub sigma: Option<DMatrix<f64>>,
}

fn condition(values: &DVector<f64>) -> f64 {
    values.max() / values.min()
}

/// Random correlation matrix with condition number `cn`.
///
/// Eigenvectors come from orthonormalizing a Gaussian matrix and eigenvalues
/// are uniform on `[1, cn]` with both endpoints pinned. Rescaling to unit
/// diagonal perturbs the spectrum, so the spectrum is re-pinned by an affine,
/// trace-preserving map and the two steps alternate until both hold.
pub fn generate_alyz_sigma<R: Rng + ?Sized>(p: usize, cn: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if p < 2 {
        return Err(KmrcdError::InvalidScenario(format!("need p >= 2, got {p}")));
    }
    if !(cn > 1.0 && cn.is_finite()) {
        return Err(KmrcdError::InvalidScenario(format!("condition number {cn} must exceed 1")));
    }
    let gauss = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = gauss.qr().q();
    let mut eig = DVector::from_fn(p, |_, _| rng.random_range(1.0..cn));
    eig[0] = 1.0;
    eig[p - 1] = cn;
    let mut sigma = &q * DMatrix::from_diagonal(&eig) * q.transpose();

    for _ in 0..ALYZ_MAX_ITERATIONS {
        let d = sigma.diagonal().map(|v| 1.0 / v.sqrt());
        sigma = DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else {
                sigma[(i, j)] * d[i] * d[j]
            }
        });
        sigma = (&sigma + sigma.transpose()) * 0.5;
        let e = SortedEigen::new(sigma.clone());
        let k = condition(&e.values);
        if (k - cn).abs() / cn < 1e-3 {
            return Ok(sigma);
        }
        let (lo, hi) = (e.smallest(), e.largest());
        let spread: f64 = e.values.iter().map(|v| (v - lo) / (hi - lo)).sum();
        let t = p as f64 / (p as f64 + (cn - 1.0) * spread);
        let s = t * (cn - 1.0) / (hi - lo);
        let repinned = e.values.map(|v| t + s * (v - lo));
        sigma = &e.vectors * DMatrix::from_diagonal(&repinned) * e.vectors.transpose();
    }
    Err(KmrcdError::NoConvergence(ALYZ_MAX_ITERATIONS))
}

/// `k v` where `v` is the smallest-eigenvalue eigenvector of `sigma`
/// rescaled so that `v' sigma^-1 v = p`.
pub fn contamination_center(sigma: &DMatrix<f64>) -> DVector<f64> {
    let p = sigma.nrows();
    let e = SortedEigen::new(sigma.clone());
    let v = e.vectors.column(p - 1).into_owned();
    let norm = (p as f64 * e.smallest()).sqrt();
    v * (CONTAMINATION_DISTANCE * norm)
}

fn sorted_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    let mut idx = sample(rng, n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Gaussian sample with `floor(epsilon n)` uniformly chosen rows replaced by outliers.
pub fn generate_contaminated<R: Rng + ?Sized>(
    n: usize,
    sigma: &DMatrix<f64>,
    epsilon: f64,
    kind: Contamination,
    rng: &mut R,
) -> Result<(DataMatrix, Vec<usize>)> {
    let p = sigma.nrows();
    let l = Cholesky::new(sigma.clone())
        .ok_or(KmrcdError::NotPositiveDefinite("sigma"))?
        .l();
    let draw = |rng: &mut R| -> DVector<f64> { &l * DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)) };
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        x.set_row(i, &draw(rng).transpose());
    }
    let m = (epsilon * n as f64).floor() as usize;
    if m == 0 || kind == Contamination::None {
        return Ok((DataMatrix::new(x)?, Vec::new()));
    }
    let mu = contamination_center(sigma);
    let outliers = sorted_sample(rng, n, m);
    for &i in &outliers {
        let row = match kind {
            Contamination::Point => mu.clone(),
            Contamination::Shift => &mu + draw(rng),
            Contamination::Cluster => DVector::from_fn(p, |j, _| mu[j] + CLUSTER_SD * rng.sample::<f64, _>(StandardNormal)),
            Contamination::None => unreachable!(),
        };
        x.set_row(i, &row.transpose());
    }
    Ok((DataMatrix::new(x)?, outliers))
}

/// Places `clean` and `outliers` rows at random positions; returns the data
/// and the sorted outlier indices.
fn interleave<R: Rng + ?Sized>(clean: Vec<[f64; 2]>, outliers: Vec<[f64; 2]>, rng: &mut R) -> Result<(DataMatrix, Vec<usize>)> {
    let n = clean.len() + outliers.len();
    let idx = sorted_sample(rng, n, outliers.len());
    let mut rows = Vec::with_capacity(n);
    let (mut c, mut o) = (clean.into_iter(), outliers.into_iter());
    let mut next_out = idx.iter().peekable();
    for i in 0..n {
        let r = if next_out.peek() == Some(&&i) {
            next_out.next();
            o.next()
        } else {
            c.next()
        };
        let r = r.expect("row counts add up");
        rows.push(vec![r[0], r[1]]);
    }
    Ok((DataMatrix::from_rows(&rows)?, idx))
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Uniform points on the unit square that are at least the thinning radius
/// away from every clean point.
fn thinned_uniform_outliers<R: Rng + ?Sized>(clean: &[[f64; 2]], m: usize, rng: &mut R) -> Result<Vec<[f64; 2]>> {
    let r2 = THINNING_RADIUS * THINNING_RADIUS;
    let mut out = Vec::with_capacity(m);
    let mut draws = 0;
    while out.len() < m {
        if draws == MAX_REJECTION_DRAWS {
            return Err(KmrcdError::RejectionLimit(MAX_REJECTION_DRAWS));
        }
        draws += 1;
        let q = [rng.random::<f64>(), rng.random::<f64>()];
        if clean.iter().all(|c| (c[0] - q[0]).powi(2) + (c[1] - q[1]).powi(2) >= r2) {
            out.push(q);
        }
    }
    Ok(out)
}

/// Bivariate t copula sample with uniform background outliers.
pub fn generate_t_copula<R: Rng + ?Sized>(n: usize, pearson: f64, nu: f64, epsilon: f64, rng: &mut R) -> Result<(DataMatrix, Vec<usize>)> {
    if !(pearson.abs() < 1.0) || !(nu >= 1.0) {
        return Err(KmrcdError::InvalidScenario("t copula needs |pearson| < 1 and nu >= 1".into()));
    }
    let t = StudentsT::new(0.0, 1.0, nu).map_err(|e| KmrcdError::InvalidScenario(e.to_string()))?;
    let chi = ChiSquared::new(nu).map_err(|e| KmrcdError::InvalidScenario(e.to_string()))?;
    let m = (epsilon * n as f64).floor() as usize;
    let comp = (1.0 - pearson * pearson).sqrt();
    let mut clean = Vec::with_capacity(n - m);
    while clean.len() < n - m {
        let z1: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let z2 = pearson * z1 + comp * e;
        let w = (chi.sample(rng) / nu).sqrt();
        let u = [t.cdf(z1 / w), t.cdf(z2 / w)];
        // Extreme tails can round to the boundary.
        if u.iter().all(|&v| v > 0.0 && v < 1.0) {
            clean.push(u);
        }
    }
    let outliers = thinned_uniform_outliers(&clean, m, rng)?;
    interleave(clean, outliers, rng)
}

/// Clayton parameter with Kendall correlation `tau`.
pub fn clayton_theta(tau: f64) -> f64 {
    2.0 * tau / (1.0 - tau)
}

/// Clayton copula sample (conditional inversion) with uniform background outliers.
pub fn generate_clayton_copula<R: Rng + ?Sized>(n: usize, tau: f64, epsilon: f64, rng: &mut R) -> Result<(DataMatrix, Vec<usize>)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(KmrcdError::InvalidScenario(format!("tau {tau} must lie in (0, 1)")));
    }
    let theta = clayton_theta(tau);
    let m = (epsilon * n as f64).floor() as usize;
    let mut clean = Vec::with_capacity(n - m);
    while clean.len() < n - m {
        let u = open_unit(rng);
        let s = open_unit(rng);
        let v = (u.powf(-theta) * (s.powf(-theta / (1.0 + theta)) - 1.0) + 1.0).powf(-1.0 / theta);
        if v > 0.0 && v < 1.0 {
            clean.push([u, v]);
        }
    }
    let outliers = thinned_uniform_outliers(&clean, m, rng)?;
    interleave(clean, outliers, rng)
}

/// Points on the unit circle with Gaussian outliers around the origin.
pub fn generate_circle<R: Rng + ?Sized>(n: usize, epsilon: f64, rng: &mut R) -> Result<(DataMatrix, Vec<usize>)> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(KmrcdError::InvalidScenario(format!("epsilon {epsilon} must lie in [0, 0.5)")));
    }
    let m = (epsilon * n as f64).floor() as usize;
    let clean: Vec<[f64; 2]> = (0..n - m)
        .map(|_| {
            let a = rng.random_range(0.0..2.0 * PI);
            [a.cos(), a.sin()]
        })
        .collect();
    let sd = CIRCLE_OUTLIER_VARIANCE.sqrt();
    let outliers: Vec<[f64; 2]> = (0..m)
        .map(|_| [sd * rng.sample::<f64, _>(StandardNormal), sd * rng.sample::<f64, _>(StandardNormal)])
        .collect();
    interleave(clean, outliers, rng)
}

/// Draws the data of one scenario.
pub fn generate<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> Result<GeneratedData> {
    scenario.validate()?;
    let (n, eps) = (scenario.n, scenario.epsilon);
    let (data, outliers, sigma) = match scenario.generator {
        Generator::AlyzGaussian => {
            let sigma = generate_alyz_sigma(scenario.p, ALYZ_CONDITION_NUMBER, rng)?;
            let (d, o) = generate_contaminated(n, &sigma, eps, scenario.contamination, rng)?;
            (d, o, Some(sigma))
        }
        Generator::TCopula { pearson, nu } => {
            let (d, o) = generate_t_copula(n, pearson, nu, eps, rng)?;
            (d, o, None)
        }
        Generator::ClaytonCopula { tau } => {
            let (d, o) = generate_clayton_copula(n, tau, eps, rng)?;
            (d, o, None)
        }
        Generator::Circle => {
            let (d, o) = generate_circle(n, eps, rng)?;
            (d, o, None)
        }
    };
    Ok(GeneratedData { data, outliers, sigma })
}

fn check_square_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(KmrcdError::DimensionMismatch {
            expected: b.nrows(),
            found: a.nrows(),
        });
    }
    Ok(())
}

/// `trace(A B^-1) - log det(A B^-1) - p` for positive definite `A`, `B`.
pub fn kl_divergence(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_square_pair(estimate, truth)?;
    let cb = Cholesky::new(truth.clone()).ok_or(KmrcdError::NotPositiveDefinite("true scatter"))?;
    let ca = Cholesky::new(estimate.clone()).ok_or(KmrcdError::NotPositiveDefinite("estimated scatter"))?;
    let logdet = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let trace = cb.solve(estimate).trace();
    Ok(trace - logdet(&ca.l()) + logdet(&cb.l()) - estimate.nrows() as f64)
}

/// Mean squared entrywise difference.
pub fn mse_deviation(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_square_pair(estimate, truth)?;
    Ok((estimate - truth).norm_squared() / estimate.len() as f64)
}

/// Outliers inside the fitted subset and among the `n - floor(epsilon n)`
/// observations with the smallest distances.
pub fn count_outlier_containment(fit: &KmrcdFit, outliers: &[usize], epsilon: f64) -> (usize, usize) {
    let n = fit.n();
    let in_h = outliers.iter().filter(|&&i| fit.subset.contains(i)).count();
    let top_size = n - (epsilon * n as f64).floor() as usize;
    let top = smallest_indices(fit.distances.as_slice(), top_size);
    let in_top = outliers.iter().filter(|i| top.binary_search(i).is_ok()).count();
    (in_h, in_top)
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// Scatter estimate in the original coordinates (linear kernel only).
    pub estimated_scatter: Option<DMatrix<f64>>,
    pub fit: KmrcdFit,
    pub kl: Option<f64>,
    pub mse: Option<f64>,
    pub outliers_in_h: usize,
    pub outliers_in_top: usize,
    pub n_outliers: usize,
}

/// Generates and fits replication `rep` of a scenario.
pub fn run_replication(scenario: &SimScenario, rep: usize, kernel: KernelChoice, h: SubsetSize) -> Result<SimResult> {
    let mut rng = scenario.rng(rep);
    let gen = generate(scenario, &mut rng)?;
    let options = FitOptions {
        h,
        seed: rng.next_u64(),
        ..FitOptions::default()
    };
    let fit = fit(
        FitInput::Coordinates {
            data: &gen.data,
            kernel,
        },
        &options,
    )?;
    let (outliers_in_h, outliers_in_top) = count_outlier_containment(&fit, &gen.outliers, scenario.epsilon);
    let estimated_scatter = fit.linear_estimates_original().map(|e| e.covariance);
    let (kl, mse) = match (&estimated_scatter, &gen.sigma) {
        (Some(est), Some(sigma)) => (Some(kl_divergence(est, sigma)?), Some(mse_deviation(est, sigma)?)),
        _ => (None, None),
    };
    Ok(SimResult {
        estimated_scatter,
        fit,
        kl,
        mse,
        outliers_in_h,
        outliers_in_top,
        n_outliers: gen.outliers.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn alyz_is_correlation_with_condition_number() {
        for (p, seed) in [(2, 1), (5, 2), (20, 3), (100, 4)] {
            let s = generate_alyz_sigma(p, 100.0, &mut rng(seed)).unwrap();
            for i in 0..p {
                assert!((s[(i, i)] - 1.0).abs() < 1e-6);
                for j in 0..p {
                    assert_eq!(s[(i, j)], s[(j, i)]);
                }
            }
            let e = SortedEigen::new(s.clone());
            assert!(e.smallest() > 0.0);
            assert!((condition(&e.values) - 100.0).abs() / 100.0 < 1e-3);
            if p == 2 {
                assert!(s[(0, 1)].abs() < 1.0);
            }
        }
    }

    #[test]
    fn contamination_center_scaling() {
        let s = generate_alyz_sigma(6, 100.0, &mut rng(9)).unwrap();
        let v = contamination_center(&s) / CONTAMINATION_DISTANCE;
        let q = v.dot(&Cholesky::new(s).unwrap().solve(&v));
        assert_relative_eq!(q, 6.0, epsilon = 1e-8);
    }

    #[test]
    fn contamination_counts() {
        let s = generate_alyz_sigma(3, 100.0, &mut rng(5)).unwrap();
        let (x, o) = generate_contaminated(10, &s, 0.3, Contamination::Point, &mut rng(6)).unwrap();
        assert_eq!(o.len(), 3);
        let mu = contamination_center(&s);
        for &i in &o {
            assert_eq!(x.row(i), mu.iter().copied().collect::<Vec<_>>());
        }
        let (_, o) = generate_contaminated(10, &s, 0.0, Contamination::Shift, &mut rng(6)).unwrap();
        assert!(o.is_empty());
    }

    #[test]
    fn kl_examples() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
        assert!(kl_divergence(&s, &s).unwrap().abs() < 1e-12);
        assert_relative_eq!(kl_divergence(&(&s * 2.0), &s).unwrap(), 3.0 - 3.0 * 2.0_f64.ln(), epsilon = 1e-12);
        let i = DMatrix::<f64>::identity(2, 2);
        let a = kl_divergence(&(&i * 2.0), &i).unwrap();
        let b = kl_divergence(&i, &(&i * 2.0)).unwrap();
        assert!((a - b).abs() > 0.1);
        assert!(kl_divergence(&DMatrix::zeros(2, 2), &i).is_err());
    }

    #[test]
    fn mse_examples() {
        let s = DMatrix::from_element(4, 4, 0.3);
        assert_eq!(mse_deviation(&s, &s).unwrap(), 0.0);
        assert_relative_eq!(mse_deviation(&(&s + DMatrix::from_element(4, 4, 1.0)), &s).unwrap(), 1.0, epsilon = 1e-15);
        assert!(mse_deviation(&s, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn clayton_theta_example() {
        assert_relative_eq!(clayton_theta(0.6), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_points() {
        let (x, o) = generate_circle(50, 0.2, &mut rng(3)).unwrap();
        assert_eq!(o.len(), 10);
        for i in (0..50).filter(|i| !o.contains(i)) {
            let r = x.row(i);
            assert!((r[0].hypot(r[1]) - 1.0).abs() < 1e-15);
        }
        let (_, o) = generate_circle(20, 0.0, &mut rng(3)).unwrap();
        assert!(o.is_empty());
    }

    #[test]
    fn scenario_validation() {
        let mut s = SimScenario {
            n: 100,
            p: 2,
            epsilon: 0.2,
            contamination: Contamination::None,
            generator: Generator::Circle,
            seed: 1,
        };
        assert!(s.validate().is_ok());
        s.epsilon = 0.5;
        assert!(s.validate().is_err());
        s.epsilon = 0.1;
        s.p = 3;
        assert!(s.validate().is_err());
        s.generator = Generator::AlyzGaussian;
        assert!(s.validate().is_err());
        s.contamination = Contamination::Cluster;
        assert!(s.validate().is_ok());
    }
}
