//! Kernel Minimum Regularized Covariance Determinant estimation.
//!
//! Robust location/scatter estimation and outlier detection in the feature
//! space of a positive semidefinite kernel, computed entirely through Gram
//! matrices.

pub mod error;
pub mod initial;
pub mod kernel;
pub mod estimator;
pub mod linalg;
pub mod refinement;
pub mod robust;
pub mod simulation;

pub use error::{KmrcdError, Result};
pub use initial::{HSubset, InitialEstimator, WeightPair};
pub use kernel::{DataMatrix, GramKind, GramMatrix, KernelSpec};
pub use estimator::{fit, FitInput, FitOptions, KernelChoice, KmrcdFit, SubsetSize};
