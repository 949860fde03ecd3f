//! Quaternion matrix toolkit: dense quaternion matrices, QSVD through the
//! complex adjoint, CUR low-rank approximation with length-squared and
//! uniform sampling, perturbation-bound evaluation, CUR-based matrix
//! completion and color-image encoding/metrics.

pub mod completion;
pub mod cur;
pub mod error;
pub mod imaging;
pub mod linalg;
pub mod parallel;
pub mod qmatrix;
pub mod quaternion;
pub mod rng;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use cur::{
    cur_reconstruct, perturbation_bounds, qmcur, stabilized_reconstruct, CurFactors, NormKind,
    SamplingPlan, Strategy,
};
pub use error::{QError, Result};
pub use linalg::{
    lowrank_truncate, numerical_rank, pseudoinverse, qsvd, spectral_norm, to_complex_adjoint,
    ComplexAdjoint, QsvdResult,
};
pub use qmatrix::QMatrix;
pub use quaternion::Quaternion;
