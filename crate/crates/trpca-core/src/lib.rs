//! Tensor robust principal component analysis under the t-product algebra,
//! with variational-Bayes self-calibration of the three regularization
//! hyperparameters.
//!
//! The decomposition model is `X = L + S + E`: a low-tubal-rank component
//! `L` under a tensor-nuclear-norm prior (optionally weighted), a sparse
//! component `S` under a Laplace prior, and Gaussian residual `E`. The
//! solver alternates closed-form updates for `L` (singular value
//! thresholding in the Fourier domain) and `S` (entrywise soft
//! thresholding) and infers the precision/rate hyperparameters from Gamma
//! posteriors, so no regularization constants need hand tuning.
//!
//! Modules:
//!
//! * [`tensor_algebra`] - dense third-order tensors, mode-3 DFT, t-product.
//! * [`tsvd`] - t-SVD, tubal rank, (weighted) tensor nuclear norm, and the
//!   singular value thresholding proximal operators.
//! * [`laplace_approx`] - scalar and spectral Gaussian surrogates feeding
//!   the hyperparameter updates.
//! * [`vbi_solver`] - the solver loop.
//! * [`synth`] - seeded synthetic benchmark instances.
//! * [`metrics`] - PSNR / SSIM / relative step change.
//! * [`io`] - TNS3 tensor container, PPM images, trace files.

pub mod error;
pub mod io;
pub mod laplace_approx;
mod lapack;
pub mod metrics;
pub mod synth;
pub mod tensor_algebra;
pub mod tsvd;
pub mod vbi_solver;

pub use error::{Error, Result};
pub use tensor_algebra::{CTensor3, Tensor3};
pub use tsvd::{TSvdFactors, WeightMatrix};
pub use vbi_solver::{
    Method, PosteriorState, SigmaSConvention, Solver, SolverConfig, SolverOutput, Termination,
    TraceRecord, WeightSpec,
};
