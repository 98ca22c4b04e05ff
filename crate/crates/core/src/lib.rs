//! Euclidean embedding of squared-dissimilarity matrices.
//!
//! The crate covers classical MDS (cMDS), a closed-form decomposition of the
//! SSTRESS error `||D_cmds - D||_F^2` into spectral terms, the exact
//! projection onto the relaxed set `kappa(r)` (a lower bound on the optimal
//! SSTRESS that also feeds a better cMDS embedding), an alternating-projection
//! SSTRESS solver, metric generators and an evaluation harness.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the CLI uses.

pub mod cmds;
pub mod decomp;
pub mod dissim;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod lower;
pub mod metrics;
pub mod scalar;
pub mod sstress;

pub use cmds::{cmds, cmds_symmetric, strain_value, CmdsResult};
pub use decomp::{decompose_error, sweep, ErrorAnalysis, ErrorDecomposition, MaskedSpectrum};
pub use dissim::{Embedding, SquaredDissimilarityMatrix};
pub use error::{Error, Result};
pub use linalg::{QDecomposition, SpectralData};
pub use lower::{lower_bound_value, lower_cmds, project_onto_kappa, KappaProjection};
pub use scalar::Real;
pub use sstress::{solve_sstress, SstressConfig, SstressResult};

pub type Dissimilarity64 = SquaredDissimilarityMatrix<f64>;
pub type Dissimilarity32 = SquaredDissimilarityMatrix<f32>;
pub type Embedding64 = Embedding<f64>;
pub type Embedding32 = Embedding<f32>;
pub type CmdsResult64 = CmdsResult<f64>;
pub type ErrorDecomposition64 = ErrorDecomposition<f64>;
pub type KappaProjection64 = KappaProjection<f64>;
pub type SstressResult64 = SstressResult<f64>;
