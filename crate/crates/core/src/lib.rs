//! Proper agnostic learning of halfspaces and ReLUs under standard Gaussian
//! marginals.
//!
//! The pipeline fits a low-degree polynomial to the labels in the normalized
//! Hermite basis, reads off the high-influence subspace from the spectrum of
//! `E[∇P ∇Pᵀ]`, and searches an explicit cover of hypotheses whose normals
//! lie in that subspace. A localization wrapper turns the same learner into a
//! `(1+γ)·OPT` learner for homogeneous halfspaces, and a squared-loss variant
//! handles ReLU regression.
//!
//! Module map:
//!
//! - [`gaussian`]: counter-based RNG streams, Gaussian sampling, Gauss–Hermite
//!   quadrature and `Φ`.
//! - [`hermite`]: multi-indices and Hermite-basis polynomials.
//! - [`regression`]: L2 polynomial regression with confidence boosting.
//! - [`influence`]: the influence matrix, Jacobi eigensolver, subspace selection.
//! - [`cover`]: ε-covers, threshold grids, empirical 0-1 minimization.
//! - [`proper`]: the end-to-end proper halfspace learner.
//! - [`ptas`]: initialization, soft localization, whitening, validation.
//! - [`relu`]: the ReLU regression learner.
//! - [`datasets`]: planted models, noise adversaries, OPT oracles, CSV I/O.
//! - [`report`]: serialized run reports.

pub mod cover;
pub mod datasets;
mod error;
pub mod gaussian;
pub mod hermite;
pub mod influence;
pub mod linalg;
mod parallel;
pub mod proper;
pub mod ptas;
pub mod regression;
pub mod relu;
pub mod report;
pub mod sample;

pub use error::{Error, Result};
pub use sample::{LabelMode, Points, SampleBatch};
