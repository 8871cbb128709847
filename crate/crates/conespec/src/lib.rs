//! conespec: spectral embeddings of mixture-model point clouds and the
//! geometry certificates that go with them.
//!
//! The library builds ε-proximity graph Laplacians with kernelized weights,
//! discretizes the matching weighted continuum operators, computes the
//! separation parameters of a declared mixture model (overlap, coupling,
//! indivisibility), and checks whether embedded data concentrates on cones
//! around orthogonal directions.
//!
//! Entry points:
//! - [`mixture::MixtureModel`]: declared mixture models and their separation
//!   parameters.
//! - [`continuum`]: grid discretizations of weighted Laplacians, their
//!   spectra, and Cheeger cut sweeps.
//! - [`graph`]: ε-graph construction and the kernelized / γ-normalized graph
//!   Laplacians.
//! - [`eigen`]: sparse symmetric eigensolver for the smallest eigenpairs.
//! - [`embedding`]: spectral embeddings, cone-structure verification and
//!   detection, Wasserstein distances, orthogonal alignment.
//! - [`report`]: the separation certificate combining everything above.
//! - [`cli`]: the `conespec` command-line front end.
//!
//! The `examples/` directory contains one runnable example per capability.

// `!(x > 0.0)` is the NaN-rejecting form of a positivity guard; the direct
// comparison would silently admit NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops below mirror the matrix formulas they implement
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

pub mod cli;
pub mod continuum;
pub mod domain;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod mixture;
pub mod ot;
pub mod presets;
pub mod quad;
pub mod report;
pub mod sparse;

pub use error::{Error, Result};
