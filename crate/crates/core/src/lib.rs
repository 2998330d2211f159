//! Numerical laboratory for Caputo fractional backward stochastic
//! differential equations (fBSDEs) of order `alpha` in (1/2, 1).
//!
//! The crate builds adapted solution pairs `(x(t), y(t,s))` on the triangle
//! `0 <= t <= s <= T` by combining:
//!
//! - Mittag-Leffler evaluation for scalars and square matrices
//!   ([`mittag_leffler`]),
//! - reproducible Brownian ensembles and least-squares Monte Carlo
//!   conditional expectations ([`stochastic_core`]),
//! - singular-kernel weighted norms with exact per-cell kernel integrals
//!   ([`weighted_norms`]),
//! - a constructive solver for the linear equation together with residual
//!   and a-priori bound checks ([`linear_fbsde`]),
//! - Picard iteration for the Lipschitz nonlinear equation with contraction
//!   diagnostics ([`picard_solver`]),
//! - a second-kind Volterra discretization and a mild-vs-integral coincidence
//!   check ([`volterra_equivalence`]).
//!
//! Every expectation is a Monte Carlo average over a seeded path ensemble and
//! every reduction runs in a fixed order, so reports are bit-identical across
//! runs and across worker counts. Data-parallel loops use rayon when the
//! default `parallel` feature is enabled and fall back to sequential
//! iteration otherwise.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod fields;
pub mod linear_fbsde;
pub mod mittag_leffler;
pub(crate) mod par;
pub mod picard_solver;
pub mod report;
pub mod stochastic_core;
pub mod volterra_equivalence;
pub mod weighted_norms;

pub use fields::{MatrixField, PathVectors, StateField, TriangularField};
pub use linear_fbsde::{AdaptedPair, AprioriReport, KernelReading, LinearProblem};
pub use mittag_leffler::{MlBounds, MlParams};
pub use picard_solver::{ProblemSpec, SolveReport, SolverConfig};
pub use stochastic_core::{PathEnsemble, RegressionBasis, TimeGrid};
