//! Numerical laboratory for Wigner random matrices.
//!
//! The crate samples Wigner ensembles (GOE, GUE and discrete ensembles that
//! match them to fourth order), decomposes them, and measures the eigenvector
//! and resolvent statistics whose limiting laws are known: Haar coefficient
//! laws, projection central limit theorems, level repulsion, delocalization
//! and the local semicircle law.
//!
//! Index conventions: eigenvalue indices `i` and coordinate indices `p`, `q`
//! are 1-based throughout the public API, matching the usual mathematical
//! notation `λ_1 ≤ … ≤ λ_n` and `u_{i,p}`.
//!
//! Scaling conventions: a [`MatrixSample`](ensemble::MatrixSample) holds the
//! raw Wigner matrix `M` with unit-variance off-diagonal entries. Spectral
//! observables are usually taken on `A = √n·M` (unit mean spacing in the
//! bulk), resolvents on `M/√n` (spectrum near `[-2, 2]`).

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod atom;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod haar;
pub mod io;
pub mod resolvent;
pub mod seed;
pub mod spectral;
pub mod stats;

pub use atom::{AtomDistribution, DiscreteAtom, MomentTable};
pub use ensemble::{HermitianMatrix, MatrixSample, Symmetry, WignerSpec};
pub use error::{Error, Result};
pub use haar::{Group, HaarMatrix, ReferenceLaw};
pub use spectral::{Normalization, ObservableTuple, PhiConfig, SpectralDecomposition};
pub use stats::{SmoothFunctional, TestReport};

pub use num_complex::Complex64;
