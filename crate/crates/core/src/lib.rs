//! Smallest-eigenvalue certification for covariance matrices of multivariate
//! stationary spatial processes.
//!
//! The crate assembles covariance matrices `Σ` from a linear model of
//! coregionalization and a multi-process sampling design, audits the
//! decay, spectral-positivity and minimum-distance conditions numerically, and
//! produces a lower bound on `λ₁(Σ)` that does not depend on the number of
//! observations. The bound is obtained by comparing `Σ` in quadratic form to a
//! block-diagonal matrix built from a compactly supported spectral window:
//!
//! ```text
//! λ₁(Σ) ≥ (h(0) / 2) · δ^d · δ₂
//! ```
//!
//! where `δ` scales the window so that its within-process Gershgorin row sums
//! stay below `h(0)/2`, and `δ₂` is the spectral floor of the model over the
//! window's support divided by the window's peak.
//!
//! Module map:
//! - [`covmodels`]: isotropic latents, LMC matrix covariance, decay audit.
//! - [`spectral`]: spectral density matrices, Fourier oracles, floors, inversion audit.
//! - [`designs`]: grid / random min-distance designs and `Δ`.
//! - [`matrixops`]: `Σ` assembly, eigenvalues, Gershgorin, Toeplitz closed form, tapers.
//! - [`certifier`]: window construction, `δ`/`δ₂` search, certified bounds.
//! - [`cli`]: config parsing, commands and deterministic report output.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod audit;
pub mod certifier;
pub mod cli;
pub mod covmodels;
pub mod designs;
mod error;
pub mod matrixops;
pub mod quadrature;
pub mod spectral;

pub use audit::AuditReport;
pub use error::{Error, Result};
