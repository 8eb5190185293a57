//! Differentially private synthetic tabular data.
//!
//! Generators: the non-parametric copula (`npc`) and its private variant
//! (`dpnpc`), a private Gaussian copula (`dpcopula`) and an independent
//! noisy-histogram baseline (`dphist`). The [`eval`] module scores a
//! synthetic table on membership-inference risk, classifier utility and
//! marginal fidelity.

pub mod baselines;
pub mod cli;
pub mod copula;
pub mod dp;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod marginals;
pub mod npc;
pub mod rng;
pub mod tabular;

pub use error::{Error, ErrorKind, Result};
pub use npc::{generate, GenConfig, ModelKind};
pub use tabular::{Column, ColumnKind, Schema, SplitSpec, Table};
