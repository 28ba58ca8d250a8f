//! Finite mixtures of Birnbaum–Saunders distributions.
//!
//! The crate covers the single-component distribution ([`bs`]), the mixture
//! and its reliability functions ([`mixture`]), initial partitions ([`init`]),
//! ECM fitting ([`em`]), standard errors and bootstrap tests ([`inference`])
//! and a Monte Carlo harness ([`study`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod bs;
pub mod em;
pub mod error;
pub mod inference;
pub mod init;
pub mod mixture;
pub mod normal;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod study;

pub use bs::BsParams;
pub use em::{fit, EmConfig, FitResult};
pub use error::{Error, Result};
pub use init::{InitStrategy, Partition};
pub use mixture::MixtureParams;
