//! Regression on binned probability distributions.
//!
//! Every value flowing through the networks in this crate is a
//! [`dist::BinnedDistribution`]: a probability mass function over `q` equal-width
//! bins of a compact interval. The distribution regression network
//! ([`net::DrnNetwork`]) propagates whole distributions node to node by
//! marginalizing a Boltzmann conditional, and its recurrent variant
//! ([`rdrn::RdrnParams`]) shares those weights across time steps.
//!
//! ```
//! use drn::dist::{BinnedDistribution, Support, jsd};
//!
//! let support = Support::new(0.0, 1.0, 100).unwrap();
//! let a = BinnedDistribution::gaussian(0.4, 0.01, support).unwrap();
//! let b = BinnedDistribution::gaussian(0.6, 0.01, support).unwrap();
//! assert!(jsd(&a, &b).unwrap() > 0.0);
//! ```
//!
//! The `book/` directory at the repository root contains an mdbook guide that
//! walks through the propagation model, its algebraic properties, and the
//! experiment pipeline; its code snippets mirror the doc-tests in this crate.

pub mod baseline;
pub mod checks;
pub mod ckpt;
pub mod data;
pub mod dist;
pub mod net;
pub mod rdrn;
pub mod train;
