//! Election coding for Byzantine-robust sign-SGD with majority vote.
//!
//! Data partitions are assigned redundantly to workers through a binary
//! allocation matrix `G`. Each worker majority-votes the gradient signs of
//! its partitions, Byzantine workers corrupt their outgoing bit, and the
//! parameter server majority-votes the received bits. The crate provides:
//!
//! - [`allocation`]: deterministic, random Bernoulli and identity codes.
//! - [`voting`]: local encoders, the global decoder and the `S_v` counter.
//! - [`tolerance`]: two independent exhaustive tolerance verifiers.
//! - [`attacks`]: reverse, directional and oracle-reverse Byzantine models.
//! - [`oracle`]: a simulated stochastic-gradient source.
//! - [`bounds`]: closed-form local/global error bounds and the certificate.
//! - [`montecarlo`]: empirical local and global error estimates.
//! - [`trainer`]: a coded SignSGD/Signum training simulator.
//! - [`cli`]: the `election` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod attacks;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod tolerance;
pub mod trainer;
pub mod voting;

pub use allocation::{AllocationMatrix, CodeKind, CodeParams};
pub use attacks::{AttackModel, AttackSpec};
pub use bounds::{BoundInputs, Certificate};
pub use error::{Error, Result};
pub use oracle::{NoiseFamily, OracleConfig};
pub use tolerance::{Method, ToleranceReport};
pub use voting::{Sign, SignVector};
