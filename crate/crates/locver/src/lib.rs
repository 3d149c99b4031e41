//! Location verification toolkit for RSS-reporting vehicles.
//!
//! A vehicle reports a claimed planar position; a set of fixed roadside
//! units (RSUs) measures the received signal strength (RSS) of its
//! transmission. This crate decides whether the claim is genuine:
//!
//! - [`scenario`] — RSU geometry, vehicle placement, and labeled
//!   legitimate/spoofed dataset generation under a minimum-displacement
//!   constraint.
//! - [`channel`] — log-normal pathloss model: hypothesis-conditional mean
//!   RSS vectors, noisy observation drawing, Gaussian log-likelihoods, and
//!   pathloss-exponent fitting from distance/RSS samples.
//! - [`lrt`] — likelihood-ratio verifier with threshold sweeps and
//!   false-positive / detection-rate / total-error accounting.
//! - [`adversary`] — an optimizing spoofer that picks the claimed location
//!   minimizing the KL divergence between the two observation
//!   distributions, subject to the displacement constraint.
//! - [`neural`] — a from-scratch single-hidden-layer perceptron verifier
//!   trained with Levenberg–Marquardt and validation-failure early
//!   stopping.
//! - [`harness`] — the end-to-end Monte Carlo comparison of both
//!   verifiers under random and optimized attacks, including the
//!   learning-curve protocol and CSV/JSON emission.
//!
//! Hot loops are data-parallel through [`exec`], which runs on rayon by
//! default and falls back to sequential iteration when the crate is built
//! with `--no-default-features`. Every randomized operation is seeded and
//! reproduces bit-identically regardless of thread count.

pub mod adversary;
pub mod channel;
pub mod error;
pub mod exec;
pub mod harness;
pub mod lrt;
pub mod neural;
pub mod scenario;

pub use error::{Error, Result};
