//! Transmit-vector set design and evaluation for GenSM/GenQSM MIMO systems.
//!
//! A `(N_t, N_r, N_RF, n)` GenSM or GenQSM system sends one of `N = 2^n`
//! transmit vectors per channel use, with at most `N_RF` antennas driven at
//! once. This crate designs the transmit vector set under the max-min
//! Euclidean distance criterion and evaluates the result:
//!
//! - [`channel`] — transmit-correlated Rayleigh channels, real-domain
//!   expansion, estimation-error perturbation.
//! - [`tac`] — transmit antenna combination (TAC) enumeration and the
//!   position-constrained sparsity rules.
//! - [`shaping`] — the transmit-set data model, distance/power/CFM metrics,
//!   and the CSV interchange format.
//! - [`obss`] — optimization-based shaping: recursive partition growth with
//!   non-convex QCQP entry optimization.
//! - [`cbss`] — codebook-based shaping: QAM codebooks and progressive
//!   CFM-greedy selection.
//! - [`evaluate`] — analytic SER upper bound, Monte-Carlo SER with ML
//!   detection, minimum-distance CCDF estimation, and conventional
//!   BPSK-based baselines.

pub mod cbss;
pub mod channel;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod obss;
pub mod rng;
pub mod shaping;
pub mod tac;

pub use config::{CsitMode, Scheme, SystemConfig};
pub use error::{Error, Result};
pub use shaping::{TransmitSet, WeightMatrix, WeightMode};
