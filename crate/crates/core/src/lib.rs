//! Exact small-scale simulation and key-rate analysis for the GHZ-state
//! semi-quantum conference key agreement protocol.
//!
//! One fully quantum Alice prepares an `(n+1)`-qubit GHZ state, keeps the
//! zeroth qubit and sends one qubit to each of `n` classical Bobs. In CTRL
//! rounds the Bobs reflect and Alice projects onto the GHZ state; in SIFT
//! rounds the Bobs measure in the computational basis and resend, and every
//! party obtains a raw-key bit.
//!
//! Modules:
//!
//! - [`qmath`]: dense complex linear algebra, partial traces and entropies.
//! - [`protocol`]: the one-round state machine and the multi-round session runner.
//! - [`attacks`]: collective attacks in dilated and table form, including the
//!   depolarizing channel.
//! - [`keyrate`]: conditional-entropy lower bounds, leakage and key rates.
//! - [`estimation`]: reconstruction of the security-relevant quantities from tallies.

#![forbid(unsafe_code)]

pub mod attacks;
pub mod bits;
pub mod error;
pub mod estimation;
pub mod keyrate;
pub mod protocol;
pub mod qmath;

pub use error::{Error, Result};
