//! Command implementations for the `sqcka` binary.
//!
//! `--attack-file` takes a plain-text table file:
//!
//! ```text
//! # comments start with '#'
//! BOBS 1              # optional; otherwise inferred from the largest index
//! FORWARD             # a b p(b|a)
//! 0 0 0.9
//! 0 1 0.1
//! BACKWARD            # a b b' p'(b'|ab)
//! 0 0 0 1.0
//! GRAM                # a b b' a2 c c' Re<E_abb'|E_a2cc'>
//! 0 0 0 1 1 1 0.8
//! ```
//!
//! Bob strings are decimal indices with Bob 1 as the most significant bit.
//! Unlisted table entries are 0, unlisted Gram off-diagonals are 0 and the
//! Gram diagonal is 1. The Gram must be positive semidefinite; `verify
//! --attack-file` reports why a file is rejected.

pub mod config;
pub mod format;
pub mod simulate;
pub mod sweep;
pub mod verify;
