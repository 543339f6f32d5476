//! n-bit strings indexed as integers.
//!
//! Bob 1 holds the most significant bit, so the string `"01"` is index 1 and
//! `"10"` is index 2. The two GHZ-branch strings are `all(0) = 0` and
//! `all(1) = 2^n - 1`.

use crate::{Error, Result};

/// Largest number of Bobs any bit-string helper accepts.
pub const MAX_BOBS: usize = 30;

/// `2^n`.
pub fn dim(n: usize) -> usize {
    1usize << n
}

/// The string with every bit equal to `a`.
pub fn all(a: u8, n: usize) -> usize {
    if a == 0 {
        0
    } else {
        dim(n) - 1
    }
}

/// Bitwise complement of an `n`-bit string.
pub fn complement(b: usize, n: usize) -> usize {
    !b & (dim(n) - 1)
}

/// Bit held by Bob `i` (zero-based) in string `b`.
pub fn bit(b: usize, i: usize, n: usize) -> u8 {
    ((b >> (n - 1 - i)) & 1) as u8
}

/// Parses a string of `'0'`/`'1'` characters.
pub fn parse(s: &str) -> Result<usize> {
    if s.is_empty() || s.len() > MAX_BOBS {
        return Err(Error::Domain(format!("bit string {s:?} has unsupported length")));
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::Domain(format!("bit string {s:?} contains {ch:?}"))),
    })
}

pub fn format(b: usize, n: usize) -> String {
    (0..n).map(|i| if bit(b, i, n) == 1 { '1' } else { '0' }).collect()
}
