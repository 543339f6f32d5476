//! Plain-text attack tables.
//!
//! ```text
//! # comments start with '#'
//! BOBS 1              # optional; otherwise inferred from the largest index
//! FORWARD             # a b p(b|a)
//! 0 0 0.9
//! 0 1 0.1
//! ...
//! BACKWARD            # a b b' p'(b'|ab)
//! 0 0 0 1.0
//! ...
//! GRAM                # a b b' a2 c c' Re⟨E_abb'|E_a2cc'⟩
//! 0 0 0 1 1 1 0.8
//! ```
//!
//! Strings are decimal indices with Bob 1 as the most significant bit. Table
//! entries that are not listed are 0. Gram entries are symmetric; unlisted
//! off-diagonal entries are 0 and the diagonal is 1.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{attack_from_tables, eve_index, CollectiveAttack, ConditionalChannelTable, EveGram, MAX_TABLE_BOBS};
use crate::bits;
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Forward,
    Backward,
    Gram,
}

struct Parsed {
    bobs: Option<usize>,
    forward: Vec<(usize, usize, f64)>,
    backward: Vec<(usize, usize, usize, f64)>,
    gram: Vec<([usize; 6], f64)>,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("attack table line {line}: {msg}"))
}

fn parse_lines(text: &str) -> Result<Parsed> {
    let mut p = Parsed { bobs: None, forward: vec![], backward: vec![], gram: vec![] };
    let mut section = Section::None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0].to_ascii_uppercase().as_str() {
            "FORWARD" => {
                section = Section::Forward;
                continue;
            }
            "BACKWARD" => {
                section = Section::Backward;
                continue;
            }
            "GRAM" => {
                section = Section::Gram;
                continue;
            }
            "BOBS" => {
                let n = toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(lineno, "BOBS needs a count"))?;
                p.bobs = Some(n);
                continue;
            }
            _ => {}
        }
        let want = match section {
            Section::None => return Err(parse_err(lineno, "data before any section header")),
            Section::Forward => 3,
            Section::Backward => 4,
            Section::Gram => 7,
        };
        if toks.len() != want {
            return Err(parse_err(lineno, format!("expected {want} fields, found {}", toks.len())));
        }
        let idx: Vec<usize> = toks[..want - 1]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|e| parse_err(lineno, format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let value: f64 = toks[want - 1].parse().map_err(|e| parse_err(lineno, format!("{:?}: {e}", toks[want - 1])))?;
        match section {
            Section::Forward => p.forward.push((idx[0], idx[1], value)),
            Section::Backward => p.backward.push((idx[0], idx[1], idx[2], value)),
            Section::Gram => p.gram.push(([idx[0], idx[1], idx[2], idx[3], idx[4], idx[5]], value)),
            Section::None => unreachable!(),
        }
    }
    Ok(p)
}

/// Parses an attack table and validates it into a table-form attack.
pub fn parse_attack_table(text: &str) -> Result<CollectiveAttack> {
    let p = parse_lines(text)?;
    let max_string = p
        .forward
        .iter()
        .map(|&(_, b, _)| b)
        .chain(p.backward.iter().flat_map(|&(_, b, bp, _)| [b, bp]))
        .chain(p.gram.iter().flat_map(|(k, _)| [k[1], k[2], k[4], k[5]]))
        .max()
        .unwrap_or(1);
    let n = match p.bobs {
        Some(n) => n,
        None => (usize::BITS - max_string.leading_zeros()).max(1) as usize,
    };
    if n == 0 || n > MAX_TABLE_BOBS {
        return Err(Error::Validation(format!("attack tables support 1..={MAX_TABLE_BOBS} Bobs, got {n}")));
    }
    let d = bits::dim(n);
    let bit_ok = |a: usize| a < 2;
    let mut forward = vec![vec![0.0; d]; 2];
    for &(a, b, v) in &p.forward {
        if !bit_ok(a) || b >= d {
            return Err(Error::Validation(format!("FORWARD entry ({a}, {b}) out of range")));
        }
        forward[a][b] = v;
    }
    let mut backward = vec![vec![vec![0.0; d]; d]; 2];
    for &(a, b, bp, v) in &p.backward {
        if !bit_ok(a) || b >= d || bp >= d {
            return Err(Error::Validation(format!("BACKWARD entry ({a}, {b}, {bp}) out of range")));
        }
        backward[a][b][bp] = v;
    }
    let k = 2 * d * d;
    let mut g = DMatrix::<f64>::identity(k, k);
    for &([a, b, bp, a2, c, cp], v) in &p.gram {
        if !bit_ok(a) || !bit_ok(a2) || [b, bp, c, cp].iter().any(|&x| x >= d) {
            return Err(Error::Validation(format!("GRAM entry ({a} {b} {bp} {a2} {c} {cp}) out of range")));
        }
        let (i, j) = (eve_index(n, a, b, bp), eve_index(n, a2, c, cp));
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    let tables = ConditionalChannelTable::new(n, forward, backward)?;
    let gram = EveGram::new(n, g)?;
    attack_from_tables(tables, gram)
}

/// Serializes a table-form attack; nonzero entries only.
pub fn write_attack_table(tables: &ConditionalChannelTable, gram: &EveGram) -> String {
    let n = tables.n();
    let d = tables.dim();
    let mut out = String::new();
    let _ = writeln!(out, "BOBS {n}");
    let _ = writeln!(out, "FORWARD");
    for a in 0..2 {
        for b in 0..d {
            if tables.forward(a, b) != 0.0 {
                let _ = writeln!(out, "{a} {b} {:e}", tables.forward(a, b));
            }
        }
    }
    let _ = writeln!(out, "BACKWARD");
    for a in 0..2 {
        for b in 0..d {
            for bp in 0..d {
                if tables.backward(a, b, bp) != 0.0 {
                    let _ = writeln!(out, "{a} {b} {bp} {:e}", tables.backward(a, b, bp));
                }
            }
        }
    }
    let _ = writeln!(out, "GRAM");
    let k = 2 * d * d;
    let split = |i: usize| (i / (d * d), (i / d) % d, i % d);
    for i in 0..k {
        for j in (i + 1)..k {
            let v = gram.get(i, j);
            if v != 0.0 {
                let (a, b, bp) = split(i);
                let (a2, c, cp) = split(j);
                let _ = writeln!(out, "{a} {b} {bp} {a2} {c} {cp} {v:e}");
            }
        }
    }
    out
}
