//! Parameter estimation from session tallies.
//!
//! Radii are Hoeffding half-widths `√(ln(2/δ)/(2N))` with `δ = 1 − confidence`.

use std::fmt::Write as _;

use crate::attacks::{eve_index, AnalyticAttack};
use crate::bits;
use crate::{Error, Result};

/// Counts accumulated over a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyCounts {
    pub n: usize,
    pub ghz_pass: u64,
    pub ghz_total: u64,
    /// CTRL Z-test outcomes, `[a][c]`.
    pub z_ctrl_counts: Vec<Vec<u64>>,
    /// Disclosed SIFT outcomes, `[a][b]`.
    pub sift_joint_counts: Vec<Vec<u64>>,
    pub sift_total: u64,
}

impl TallyCounts {
    pub fn new(n: usize) -> Self {
        let d = bits::dim(n);
        Self {
            n,
            ghz_pass: 0,
            ghz_total: 0,
            z_ctrl_counts: vec![vec![0; d]; 2],
            sift_joint_counts: vec![vec![0; d]; 2],
            sift_total: 0,
        }
    }

    pub fn record_ghz(&mut self, pass: bool) {
        self.ghz_total += 1;
        self.ghz_pass += u64::from(pass);
    }

    pub fn record_z_ctrl(&mut self, a: u8, c: usize) {
        self.z_ctrl_counts[a as usize][c] += 1;
    }

    pub fn record_sift(&mut self, a: u8, b: usize) {
        self.sift_joint_counts[a as usize][b] += 1;
        self.sift_total += 1;
    }

    pub fn z_ctrl_total(&self) -> u64 {
        self.z_ctrl_counts.iter().flatten().sum()
    }

    /// Adds another tally for the same number of Bobs.
    pub fn merge(&mut self, other: &TallyCounts) -> Result<()> {
        if other.n != self.n {
            return Err(Error::Domain(format!("cannot merge tallies for {} and {} Bobs", self.n, other.n)));
        }
        self.ghz_pass += other.ghz_pass;
        self.ghz_total += other.ghz_total;
        self.sift_total += other.sift_total;
        for (mine, theirs) in [
            (&mut self.z_ctrl_counts, &other.z_ctrl_counts),
            (&mut self.sift_joint_counts, &other.sift_joint_counts),
        ] {
            for (x, y) in mine.iter_mut().flatten().zip(theirs.iter().flatten()) {
                *x += *y;
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if self.ghz_pass > self.ghz_total {
            return Err(Error::Validation("more GHZ passes than GHZ tests".into()));
        }
        if self.sift_joint_counts.iter().flatten().sum::<u64>() != self.sift_total {
            return Err(Error::Validation("SIFT counts do not sum to their total".into()));
        }
        Ok(())
    }

    /// Line format `category index count`; table indices are `a.bits`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bobs 0 {}", self.n);
        let _ = writeln!(out, "ghz_pass 0 {}", self.ghz_pass);
        let _ = writeln!(out, "ghz_total 0 {}", self.ghz_total);
        for (cat, table) in [("z_ctrl", &self.z_ctrl_counts), ("sift", &self.sift_joint_counts)] {
            for (a, row) in table.iter().enumerate() {
                for (k, &count) in row.iter().enumerate() {
                    if count > 0 {
                        let _ = writeln!(out, "{cat} {a}.{} {count}", bits::format(k, self.n));
                    }
                }
            }
        }
        let _ = writeln!(out, "sift_total 0 {}", self.sift_total);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tally: Option<TallyCounts> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Validation(format!("tally line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [cat, index, count] = fields[..] else {
                return Err(bad("expected `category index count`"));
            };
            let count: u64 = count.parse().map_err(|_| bad("count is not a non-negative integer"))?;
            if cat == "bobs" {
                if tally.is_some() {
                    return Err(bad("repeated `bobs` line"));
                }
                let n = usize::try_from(count).map_err(|_| bad("bad Bob count"))?;
                if n == 0 || n > bits::MAX_BOBS {
                    return Err(bad("Bob count out of range"));
                }
                tally = Some(TallyCounts::new(n));
                continue;
            }
            let t = tally.as_mut().ok_or_else(|| bad("`bobs` must come first"))?;
            match cat {
                "ghz_pass" => t.ghz_pass = count,
                "ghz_total" => t.ghz_total = count,
                "sift_total" => t.sift_total = count,
                "z_ctrl" | "sift" => {
                    let (a, s) = index.split_once('.').ok_or_else(|| bad("index must be `a.bits`"))?;
                    let a: usize = match a {
                        "0" => 0,
                        "1" => 1,
                        _ => return Err(bad("Alice bit must be 0 or 1")),
                    };
                    if s.len() != t.n {
                        return Err(bad("bit string has the wrong length"));
                    }
                    let k = bits::parse(s).map_err(|_| bad("bad bit string"))?;
                    let table = if cat == "z_ctrl" { &mut t.z_ctrl_counts } else { &mut t.sift_joint_counts };
                    table[a][k] = count;
                }
                _ => return Err(bad("unknown category")),
            }
        }
        let t = tally.ok_or_else(|| Error::Validation("tally file has no `bobs` line".into()))?;
        t.check()?;
        Ok(t)
    }
}

/// A point estimate with a confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithRadius {
    pub value: f64,
    pub radius: f64,
    pub confidence: f64,
}

impl EstimateWithRadius {
    pub fn contains(&self, x: f64, radii: f64) -> bool {
        (self.value - x).abs() <= radii * self.radius
    }
}

/// `√(ln(2/δ)/(2N))`.
pub fn hoeffding_radius(samples: u64, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence {confidence} outside (0, 1)")));
    }
    if samples == 0 {
        return Err(Error::NoData("no samples".into()));
    }
    Ok(((2.0 / (1.0 - confidence)).ln() / (2.0 * samples as f64)).sqrt())
}

fn frequency(count: u64, total: u64, confidence: f64) -> Result<EstimateWithRadius> {
    Ok(EstimateWithRadius {
        value: count as f64 / total as f64,
        radius: hoeffding_radius(total, confidence)?,
        confidence,
    })
}

pub fn estimate_p_ghz(t: &TallyCounts, confidence: f64) -> Result<EstimateWithRadius> {
    if t.ghz_total == 0 {
        return Err(Error::NoData("no GHZ tests in the tallies".into()));
    }
    frequency(t.ghz_pass, t.ghz_total, confidence)
}

/// `q_{ac} = 2·p̂(a, c)` from the CTRL Z tests.
pub fn estimate_branch_norms(t: &TallyCounts, confidence: f64) -> Result<Vec<Vec<EstimateWithRadius>>> {
    let total = t.z_ctrl_total();
    if total == 0 {
        return Err(Error::NoData("no CTRL Z-test data in the tallies".into()));
    }
    t.z_ctrl_counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&k| {
                    let f = frequency(k, total, confidence)?;
                    Ok(EstimateWithRadius { value: 2.0 * f.value, radius: 2.0 * f.radius, confidence })
                })
                .collect()
        })
        .collect()
}

/// `Re⟨Ẽ_{0,0⃗}|Ẽ_{1,1⃗}⟩ = (4 p_GHZ − q00 − q11)/2`.
pub fn estimate_re_overlap(p_ghz: f64, q00: f64, q11: f64) -> f64 {
    (4.0 * p_ghz - q00 - q11) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    pub estimate: EstimateWithRadius,
    pub q00: EstimateWithRadius,
    pub q11: EstimateWithRadius,
    /// `|Re| ≤ √(q00·q11)` up to the combined radius. A violation points to
    /// bad tallies or a non-collective attack.
    pub cauchy_schwarz_ok: bool,
}

/// Overlap estimate with a radius propagated from its three inputs.
pub fn estimate_re_overlap_from_tallies(t: &TallyCounts, confidence: f64) -> Result<OverlapEstimate> {
    let p = estimate_p_ghz(t, confidence)?;
    let q = estimate_branch_norms(t, confidence)?;
    let (q00, q11) = (q[0][bits::all(0, t.n)], q[1][bits::all(1, t.n)]);
    let value = estimate_re_overlap(p.value, q00.value, q11.value);
    let radius = 2.0 * p.radius + 0.5 * (q00.radius + q11.radius);
    let cs = (q00.value.max(0.0) * q11.value.max(0.0)).sqrt();
    let cs_radius = 0.5 * (q00.radius + q11.radius);
    Ok(OverlapEstimate {
        estimate: EstimateWithRadius { value, radius, confidence },
        q00,
        q11,
        cauchy_schwarz_ok: value.abs() <= cs + radius + cs_radius,
    })
}

/// `p̂(b|a)` from the disclosed SIFT rounds.
pub fn estimate_channel_conditionals(t: &TallyCounts, confidence: f64) -> Result<Vec<Vec<EstimateWithRadius>>> {
    t.sift_joint_counts
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(Error::NoData(format!("no disclosed SIFT rounds with a = {a}")));
            }
            row.iter().map(|&k| frequency(k, total, confidence)).collect()
        })
        .collect()
}

/// `p̂_B(b)` from the disclosed SIFT rounds.
pub fn estimate_bob_marginal(t: &TallyCounts, confidence: f64) -> Result<Vec<EstimateWithRadius>> {
    if t.sift_total == 0 {
        return Err(Error::NoData("no disclosed SIFT rounds".into()));
    }
    (0..bits::dim(t.n))
        .map(|b| frequency(t.sift_joint_counts[0][b] + t.sift_joint_counts[1][b], t.sift_total, confidence))
        .collect()
}

/// `p̂_A(a)` from the disclosed SIFT rounds.
pub fn estimate_alice_marginal(t: &TallyCounts, confidence: f64) -> Result<[EstimateWithRadius; 2]> {
    if t.sift_total == 0 {
        return Err(Error::NoData("no disclosed SIFT rounds".into()));
    }
    let row = |a: usize| frequency(t.sift_joint_counts[a].iter().sum(), t.sift_total, confidence);
    Ok([row(0)?, row(1)?])
}

/// Fraction of disclosed SIFT rounds where Bob `j` (0-based) disagrees with Alice.
pub fn estimate_bob_disagreement(t: &TallyCounts, j: usize, confidence: f64) -> Result<EstimateWithRadius> {
    if j >= t.n {
        return Err(Error::Domain(format!("Bob {j} out of range")));
    }
    if t.sift_total == 0 {
        return Err(Error::NoData("no disclosed SIFT rounds".into()));
    }
    let wrong: u64 = (0..2)
        .map(|a| {
            t.sift_joint_counts[a]
                .iter()
                .enumerate()
                .filter(|&(b, _)| bits::bit(b, j, t.n) as usize != a)
                .map(|(_, &k)| k)
                .sum::<u64>()
        })
        .sum();
    frequency(wrong, t.sift_total, confidence)
}

/// Observable Gram aggregates
/// `G_{ac} = Σ_{b,b'} √(p(b|a)p(b'|a)p'(c|ab)p'(c|ab')) Re⟨E_{abc}|E_{ab'c}⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSystem {
    pub aggregates: Vec<Vec<f64>>,
}

/// The aggregates equal the branch norms `q_{ac}`; individual Gram entries are
/// not identifiable from these observables. Rows must sum to 1 within `tol`.
pub fn solve_alpha_system(q_ac: &[Vec<f64>], p_ba: &[Vec<f64>], tol: f64) -> Result<AlphaSystem> {
    if q_ac.len() != 2 || p_ba.len() != 2 || q_ac[0].len() != p_ba[0].len() {
        return Err(Error::Domain("tables must have two rows of equal length".into()));
    }
    for (name, table) in [("q_ac", q_ac), ("p(b|a)", p_ba)] {
        for row in table {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol || row.iter().any(|&x| x < -tol) {
                return Err(Error::Validation(format!("{name} row is not a distribution (sum {s})")));
            }
        }
    }
    Ok(AlphaSystem { aggregates: q_ac.to_vec() })
}

/// The same aggregates evaluated from a table-form attack.
pub fn alpha_aggregates(an: &AnalyticAttack) -> Vec<Vec<f64>> {
    let d = an.tables.dim();
    (0..2).map(|a| (0..d).map(|c| an.reflection_overlap(a, c, a, c)).collect()).collect()
}

/// `Σ_{b,b'} √(p(b|0)p(b'|1)p'(0⃗|0b)p'(1⃗|1b')) Re⟨E_{0b0⃗}|E_{1b'1⃗}⟩`, the
/// overlap written through the cross-Gram terms. Only usable when the Gram is
/// known, so it serves as a cross-check.
pub fn re_overlap_from_cross_terms(an: &AnalyticAttack) -> f64 {
    let n = an.tables.n();
    let d = an.tables.dim();
    let (z, o) = (bits::all(0, n), bits::all(1, n));
    let mut acc = 0.0;
    for b in 0..d {
        for b2 in 0..d {
            let w = an.tables.weight(0, b, z) * an.tables.weight(1, b2, o);
            if w > 0.0 {
                acc += w.sqrt() * an.gram.get(eve_index(n, 0, b, z), eve_index(n, 1, b2, o));
            }
        }
    }
    acc
}
