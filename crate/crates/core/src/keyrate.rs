//! Conditional-entropy lower bounds, closed forms for the depolarizing
//! channel, leakage and the resulting key rate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::attacks::{
    depolarizing_gram, depolarizing_tables, eve_catalogue, eve_index, AnalyticAttack, CollectiveAttack,
    DepolarizingParams,
};
use crate::bits;
use crate::protocol::{run_round_exact, sparse_gram, ProtocolParams};
use crate::qmath::{binary_entropy, entropy_from_gram, shannon_conditional_entropy, Amplitude};
use crate::{Error, Result};

/// Slack allowed on the Cauchy–Schwarz and normalization checks.
pub const BOUND_TOL: f64 = 1e-12;
/// Upper limit on 2-opt swap attempts.
pub const MAX_SWAPS: usize = 10_000;

/// How the entropy bound was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundMode {
    /// Printed closed form `A·(1 − h(λ*))`.
    PaperLiteral,
    /// The pairwise bound evaluated exactly: `2A·(1 − h(λ*))`.
    TheoremExact,
    /// Pairwise bound from tables and Gram with a searched pairing plan.
    GeneralTable,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::PaperLiteral => "paper_literal",
            BoundMode::TheoremExact => "theorem_exact",
            BoundMode::GeneralTable => "general_table",
        }
    }
}

impl std::fmt::Display for BoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_literal" => Ok(BoundMode::PaperLiteral),
            "theorem_exact" => Ok(BoundMode::TheoremExact),
            "general_table" => Ok(BoundMode::GeneralTable),
            _ => Err(Error::Domain(format!("unknown mode `{s}`"))),
        }
    }
}

/// Two unnormalized Eve vectors tagged to Alice's bits 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTerm {
    pub q0: f64,
    pub q1: f64,
    /// `Re⟨E⁰|E¹⟩`.
    pub re_overlap: f64,
}

impl PairedTerm {
    pub fn new(q0: f64, q1: f64, re_overlap: f64) -> Result<Self> {
        if !(q0 >= 0.0 && q1 >= 0.0) || !re_overlap.is_finite() {
            return Err(Error::Validation(format!("bad paired term ({q0}, {q1}, {re_overlap})")));
        }
        if re_overlap.abs() > (q0 * q1).sqrt() + BOUND_TOL {
            return Err(Error::Validation(format!(
                "|Re| = {} exceeds √(q0·q1) = {}",
                re_overlap.abs(),
                (q0 * q1).sqrt()
            )));
        }
        Ok(Self { q0, q1, re_overlap })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyBoundInput {
    pub normalization: f64,
    pub terms: Vec<PairedTerm>,
}

impl EntropyBoundInput {
    pub fn new(normalization: f64, terms: Vec<PairedTerm>) -> Result<Self> {
        let mass: f64 = terms.iter().map(|t| t.q0 + t.q1).sum();
        if !(normalization > 0.0) || (mass - normalization).abs() > BOUND_TOL {
            return Err(Error::Validation(format!("terms carry mass {mass}, normalization is {normalization}")));
        }
        Ok(Self { normalization, terms })
    }
}

/// `λ = ½(1 + √((q0−q1)² + 4 Re²)/(q0+q1))`.
pub fn lambda_term(t: &PairedTerm) -> Result<f64> {
    let s = t.q0 + t.q1;
    if !(s > 0.0) {
        return Err(Error::Domain("λ is undefined for a zero-weight pair".into()));
    }
    let r = ((t.q0 - t.q1).powi(2) + 4.0 * t.re_overlap * t.re_overlap).sqrt() / s;
    Ok((0.5 * (1.0 + r)).min(1.0))
}

/// `(1/𝒩) Σ_i (q0+q1)[h(q0/(q0+q1)) − h(λ_i)]`, unclamped.
pub fn theorem1_entropy_bound(input: &EntropyBoundInput) -> Result<f64> {
    let mut acc = 0.0;
    for t in &input.terms {
        let t = PairedTerm::new(t.q0, t.q1, t.re_overlap)?;
        let s = t.q0 + t.q1;
        if s <= 0.0 {
            continue;
        }
        acc += s * (binary_entropy(t.q0 / s)? - binary_entropy(lambda_term(&t)?)?);
    }
    Ok(acc / input.normalization)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairingStrategy {
    Identity,
    Exhaustive,
    GreedyTwoOpt,
}

/// Pairs branch `(0, b, b')` with `(1, 1⃗⊕π1(b), 1⃗⊕π2(b'))`.
///
/// Indices on the `a = 1` side are taken relative to `1⃗`, so the identity
/// plan pairs equal error patterns: `(0⃗, 0⃗) ↔ (1⃗, 1⃗)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingPlan {
    pub pi1: Vec<usize>,
    pub pi2: Vec<usize>,
    pub strategy: PairingStrategy,
}

fn is_bijection(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

impl PairingPlan {
    pub fn new(pi1: Vec<usize>, pi2: Vec<usize>, strategy: PairingStrategy) -> Result<Self> {
        if pi1.len() != pi2.len() || !is_bijection(&pi1) || !is_bijection(&pi2) {
            return Err(Error::Validation("pairing plan must be two bijections of equal size".into()));
        }
        Ok(Self { pi1, pi2, strategy })
    }

    pub fn identity(n: usize) -> Self {
        let d = bits::dim(n);
        Self { pi1: (0..d).collect(), pi2: (0..d).collect(), strategy: PairingStrategy::Identity }
    }

    /// Absolute `a = 1` partner of `(b, b')`.
    pub fn partner(&self, n: usize, b: usize, b_prime: usize) -> (usize, usize) {
        (bits::complement(self.pi1[b], n), bits::complement(self.pi2[b_prime], n))
    }
}

/// Pairwise terms of a plan, global convention (`𝒩 = 1`).
pub fn plan_terms(an: &AnalyticAttack, plan: &PairingPlan) -> Result<EntropyBoundInput> {
    let n = an.tables.n();
    let d = an.tables.dim();
    if plan.pi1.len() != d {
        return Err(Error::Validation("pairing plan has the wrong size".into()));
    }
    let mut terms = Vec::with_capacity(d * d);
    for b in 0..d {
        for bp in 0..d {
            let (b1, bp1) = plan.partner(n, b, bp);
            let q0 = 0.5 * an.tables.weight(0, b, bp);
            let q1 = 0.5 * an.tables.weight(1, b1, bp1);
            let re = (q0 * q1).sqrt() * an.gram.get(eve_index(n, 0, b, bp), eve_index(n, 1, b1, bp1));
            terms.push(PairedTerm::new(q0, q1, re)?);
        }
    }
    let mass = terms.iter().map(|t| t.q0 + t.q1).sum();
    EntropyBoundInput::new(mass, terms)
}

pub fn plan_bound(an: &AnalyticAttack, plan: &PairingPlan) -> Result<f64> {
    theorem1_entropy_bound(&plan_terms(an, plan)?)
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}

/// Matches error patterns by rank of their marginal weight.
fn rank_match(w0: &[f64], w1: &[f64]) -> Vec<usize> {
    let order = |w: &[f64]| {
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&i, &j| w[j].total_cmp(&w[i]).then(i.cmp(&j)));
        idx
    };
    let (o0, o1) = (order(w0), order(w1));
    let mut pi = vec![0; w0.len()];
    for (&b, &e) in o0.iter().zip(&o1) {
        pi[b] = e;
    }
    pi
}

fn greedy_plan(an: &AnalyticAttack) -> PairingPlan {
    let n = an.tables.n();
    let d = an.tables.dim();
    let rel = |k: usize| bits::complement(k, n);
    let fw0: Vec<f64> = (0..d).map(|b| an.tables.forward(0, b)).collect();
    let fw1: Vec<f64> = (0..d).map(|e| an.tables.forward(1, rel(e))).collect();
    let bw = |a: usize, c: usize| (0..d).map(|b| an.tables.weight(a, b, c)).sum::<f64>();
    let bw0: Vec<f64> = (0..d).map(|c| bw(0, c)).collect();
    let bw1: Vec<f64> = (0..d).map(|e| bw(1, rel(e))).collect();
    PairingPlan { pi1: rank_match(&fw0, &fw1), pi2: rank_match(&bw0, &bw1), strategy: PairingStrategy::GreedyTwoOpt }
}

/// Searches pairing plans. Exhaustive when `2^n ≤ 4`; otherwise the better of
/// the identity plan and a weight-rank matching, improved by 2-opt swaps.
/// Every plan is a valid bound, and the result is never below the identity plan.
pub fn pairing_maximize(an: &AnalyticAttack, strategy: Option<PairingStrategy>) -> Result<(PairingPlan, f64)> {
    let d = an.tables.dim();
    let strategy = strategy.unwrap_or(if d <= 4 { PairingStrategy::Exhaustive } else { PairingStrategy::GreedyTwoOpt });
    let identity = PairingPlan::identity(an.tables.n());
    let id_value = plan_bound(an, &identity)?;
    match strategy {
        PairingStrategy::Identity => Ok((identity, id_value)),
        PairingStrategy::Exhaustive => {
            if d > 4 {
                return Err(Error::Capacity { dim: d, cap: 4 });
            }
            let perms = permutations(d);
            let mut best = (identity, id_value);
            for p1 in &perms {
                for p2 in &perms {
                    let plan = PairingPlan { pi1: p1.clone(), pi2: p2.clone(), strategy: PairingStrategy::Exhaustive };
                    let v = plan_bound(an, &plan)?;
                    if v > best.1 + 1e-15 {
                        best = (plan, v);
                    }
                }
            }
            Ok(best)
        }
        PairingStrategy::GreedyTwoOpt => {
            let greedy = greedy_plan(an);
            let g_value = plan_bound(an, &greedy)?;
            let (mut plan, mut value) = if g_value > id_value {
                (greedy, g_value)
            } else {
                (PairingPlan { strategy: PairingStrategy::GreedyTwoOpt, ..identity }, id_value)
            };
            let mut attempts = 0;
            let mut improved = true;
            'search: while improved {
                improved = false;
                for which in 0..2 {
                    for i in 0..d {
                        for j in i + 1..d {
                            if attempts >= MAX_SWAPS {
                                break 'search;
                            }
                            attempts += 1;
                            let mut cand = plan.clone();
                            if which == 0 {
                                cand.pi1.swap(i, j);
                            } else {
                                cand.pi2.swap(i, j);
                            }
                            let v = plan_bound(an, &cand)?;
                            if v > value + 1e-15 {
                                plan = cand;
                                value = v;
                                improved = true;
                            }
                        }
                    }
                }
            }
            Ok((plan, value))
        }
    }
}

/// `λ* = ½(1 + (1−Q)(1−Q̃)/(2A))` with `A` the `aaa`-family norm.
pub fn depolarizing_lambda_star(params: &DepolarizingParams) -> f64 {
    let cat = eve_catalogue(params);
    (0.5 * (1.0 + cat.cross_overlap / cat.aaa.norm)).min(1.0)
}

/// Closed-form `S(A|E)` lower bound for the depolarizing channel.
/// `GeneralTable` runs the pairing search on the depolarizing tables.
pub fn depolarizing_entropy_lower(params: &DepolarizingParams, mode: BoundMode) -> Result<f64> {
    let a = eve_catalogue(params).aaa.norm;
    let core = 1.0 - binary_entropy(depolarizing_lambda_star(params))?;
    match mode {
        BoundMode::PaperLiteral => Ok(a * core),
        BoundMode::TheoremExact => Ok(2.0 * a * core),
        BoundMode::GeneralTable => {
            let an = AnalyticAttack { tables: depolarizing_tables(params)?, gram: depolarizing_gram(params)? };
            Ok(pairing_maximize(&an, None)?.1)
        }
    }
}

/// Error rate seen by each Bob, `Q/2`.
pub fn qbob(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("Q = {q} outside [0, 1]")));
    }
    Ok(q / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub mode: BoundMode,
    pub q: f64,
    pub s_lower: f64,
    pub leakage: f64,
    /// `s_lower − leakage`; negative values are kept.
    pub r_min: f64,
}

pub fn keyrate_lower(s_lower: f64, q: f64, mode: BoundMode) -> Result<KeyRateReport> {
    let leakage = binary_entropy(qbob(q)?)?;
    Ok(KeyRateReport { mode, q, s_lower, leakage, r_min: s_lower - leakage })
}

pub fn depolarizing_key_rate(params: &DepolarizingParams, mode: BoundMode) -> Result<KeyRateReport> {
    keyrate_lower(depolarizing_entropy_lower(params, mode)?, params.q, mode)
}

/// `max_j H(A|B_j)` from the SIFT joint `p[a][b]`.
pub fn leakage_from_joint(joint_ab: &[Vec<f64>], n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let mut t = vec![vec![0.0; 2]; 2];
            for (a, row) in joint_ab.iter().enumerate() {
                for (b, p) in row.iter().enumerate() {
                    t[a][bits::bit(b, j, n) as usize] += p;
                }
            }
            shannon_conditional_entropy(&t)
        })
        .fold(0.0, f64::max)
}

pub fn leakage_from_tables(an: &AnalyticAttack) -> f64 {
    let d = an.tables.dim();
    let joint: Vec<Vec<f64>> = (0..2).map(|a| (0..d).map(|b| 0.5 * an.tables.forward(a, b)).collect()).collect();
    leakage_from_joint(&joint, an.tables.n())
}

/// `S(A|E)` of `ρ_AE = Σ_a |a⟩⟨a| ⊗ Σ_{b,b'} |u_{abb'}⟩⟨u_{abb'}|` from the Gram
/// matrix of the branch vectors `u`, ordered with `a` most significant.
pub fn conditional_entropy_from_branch_gram(gram: &DMatrix<Amplitude>) -> Result<f64> {
    let k = gram.nrows();
    if k % 2 != 0 || gram.ncols() != k {
        return Err(Error::Domain("branch Gram must be square with an even size".into()));
    }
    let h = k / 2;
    let s_e = entropy_from_gram(gram)?;
    let s_ae = entropy_from_gram(&gram.view((0, 0), (h, h)).into_owned())?
        + entropy_from_gram(&gram.view((h, h), (h, h)).into_owned())?;
    Ok(s_ae - s_e)
}

/// Largest branch Gram the oracle will diagonalize.
pub const ORACLE_MAX_BRANCHES: usize = 2 * 32 * 32;

/// Exact `S(A|E)` for the SIFT-round state. Uses the table form when present,
/// otherwise the Eve branches of the exact dilated round.
pub fn exact_entropy_oracle(attack: &CollectiveAttack) -> Result<f64> {
    let k = 2 * bits::dim(attack.n()) * bits::dim(attack.n());
    if k > ORACLE_MAX_BRANCHES {
        return Err(Error::Capacity { dim: k, cap: ORACLE_MAX_BRANCHES });
    }
    let gram = match attack.analytic() {
        Some(an) => an.gram.weighted(&an.tables).map(|x| Complex64::new(x, 0.0)),
        None => exact_branch_gram(attack)?,
    };
    conditional_entropy_from_branch_gram(&gram)
}

/// Gram of Eve's branch vectors taken from the exact dilated SIFT round.
pub fn exact_branch_gram(attack: &CollectiveAttack) -> Result<DMatrix<Amplitude>> {
    let round = run_round_exact(&ProtocolParams::new(attack.n())?, attack, 1)?;
    Ok(sparse_gram(&round.eve_branches()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{attack_from_tables, depolarizing_attack, identity_attack, ConditionalChannelTable, EveGram};

    fn close(x: f64, y: f64, tol: f64) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }

    #[test]
    fn lambda_examples() {
        close(lambda_term(&PairedTerm::new(0.5, 0.5, 0.5).unwrap()).unwrap(), 1.0, 1e-15);
        close(lambda_term(&PairedTerm::new(0.3, 0.3, 0.0).unwrap()).unwrap(), 0.5, 1e-15);
        close(lambda_term(&PairedTerm::new(0.395, 0.395, 0.36).unwrap()).unwrap(), 0.5 * (1.0 + 0.72 / 0.79), 1e-12);
        close(0.5 * (1.0 + 0.72 / 0.79), 0.9557, 1e-4);
        assert!(lambda_term(&PairedTerm::new(0.0, 0.0, 0.0).unwrap()).is_err());
        assert!(PairedTerm::new(0.25, 0.25, 0.3).is_err());
    }

    #[test]
    fn bound_examples() {
        let one = EntropyBoundInput::new(1.0, vec![PairedTerm::new(0.5, 0.5, 0.5).unwrap()]).unwrap();
        close(theorem1_entropy_bound(&one).unwrap(), 1.0, 1e-15);
        let orth = EntropyBoundInput::new(
            1.0,
            vec![PairedTerm::new(0.25, 0.25, 0.0).unwrap(), PairedTerm::new(0.25, 0.25, 0.0).unwrap()],
        )
        .unwrap();
        close(theorem1_entropy_bound(&orth).unwrap(), 0.0, 1e-15);
        let with_zero = EntropyBoundInput::new(
            1.0,
            vec![PairedTerm::new(0.5, 0.5, 0.5).unwrap(), PairedTerm::new(0.0, 0.0, 0.0).unwrap()],
        )
        .unwrap();
        close(theorem1_entropy_bound(&with_zero).unwrap(), 1.0, 1e-15);
        assert!(EntropyBoundInput::new(1.0, vec![PairedTerm::new(0.2, 0.2, 0.0).unwrap()]).is_err());
        let bad = EntropyBoundInput { normalization: 1.0, terms: vec![PairedTerm { q0: 0.5, q1: 0.5, re_overlap: 0.7 }] };
        assert!(matches!(theorem1_entropy_bound(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn closed_form_examples() {
        let p0 = DepolarizingParams::new(0.0, 0.0, 3).unwrap();
        close(depolarizing_entropy_lower(&p0, BoundMode::PaperLiteral).unwrap(), 0.5, 1e-15);
        close(depolarizing_entropy_lower(&p0, BoundMode::TheoremExact).unwrap(), 1.0, 1e-15);
        let p = DepolarizingParams::new(0.2, 0.2, 3).unwrap();
        close(eve_catalogue(&p).aaa.norm, 0.3403, 1e-4);
        close(depolarizing_lambda_star(&p), 0.9702, 1e-4);
        close(depolarizing_entropy_lower(&p, BoundMode::TheoremExact).unwrap(), 0.549, 0.002);
        close(depolarizing_entropy_lower(&p, BoundMode::GeneralTable).unwrap(), 0.549, 0.002);
        let p = DepolarizingParams::new(0.25, 0.0, 3).unwrap();
        close(depolarizing_entropy_lower(&p, BoundMode::TheoremExact).unwrap(), 0.671, 0.002);
    }

    #[test]
    fn key_rate_examples() {
        assert_eq!(qbob(0.2).unwrap(), 0.1);
        assert_eq!(qbob(1.0).unwrap(), 0.5);
        assert!(qbob(1.5).is_err());
        close(keyrate_lower(1.0, 0.0, BoundMode::TheoremExact).unwrap().r_min, 1.0, 0.0);
        let r = depolarizing_key_rate(&DepolarizingParams::new(0.2, 0.2, 3).unwrap(), BoundMode::TheoremExact).unwrap();
        close(r.leakage, 0.469, 0.001);
        close(r.r_min, 0.080, 0.003);
        assert_eq!(r.r_min, r.s_lower - r.leakage);
        let r = depolarizing_key_rate(&DepolarizingParams::new(0.25, 0.25, 3).unwrap(), BoundMode::PaperLiteral).unwrap();
        assert!(r.r_min < 0.0);
    }

    #[test]
    fn leakage_matches_h_of_half_q() {
        for &(q, qt, n) in &[(0.2, 0.1, 2), (0.0, 0.3, 3), (0.6, 0.6, 1)] {
            let p = DepolarizingParams::new(q, qt, n).unwrap();
            let an = AnalyticAttack { tables: depolarizing_tables(&p).unwrap(), gram: depolarizing_gram(&p).unwrap() };
            close(leakage_from_tables(&an), binary_entropy(q / 2.0).unwrap(), 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        for n in 1..=3 {
            let atk = identity_attack(n).unwrap();
            close(exact_entropy_oracle(&atk).unwrap(), 1.0, 1e-10);
            let dil_only = CollectiveAttack::new(n, atk.dilated().cloned(), None).unwrap();
            close(exact_entropy_oracle(&dil_only).unwrap(), 1.0, 1e-10);
            let an = atk.analytic().unwrap();
            close(pairing_maximize(an, Some(PairingStrategy::Identity)).unwrap().1, 1.0, 1e-12);
        }
        // Eve's vectors are orthogonal across a: she learns Alice's bit.
        let n = 1;
        let tables = ConditionalChannelTable::noiseless(n).unwrap();
        let atk = attack_from_tables(tables, EveGram::orthogonal(n).unwrap()).unwrap();
        close(exact_entropy_oracle(&atk).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn depolarizing_oracle_dominates_bound() {
        let p = DepolarizingParams::new(0.1, 0.2, 2).unwrap();
        let atk = depolarizing_attack(&p).unwrap();
        let via_tables = exact_entropy_oracle(&atk).unwrap();
        let dil_only = CollectiveAttack::new(2, atk.dilated().cloned(), None).unwrap();
        let via_state = exact_entropy_oracle(&dil_only).unwrap();
        close(via_tables, via_state, 1e-10);
        assert!(via_tables >= depolarizing_entropy_lower(&p, BoundMode::TheoremExact).unwrap() - 1e-9);
    }

    #[test]
    fn complement_pairing_is_optimal_for_depolarizing() {
        for n in 1..=2 {
            for &(q, qt) in &[(0.1, 0.2), (0.4, 0.05), (0.7, 0.7)] {
                let p = DepolarizingParams::new(q, qt, n).unwrap();
                let an = AnalyticAttack { tables: depolarizing_tables(&p).unwrap(), gram: depolarizing_gram(&p).unwrap() };
                let (_, best) = pairing_maximize(&an, Some(PairingStrategy::Exhaustive)).unwrap();
                let id = plan_bound(&an, &PairingPlan::identity(n)).unwrap();
                close(best, id, 1e-12);
                close(id, depolarizing_entropy_lower(&p, BoundMode::TheoremExact).unwrap(), 1e-12);
            }
        }
    }

    #[test]
    fn plan_validation() {
        assert!(PairingPlan::new(vec![0, 0], vec![0, 1], PairingStrategy::Identity).is_err());
        assert!(PairingPlan::new(vec![1, 0], vec![0, 1], PairingStrategy::Identity).is_ok());
        assert_eq!(permutations(3).len(), 6);
        let plan = PairingPlan::identity(2);
        assert_eq!(plan.partner(2, 0, 1), (3, 2));
    }

    #[test]
    fn mode_strings() {
        for m in [BoundMode::PaperLiteral, BoundMode::TheoremExact, BoundMode::GeneralTable] {
            assert_eq!(m.as_str().parse::<BoundMode>().unwrap(), m);
        }
        assert!("other".parse::<BoundMode>().is_err());
    }
}
