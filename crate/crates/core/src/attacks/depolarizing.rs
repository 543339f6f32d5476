//! The depolarizing channel `ρ ↦ (1-Q)ρ + (Q/d)·I` on the whole transferring
//! register (`d = 2^n`), applied once on the way to the Bobs (`Q`) and once on
//! the way back (`Q̃`) with a fresh environment.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    AnalyticAttack, CollectiveAttack, ConditionalChannelTable, DilatedAttack, EnvUnitary, EveGram,
    MAX_TABLE_BOBS,
};
use crate::bits;
use crate::qmath::{Label, RegisterLayout, StateVector, Unitary, MAX_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingParams {
    /// Forward depolarization.
    pub q: f64,
    /// Backward depolarization.
    pub q_tilde: f64,
    pub n: usize,
}

impl DepolarizingParams {
    pub fn new(q: f64, q_tilde: f64, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&q_tilde) {
            return Err(Error::Domain(format!("depolarization ({q}, {q_tilde}) outside [0, 1]")));
        }
        if n == 0 || n > bits::MAX_BOBS {
            return Err(Error::Domain(format!("number of Bobs {n} outside 1..={}", bits::MAX_BOBS)));
        }
        Ok(Self { q, q_tilde, n })
    }

    /// `d = 2^n` as a float.
    pub fn d(&self) -> f64 {
        (self.n as f64).exp2()
    }

    /// Composite depolarization of the reflected path, `Q + Q̃ - Q·Q̃`.
    pub fn q_ghz(&self) -> f64 {
        self.q + self.q_tilde - self.q * self.q_tilde
    }
}

/// `p_Q(b|a⃗)`.
pub fn depolarizing_forward_prob(b: usize, a: u8, params: &DepolarizingParams) -> f64 {
    let d = params.d();
    if b == bits::all(a, params.n) {
        1.0 - params.q * (d - 1.0) / d
    } else {
        params.q / d
    }
}

/// `p_Q̃(b'|b)`.
pub fn depolarizing_backward_prob(b_prime: usize, b: usize, params: &DepolarizingParams) -> f64 {
    let d = params.d();
    if b_prime == b {
        1.0 - params.q_tilde * (d - 1.0) / d
    } else {
        params.q_tilde / d
    }
}

/// GHZ-test pass probability `1 - Q_GHZ·(1 - 2^{-(n+1)})`.
pub fn p_ghz_analytic(params: &DepolarizingParams) -> f64 {
    1.0 - params.q_ghz() * (1.0 - 1.0 / (2.0 * params.d()))
}

/// Which closed form to use for Alice's joint `(a, c)` Z statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointAzMode {
    /// `Q̃/2^{n+1} + δ·(1-Q̃)/2`, depending on the backward channel only.
    PaperLiteral,
    /// `Q_GHZ/2^{n+1} + δ·(1-Q_GHZ)/2`, consistent with the exact dilation.
    Corrected,
}

/// Joint probability that Alice's qubit reads `a` and the returned string reads `c`.
pub fn joint_az_analytic(a: u8, c: usize, params: &DepolarizingParams, mode: JointAzMode) -> f64 {
    let noise = match mode {
        JointAzMode::PaperLiteral => params.q_tilde,
        JointAzMode::Corrected => params.q_ghz(),
    };
    let delta = if c == bits::all(a, params.n) { 1.0 } else { 0.0 };
    noise / (2.0 * params.d()) + delta * (1.0 - noise) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyNorm {
    /// Squared norm of each vector, global convention (all masses sum to 1).
    pub norm: f64,
    pub multiplicity: f64,
}

/// Squared norms of Eve's branch vectors `|E_{abc}⟩` grouped by family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveVectorCatalogue {
    /// `b = c = a⃗`
    pub aaa: FamilyNorm,
    /// `b = a⃗ ≠ c`
    pub aac: FamilyNorm,
    /// `a⃗ ≠ b = c`
    pub abb: FamilyNorm,
    /// `a⃗ ≠ b ≠ c`
    pub abc: FamilyNorm,
    /// `⟨E_{0,0⃗,0⃗}|E_{1,1⃗,1⃗}⟩`, the only nonzero overlap.
    pub cross_overlap: f64,
}

impl EveVectorCatalogue {
    pub fn families(&self) -> [FamilyNorm; 4] {
        [self.aaa, self.aac, self.abb, self.abc]
    }

    /// `Σ multiplicity × norm`; equals 1 for a normalized state.
    pub fn total_mass(&self) -> f64 {
        self.families().iter().map(|f| f.norm * f.multiplicity).sum()
    }

    /// Family norm for branch `(a, b, c)`.
    pub fn norm_of(&self, a: u8, b: usize, c: usize, n: usize) -> f64 {
        let aa = bits::all(a, n);
        match (b == aa, c == b) {
            (true, true) => self.aaa.norm,
            (true, false) => self.aac.norm,
            (false, true) => self.abb.norm,
            (false, false) => self.abc.norm,
        }
    }
}

pub fn eve_catalogue(params: &DepolarizingParams) -> EveVectorCatalogue {
    let (q, qt) = (params.q, params.q_tilde);
    let d = params.d();
    let two_d = 2.0 * d;
    let two_d2 = 2.0 * d * d;
    let mixed = q * qt / two_d2;
    EveVectorCatalogue {
        aaa: FamilyNorm {
            norm: (1.0 - q) * (1.0 - qt) / 2.0 + (q * (1.0 - qt) + (1.0 - q) * qt) / two_d + mixed,
            multiplicity: 2.0,
        },
        aac: FamilyNorm { norm: (1.0 - q) * qt / two_d + mixed, multiplicity: 2.0 * (d - 1.0) },
        abb: FamilyNorm { norm: q * (1.0 - qt) / two_d + mixed, multiplicity: 2.0 * (d - 1.0) },
        abc: FamilyNorm { norm: mixed, multiplicity: 2.0 * (d - 1.0) * (d - 1.0) },
        cross_overlap: (1.0 - q) * (1.0 - qt) / 2.0,
    }
}

pub fn depolarizing_tables(params: &DepolarizingParams) -> Result<ConditionalChannelTable> {
    let n = params.n;
    if n > MAX_TABLE_BOBS {
        return Err(Error::Capacity { dim: 2 * bits::dim(n) * bits::dim(n), cap: 2 << (2 * MAX_TABLE_BOBS) });
    }
    let d = bits::dim(n);
    let forward = (0..2u8).map(|a| (0..d).map(|b| depolarizing_forward_prob(b, a, params)).collect()).collect();
    let backward = (0..2)
        .map(|_| (0..d).map(|b| (0..d).map(|bp| depolarizing_backward_prob(bp, b, params)).collect()).collect())
        .collect();
    ConditionalChannelTable::new(n, forward, backward)
}

/// Normalized Gram: orthonormal except `(0,0⃗,0⃗)`/`(1,1⃗,1⃗)`.
pub fn depolarizing_gram(params: &DepolarizingParams) -> Result<EveGram> {
    let n = params.n;
    if n > MAX_TABLE_BOBS {
        return Err(Error::Capacity { dim: 2 * bits::dim(n) * bits::dim(n), cap: 2 << (2 * MAX_TABLE_BOBS) });
    }
    let cat = eve_catalogue(params);
    let k = 2 * bits::dim(n) * bits::dim(n);
    let mut g = DMatrix::<f64>::identity(k, k);
    let (i, j) = (super::eve_index(n, 0, 0, 0), super::eve_index(n, 1, bits::all(1, n), bits::all(1, n)));
    let overlap = cat.cross_overlap / cat.aaa.norm;
    g[(i, j)] = overlap;
    g[(j, i)] = overlap;
    EveGram::new(n, g)
}

/// Environment `(Σ_i |i⟩|i⟩/√d) ⊗ (√(1-Q)|0⟩ + √Q|1⟩)` on `(E1, E2, E3)`.
fn environment_state(q: f64, d: usize) -> Result<StateVector> {
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d * 2];
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        amps[(i * d + i) * 2] = Complex64::new(s * (1.0 - q).sqrt(), 0.0);
        amps[(i * d + i) * 2 + 1] = Complex64::new(s * q.sqrt(), 0.0);
    }
    StateVector::new(amps)
}

/// Swap of `T` and `E1` controlled by `E3 = 1`, on registers `(T, E1, E3)`.
fn controlled_swap(d: usize) -> Result<Unitary> {
    let idx = |t: usize, e: usize, c: usize| (t * d + e) * 2 + c;
    let mut perm = vec![0; d * d * 2];
    for t in 0..d {
        for e in 0..d {
            perm[idx(t, e, 0)] = idx(t, e, 0);
            perm[idx(t, e, 1)] = idx(e, t, 1);
        }
    }
    Unitary::from_permutation(&perm)
}

/// Exact double dilation, plus the table form when `n` is small enough.
pub fn depolarizing_attack(params: &DepolarizingParams) -> Result<CollectiveAttack> {
    let n = params.n;
    // A, T, B and both environments: 2·d²·(2d²)².
    let exponent = 6 * n + 3;
    if exponent > MAX_DIM.trailing_zeros() as usize {
        return Err(Error::Capacity { dim: usize::MAX.min(1usize << exponent.min(63)), cap: MAX_DIM });
    }
    let d = bits::dim(n);
    let env_layout = RegisterLayout::new(vec![
        (Label::E1, d),
        (Label::E2, d),
        (Label::E3, 2),
        (Label::Et1, d),
        (Label::Et2, d),
        (Label::Et3, 2),
    ])?;
    let env_state = environment_state(params.q, d)?.tensor(&environment_state(params.q_tilde, d)?)?;
    let swap = controlled_swap(d)?;
    let dilated = DilatedAttack::new(
        env_layout,
        env_state,
        EnvUnitary { unitary: swap.clone(), targets: vec![Label::T, Label::E1, Label::E3] },
        EnvUnitary { unitary: swap, targets: vec![Label::T, Label::Et1, Label::Et3] },
    )?;
    let analytic = AnalyticAttack { tables: depolarizing_tables(params)?, gram: depolarizing_gram(params)? };
    CollectiveAttack::new(n, Some(dilated), Some(analytic))
}
