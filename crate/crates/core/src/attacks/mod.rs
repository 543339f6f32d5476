//! Collective attacks: conditional-probability tables with Eve's Gram data,
//! exact dilations on an explicit environment, and the depolarizing channel.

mod depolarizing;
mod random;
mod table_file;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bits;
use crate::qmath::{hermitian_eigenvalues, real_symmetric_eigenpairs, Label, RegisterLayout, StateVector, Unitary};
use crate::{Error, Result};

pub use depolarizing::{
    depolarizing_attack, depolarizing_backward_prob, depolarizing_forward_prob,
    depolarizing_gram, depolarizing_tables, eve_catalogue, joint_az_analytic, p_ghz_analytic,
    DepolarizingParams, EveVectorCatalogue, FamilyNorm, JointAzMode,
};
pub use random::{random_table_attack, RandomTableAttack};
pub use table_file::{parse_attack_table, write_attack_table};

/// Tolerance on the normalization of each conditional distribution.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted in a weighted Gram matrix.
pub const GRAM_PSD_TOL: f64 = 1e-9;
/// Largest `n` for which the `2·4^n` Eve index set is materialized.
pub const MAX_TABLE_BOBS: usize = 5;

/// Index of Eve's branch `(a, b, b')` in the `2·4^n` index set.
pub fn eve_index(n: usize, a: usize, b: usize, b_prime: usize) -> usize {
    let d = bits::dim(n);
    (a * d + b) * d + b_prime
}

/// Forward `p(b|a)` and backward `p'(b'|a,b)` channel statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalChannelTable {
    n: usize,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<Vec<f64>>>,
}

impl ConditionalChannelTable {
    /// `forward[a][b]`, `backward[a][b][b']`.
    pub fn new(n: usize, forward: Vec<Vec<f64>>, backward: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_BOBS {
            return Err(Error::Domain(format!("table form supports 1..={MAX_TABLE_BOBS} Bobs, got {n}")));
        }
        let d = bits::dim(n);
        let shape_ok = forward.len() == 2
            && backward.len() == 2
            && forward.iter().all(|r| r.len() == d)
            && backward.iter().all(|m| m.len() == d && m.iter().all(|r| r.len() == d));
        if !shape_ok {
            return Err(Error::Validation(format!("channel tables must be 2x{d} and 2x{d}x{d}")));
        }
        let check = |row: &[f64], what: String| -> Result<()> {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::Validation(format!("{what} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Validation(format!("{what} sums to {s}, not 1")));
            }
            Ok(())
        };
        for a in 0..2 {
            check(&forward[a], format!("p(·|{a})"))?;
            for b in 0..d {
                check(&backward[a][b], format!("p'(·|{a},{b})"))?;
            }
        }
        Ok(Self { n, forward, backward })
    }

    /// Noiseless channels: `p(b|a) = δ_{b,a⃗}`, `p'(b'|ab) = δ_{b',b}`.
    pub fn noiseless(n: usize) -> Result<Self> {
        let d = bits::dim(n);
        let forward = (0..2)
            .map(|a| (0..d).map(|b| f64::from(u8::from(b == bits::all(a as u8, n)))).collect())
            .collect();
        let backward = (0..2)
            .map(|_| {
                (0..d).map(|b| (0..d).map(|bp| f64::from(u8::from(bp == b))).collect()).collect()
            })
            .collect();
        Self::new(n, forward, backward)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        bits::dim(self.n)
    }

    pub fn forward(&self, a: usize, b: usize) -> f64 {
        self.forward[a][b]
    }

    pub fn backward(&self, a: usize, b: usize, b_prime: usize) -> f64 {
        self.backward[a][b][b_prime]
    }

    /// `p(b|a)·p'(b'|ab)`, summing to 1 for each `a`.
    pub fn weight(&self, a: usize, b: usize, b_prime: usize) -> f64 {
        self.forward[a][b] * self.backward[a][b][b_prime]
    }

    /// All `2·4^n` weights `½·p(b|a)·p'(b'|ab)` in [`eve_index`] order; they sum to 1.
    pub fn global_weights(&self) -> Vec<f64> {
        let d = self.dim();
        let mut w = Vec::with_capacity(2 * d * d);
        for a in 0..2 {
            for b in 0..d {
                for bp in 0..d {
                    w.push(0.5 * self.weight(a, b, bp));
                }
            }
        }
        w
    }
}

/// Real parts of the inner products among Eve's normalized branch vectors
/// `|E_{abb'}⟩`, indexed by [`eve_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct EveGram {
    n: usize,
    re: DMatrix<f64>,
}

impl EveGram {
    pub fn new(n: usize, re: DMatrix<f64>) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_BOBS {
            return Err(Error::Domain(format!("Gram data supports 1..={MAX_TABLE_BOBS} Bobs, got {n}")));
        }
        let k = 2 * bits::dim(n) * bits::dim(n);
        if re.nrows() != k || re.ncols() != k {
            return Err(Error::Validation(format!("Gram must be {k}x{k}")));
        }
        for i in 0..k {
            if (re[(i, i)] - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Validation(format!("Gram diagonal entry {i} is {}", re[(i, i)])));
            }
            for j in 0..i {
                if (re[(i, j)] - re[(j, i)]).abs() > STOCHASTIC_TOL || !re[(i, j)].is_finite() {
                    return Err(Error::Validation(format!("Gram is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, re })
    }

    /// Every Eve vector identical.
    pub fn all_ones(n: usize) -> Result<Self> {
        let k = 2 * bits::dim(n) * bits::dim(n);
        Self::new(n, DMatrix::from_element(k, k, 1.0))
    }

    /// Every Eve vector orthogonal to every other.
    pub fn orthogonal(n: usize) -> Result<Self> {
        let k = 2 * bits::dim(n) * bits::dim(n);
        Self::new(n, DMatrix::identity(k, k))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.re[(i, j)]
    }

    /// `√(w_i w_j)·G_ij` with the global weights of `tables`.
    pub fn weighted(&self, tables: &ConditionalChannelTable) -> DMatrix<f64> {
        let w = tables.global_weights();
        DMatrix::from_fn(self.re.nrows(), self.re.ncols(), |i, j| {
            (w[i] * w[j]).sqrt() * self.re[(i, j)]
        })
    }
}

/// Table-form attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticAttack {
    pub tables: ConditionalChannelTable,
    pub gram: EveGram,
}

impl AnalyticAttack {
    /// `⟨Ẽ_{ac}|Ẽ_{a2 c2}⟩` for the reflection branch vectors
    /// `|Ẽ_{ac}⟩ = Σ_b √(p(b|a) p'(c|ab)) |E_{abc}⟩`.
    pub fn reflection_overlap(&self, a: usize, c: usize, a2: usize, c2: usize) -> f64 {
        let n = self.tables.n();
        let d = self.tables.dim();
        let mut acc = 0.0;
        for b in 0..d {
            let x = self.tables.weight(a, b, c);
            if x == 0.0 {
                continue;
            }
            for b2 in 0..d {
                let y = self.tables.weight(a2, b2, c2);
                if y == 0.0 {
                    continue;
                }
                acc += (x * y).sqrt() * self.gram.get(eve_index(n, a, b, c), eve_index(n, a2, b2, c2));
            }
        }
        acc
    }

    /// GHZ-test pass probability `¼‖Ẽ_{0,0⃗} + Ẽ_{1,1⃗}‖²`.
    pub fn p_ghz(&self) -> f64 {
        let n = self.tables.n();
        let (z, o) = (bits::all(0, n), bits::all(1, n));
        0.25 * (self.reflection_overlap(0, z, 0, z)
            + self.reflection_overlap(1, o, 1, o)
            + 2.0 * self.reflection_overlap(0, z, 1, o))
    }

    /// Joint Z-measurement `p(a,c)` of Alice's qubit and the returned string
    /// in a SIFT round.
    pub fn sift_joint_ac(&self) -> Vec<Vec<f64>> {
        let d = self.tables.dim();
        (0..2)
            .map(|a| {
                (0..d)
                    .map(|c| (0..d).map(|b| 0.5 * self.tables.weight(a, b, c)).sum())
                    .collect()
            })
            .collect()
    }

    /// `p_B(b) = ½(p(b|0) + p(b|1))`.
    pub fn bob_marginal(&self) -> Vec<f64> {
        (0..self.tables.dim())
            .map(|b| 0.5 * (self.tables.forward(0, b) + self.tables.forward(1, b)))
            .collect()
    }

    /// Eve vectors `√w_k |E_k⟩` realized in the real span of the weighted Gram.
    /// Row `k` is the vector of branch `k`; the column count is the rank.
    pub fn purifying_vectors(&self) -> Result<DMatrix<f64>> {
        let w = self.gram.weighted(&self.tables);
        let (values, vectors) = real_symmetric_eigenpairs(&w);
        let min = min_eigenvalue(&values);
        if !(min >= -GRAM_PSD_TOL) {
            return Err(Error::Validation(format!(
                "weighted Gram is not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
        let keep: Vec<usize> =
            (0..values.len()).filter(|&j| values[j] > 1e-14).collect();
        let k = w.nrows();
        let cols = keep.len().max(1);
        Ok(DMatrix::from_fn(k, cols, |i, c| match keep.get(c) {
            Some(&j) => vectors[(i, j)] * values[j].sqrt(),
            None => 0.0,
        }))
    }
}

/// A unitary acting on `T` plus some environment registers.
#[derive(Debug, Clone)]
pub struct EnvUnitary {
    pub unitary: Unitary,
    /// Registers the unitary acts on; must include [`Label::T`].
    pub targets: Vec<Label>,
}

/// Dilated attack: forward and backward unitaries on `T ⊗ env` with a fixed
/// initial environment state.
#[derive(Debug, Clone)]
pub struct DilatedAttack {
    pub env_layout: RegisterLayout,
    pub env_state: StateVector,
    pub forward: EnvUnitary,
    pub backward: EnvUnitary,
}

impl DilatedAttack {
    pub fn new(
        env_layout: RegisterLayout,
        env_state: StateVector,
        forward: EnvUnitary,
        backward: EnvUnitary,
    ) -> Result<Self> {
        if env_state.dim() != env_layout.dim() || !env_state.is_normalized() {
            return Err(Error::Validation("environment state must be a unit vector on its layout".into()));
        }
        for (name, u) in [("forward", &forward), ("backward", &backward)] {
            if u.targets.iter().any(|&l| l != Label::T && !env_layout.contains(l)) {
                return Err(Error::Layout(format!("{name} unitary targets a non-environment register")));
            }
        }
        Ok(Self { env_layout, env_state, forward, backward })
    }
}

/// A one-round collective attack in dilated form, table form, or both.
#[derive(Debug, Clone)]
pub struct CollectiveAttack {
    n: usize,
    dilated: Option<DilatedAttack>,
    analytic: Option<AnalyticAttack>,
}

impl CollectiveAttack {
    pub fn new(n: usize, dilated: Option<DilatedAttack>, analytic: Option<AnalyticAttack>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("at least one Bob is required".into()));
        }
        if dilated.is_none() && analytic.is_none() {
            return Err(Error::Domain("attack needs a dilated or table form".into()));
        }
        if let Some(an) = &analytic {
            if an.tables.n() != n || an.gram.n() != n {
                return Err(Error::Domain("table form has the wrong number of Bobs".into()));
            }
        }
        Ok(Self { n, dilated, analytic })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dilated(&self) -> Option<&DilatedAttack> {
        self.dilated.as_ref()
    }

    pub fn analytic(&self) -> Option<&AnalyticAttack> {
        self.analytic.as_ref()
    }
}

/// The noiseless attack: Eve does nothing.
pub fn identity_attack(n: usize) -> Result<CollectiveAttack> {
    let env_layout = RegisterLayout::new(vec![(Label::E1, 1)])?;
    let env_state = StateVector::basis(1, 0)?;
    let id = |targets: Vec<Label>| EnvUnitary { unitary: Unitary::identity(bits::dim(n)), targets };
    let dilated = DilatedAttack::new(env_layout, env_state, id(vec![Label::T]), id(vec![Label::T]))?;
    let analytic = (n <= MAX_TABLE_BOBS)
        .then(|| -> Result<AnalyticAttack> {
            Ok(AnalyticAttack { tables: ConditionalChannelTable::noiseless(n)?, gram: EveGram::all_ones(n)? })
        })
        .transpose()?;
    CollectiveAttack::new(n, Some(dilated), analytic)
}

/// Smallest eigenvalue, or NaN if the solver produced a non-finite value.
fn min_eigenvalue(values: &[f64]) -> f64 {
    if values.iter().any(|x| !x.is_finite()) {
        return f64::NAN;
    }
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Table-form attack; checks that the weighted Gram is PSD.
pub fn attack_from_tables(tables: ConditionalChannelTable, gram: EveGram) -> Result<CollectiveAttack> {
    if tables.n() != gram.n() {
        return Err(Error::Validation("tables and Gram disagree on the number of Bobs".into()));
    }
    let w = gram.weighted(&tables);
    let min = min_eigenvalue(&hermitian_eigenvalues(&w.map(|x| Complex64::new(x, 0.0))));
    if !(min >= -GRAM_PSD_TOL) {
        return Err(Error::Validation(format!(
            "weighted Gram is not positive semidefinite (eigenvalue {min:.3e})"
        )));
    }
    let n = tables.n();
    CollectiveAttack::new(n, None, Some(AnalyticAttack { tables, gram }))
}
