//! One protocol round as an exact state evolution, plus the sampled
//! multi-round session.
//!
//! A round runs: GHZ preparation on `A ⊗ T`, Eve's forward unitary, the Bobs'
//! operation (reflect for `Θ = 0`, copy into memory `B` for `Θ = 1`), Eve's
//! backward unitary, then Alice's measurement. `Θ` is a classical bit shared by
//! every party, so it selects the branch instead of living in a register.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::attacks::{eve_index, AnalyticAttack, CollectiveAttack, DilatedAttack};
use crate::bits;
use crate::estimation::TallyCounts;
use crate::qmath::{
    apply_on_subsystems, basis_marginal, project_on_subsystems, Amplitude, Label, RegisterLayout,
    StateVector, Unitary,
};
use crate::{Error, Result};

/// Protocol configuration. Transmission is lossless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    pub n: usize,
    /// Use the exact state-vector engine (otherwise only table-form statistics).
    pub exact_sim: bool,
}

impl ProtocolParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > bits::MAX_BOBS {
            return Err(Error::Domain(format!("number of Bobs {n} outside 1..={}", bits::MAX_BOBS)));
        }
        Ok(Self { n, exact_sim: true })
    }
}

/// `(|0,y⟩ + (-1)^x |1,ȳ⟩)/√2` on `num_qubits` qubits, qubit 0 most significant.
pub fn prepare_ghz(num_qubits: usize, x: u8, y: &[u8]) -> Result<StateVector> {
    if num_qubits < 2 {
        return Err(Error::Domain("a GHZ state needs at least two qubits".into()));
    }
    let n = num_qubits - 1;
    if y.len() != n || y.iter().any(|&b| b > 1) || x > 1 {
        return Err(Error::Domain(format!("GHZ label must be one bit and {n} bits")));
    }
    if num_qubits > crate::qmath::MAX_DIM.trailing_zeros() as usize {
        return Err(Error::Capacity { dim: usize::MAX, cap: crate::qmath::MAX_DIM });
    }
    let y_idx = y.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let d = bits::dim(n);
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * d];
    amps[y_idx] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let sign = if x == 0 { 1.0 } else { -1.0 };
    amps[d + bits::complement(y_idx, n)] = Complex64::new(sign * FRAC_1_SQRT_2, 0.0);
    StateVector::new(amps)
}

/// The Bobs' operation on `T ⊗ B`: identity when reflecting (`Θ = 0`); when
/// measuring (`Θ = 1`), for every `b` swaps `|0…0⟩_B ↔ |b⟩_B` conditioned on
/// `|b⟩_T`, which copies `T` into the blank memory.
pub fn bob_operation(theta: u8, n: usize) -> Result<Unitary> {
    let d = bits::dim(n);
    if d * d > crate::qmath::MAX_DIM {
        return Err(Error::Capacity { dim: d * d, cap: crate::qmath::MAX_DIM });
    }
    if theta == 0 {
        return Ok(Unitary::identity(d * d));
    }
    let perm: Vec<usize> = (0..d * d)
        .map(|idx| {
            let (t, m) = (idx / d, idx % d);
            let m2 = if m == 0 {
                t
            } else if m == t {
                0
            } else {
                m
            };
            t * d + m2
        })
        .collect();
    Unitary::from_permutation(&perm)
}

fn ghz_projector(n: usize) -> DMatrix<Amplitude> {
    let d = bits::dim(n);
    let mut p = DMatrix::from_element(2 * d, 2 * d, Complex64::new(0.0, 0.0));
    for &i in &[0, 2 * d - 1] {
        for &j in &[0, 2 * d - 1] {
            p[(i, j)] = Complex64::new(0.5, 0.0);
        }
    }
    p
}

/// Projects `A ⊗ T` onto `|g(0, 0⃗)⟩`. Returns the pass probability and the
/// post-test state (`None` when the pass probability vanishes).
pub fn alice_ghz_projection(
    state: &StateVector,
    layout: &RegisterLayout,
) -> Result<(f64, Option<StateVector>)> {
    let n = layout.dim_of(Label::T)?.trailing_zeros() as usize;
    let r = project_on_subsystems(state, layout, &[Label::A, Label::T], &ghz_projector(n))?;
    Ok((r.prob, r.post))
}

/// Alice's Z measurement of `A` and `T`: `p[a][c]`.
pub fn alice_z_measurement(state: &StateVector, layout: &RegisterLayout) -> Result<Vec<Vec<f64>>> {
    let d = layout.dim_of(Label::T)?;
    let flat = basis_marginal(state, layout, &[Label::A, Label::T])?;
    Ok(flat.chunks(d).map(<[f64]>::to_vec).collect())
}

/// Statistics of one exact round.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundStats {
    Ctrl {
        p_ghz: f64,
        /// Z statistics `p[a][c]` if Alice measures instead of projecting.
        joint_ac: Vec<Vec<f64>>,
    },
    Sift {
        /// `p(a, b, c)` over Alice's qubit, the Bobs' memory and the returned
        /// string, flat index `(a·d + b)·d + c`.
        joint_abc: Vec<f64>,
    },
}

/// State just before Alice's measurement, with its layout.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub theta: u8,
    pub n: usize,
    pub layout: RegisterLayout,
    pub state: StateVector,
    pub stats: RoundStats,
}

impl RoundState {
    /// Eve's unnormalized branch vectors `⟨a|_A ⟨b|_B ⟨c|_T |ψ⟩` in
    /// [`eve_index`] order, as sparse `(index, amplitude)` lists.
    pub fn eve_branches(&self) -> Result<Vec<Vec<(usize, Amplitude)>>> {
        let d = bits::dim(self.n);
        let strides = self.layout.strides();
        let (pa, pb, pt) = (
            self.layout.position(Label::A)?,
            self.layout.position(Label::B)?,
            self.layout.position(Label::T)?,
        );
        let (_, env_offsets) = self.layout.split_offsets(&[Label::A, Label::B, Label::T])?;
        let amps = self.state.amps();
        let mut out = vec![Vec::new(); 2 * d * d];
        for a in 0..2 {
            for b in 0..d {
                for c in 0..d {
                    let base = a * strides[pa] + b * strides[pb] + c * strides[pt];
                    out[eve_index(self.n, a, b, c)] = env_offsets
                        .iter()
                        .enumerate()
                        .filter_map(|(k, &r)| {
                            let z = amps[base + r];
                            (z.norm_sqr() > 0.0).then_some((k, z))
                        })
                        .collect();
                }
            }
        }
        Ok(out)
    }
}

/// Inner product of two sparse vectors with sorted indices.
pub fn sparse_inner(x: &[(usize, Amplitude)], y: &[(usize, Amplitude)]) -> Amplitude {
    let (mut i, mut j) = (0, 0);
    let mut acc = Complex64::new(0.0, 0.0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += x[i].1.conj() * y[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Gram matrix of sparse vectors.
pub fn sparse_gram(vectors: &[Vec<(usize, Amplitude)>]) -> DMatrix<Amplitude> {
    let k = vectors.len();
    let rows: Vec<Vec<Amplitude>> = (0..k)
        .into_par_iter()
        .map(|i| (0..k).map(|j| if j < i { Complex64::new(0.0, 0.0) } else { sparse_inner(&vectors[i], &vectors[j]) }).collect())
        .collect();
    DMatrix::from_fn(k, k, |i, j| if j >= i { rows[i][j] } else { rows[j][i].conj() })
}

fn round_stats(theta: u8, n: usize, layout: &RegisterLayout, state: &StateVector) -> Result<RoundStats> {
    if theta == 0 {
        let (p_ghz, _) = alice_ghz_projection(state, layout)?;
        Ok(RoundStats::Ctrl { p_ghz, joint_ac: alice_z_measurement(state, layout)? })
    } else {
        let _ = n;
        Ok(RoundStats::Sift { joint_abc: basis_marginal(state, layout, &[Label::A, Label::B, Label::T])? })
    }
}

fn evolve_dilated(n: usize, dil: &DilatedAttack, theta: u8) -> Result<(RegisterLayout, StateVector)> {
    let d = bits::dim(n);
    let sys = RegisterLayout::new(vec![(Label::A, 2), (Label::T, d), (Label::B, d)])?;
    let layout = sys.concat(&dil.env_layout)?;
    let ghz = prepare_ghz(n + 1, 0, &vec![0; n])?;
    let psi = ghz.tensor(&StateVector::basis(d, 0)?)?.tensor(&dil.env_state)?;
    let psi = apply_on_subsystems(&dil.forward.unitary, &psi, &layout, &dil.forward.targets)?;
    let psi = if theta == 1 {
        apply_on_subsystems(&bob_operation(1, n)?, &psi, &layout, &[Label::T, Label::B])?
    } else {
        psi
    };
    let psi = apply_on_subsystems(&dil.backward.unitary, &psi, &layout, &dil.backward.targets)?;
    Ok((layout, psi))
}

/// Norm slack when building a round state from table-form data.
pub const TABLE_NORM_TOL: f64 = 1e-9;

/// Builds the pre-measurement state directly from table-form data,
/// `Σ_{a,b,c} |a⟩_A |c⟩_T |b∧Θ⟩_B ⊗ √(½ p(b|a) p'(c|ab)) |E_{abc}⟩`,
/// with Eve's vectors realized in the span of the weighted Gram.
pub fn evolve_tables(an: &AnalyticAttack, theta: u8) -> Result<(RegisterLayout, StateVector)> {
    let n = an.tables.n();
    let d = bits::dim(n);
    let vecs = an.purifying_vectors()?;
    let r = vecs.ncols();
    let layout = RegisterLayout::new(vec![(Label::A, 2), (Label::T, d), (Label::B, d), (Label::E1, r)])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); layout.dim()];
    for a in 0..2 {
        for b in 0..d {
            let mem = if theta == 1 { b } else { 0 };
            for c in 0..d {
                let k = eve_index(n, a, b, c);
                let base = layout.flat_index(&[a, c, mem, 0])?;
                for e in 0..r {
                    amps[base + e] += Complex64::new(vecs[(k, e)], 0.0);
                }
            }
        }
    }
    let state = StateVector::new(amps)?;
    // Branches with different b interfere when the Bobs reflect; the table
    // data only describes a unitary attack if that interference cancels.
    if (state.norm_sqr() - 1.0).abs() > TABLE_NORM_TOL {
        return Err(Error::Validation(format!(
            "table-form attack is not realizable by unitaries: reflection-round state has norm² {:.6}",
            state.norm_sqr()
        )));
    }
    Ok((layout, state))
}

/// Runs one round exactly: the dilated form when the attack has one,
/// otherwise the table form.
pub fn run_round_exact(params: &ProtocolParams, attack: &CollectiveAttack, theta: u8) -> Result<RoundState> {
    if attack.n() != params.n {
        return Err(Error::Domain(format!("attack is for {} Bobs, protocol has {}", attack.n(), params.n)));
    }
    if theta > 1 {
        return Err(Error::Domain("Θ must be a bit".into()));
    }
    let n = params.n;
    let (layout, state) = match (attack.dilated(), attack.analytic()) {
        (Some(dil), _) => evolve_dilated(n, dil, theta)?,
        (None, Some(an)) => evolve_tables(an, theta)?,
        (None, None) => unreachable!("attacks always carry one form"),
    };
    let stats = round_stats(theta, n, &layout, &state)?;
    Ok(RoundState { theta, n, layout, state, stats })
}

/// Everything Alice and the Bobs can observe, as exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedStatistics {
    pub n: usize,
    pub p_ghz: f64,
    /// Z statistics `p[a][c]` in a CTRL round (Bobs reflect).
    pub ctrl_joint_ac: Vec<Vec<f64>>,
    /// `p[a][c]` in a SIFT round.
    pub sift_joint_ac: Vec<Vec<f64>>,
    /// `p[a][b]` of Alice's bit and the Bobs' string in a SIFT round.
    pub sift_joint_ab: Vec<Vec<f64>>,
    pub p_a: [f64; 2],
    pub p_b: Vec<f64>,
}

impl ObservedStatistics {
    /// Branch norms `q_{ac} = ‖Ẽ_{ac}‖² = 2·p_ctrl(a, c)`.
    pub fn branch_norms(&self) -> Vec<Vec<f64>> {
        self.ctrl_joint_ac.iter().map(|r| r.iter().map(|p| 2.0 * p).collect()).collect()
    }

    /// Forward conditionals `p(b|a)`.
    pub fn forward_conditionals(&self) -> Vec<Vec<f64>> {
        self.sift_joint_ab
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|p| p / s).collect()
            })
            .collect()
    }

    /// Probability that Bob `j` disagrees with Alice in a SIFT round.
    pub fn bob_error(&self, j: usize) -> f64 {
        let d = bits::dim(self.n);
        (0..2)
            .map(|a| (0..d).filter(|&b| bits::bit(b, j, self.n) as usize != a).map(|b| self.sift_joint_ab[a][b]).sum::<f64>())
            .sum()
    }

    pub fn from_rounds(ctrl: &RoundState, sift: &RoundState) -> Result<Self> {
        let n = ctrl.n;
        let d = bits::dim(n);
        let (RoundStats::Ctrl { p_ghz, joint_ac }, RoundStats::Sift { joint_abc }) = (&ctrl.stats, &sift.stats) else {
            return Err(Error::Domain("expected a CTRL and a SIFT round".into()));
        };
        let mut sift_ac = vec![vec![0.0; d]; 2];
        let mut sift_ab = vec![vec![0.0; d]; 2];
        for a in 0..2 {
            for b in 0..d {
                for c in 0..d {
                    let p = joint_abc[(a * d + b) * d + c];
                    sift_ac[a][c] += p;
                    sift_ab[a][b] += p;
                }
            }
        }
        Ok(Self::assemble(n, *p_ghz, joint_ac.clone(), sift_ac, sift_ab))
    }

    /// The same statistics computed from table-form data alone.
    pub fn from_analytic(an: &AnalyticAttack) -> Self {
        let n = an.tables.n();
        let d = bits::dim(n);
        let ctrl = (0..2).map(|a| (0..d).map(|c| 0.5 * an.reflection_overlap(a, c, a, c)).collect()).collect();
        let sift_ab = (0..2).map(|a| (0..d).map(|b| 0.5 * an.tables.forward(a, b)).collect()).collect();
        Self::assemble(n, an.p_ghz(), ctrl, an.sift_joint_ac(), sift_ab)
    }

    fn assemble(
        n: usize,
        p_ghz: f64,
        ctrl_joint_ac: Vec<Vec<f64>>,
        sift_joint_ac: Vec<Vec<f64>>,
        sift_joint_ab: Vec<Vec<f64>>,
    ) -> Self {
        let d = bits::dim(n);
        let p_a = [sift_joint_ac[0].iter().sum(), sift_joint_ac[1].iter().sum()];
        let p_b = (0..d).map(|b| sift_joint_ab[0][b] + sift_joint_ab[1][b]).collect();
        Self { n, p_ghz, ctrl_joint_ac, sift_joint_ac, sift_joint_ab, p_a, p_b }
    }
}

/// Exact statistics of both round types.
pub fn observe_exact(params: &ProtocolParams, attack: &CollectiveAttack) -> Result<ObservedStatistics> {
    let ctrl = run_round_exact(params, attack, 0)?;
    let sift = run_round_exact(params, attack, 1)?;
    ObservedStatistics::from_rounds(&ctrl, &sift)
}

/// What Alice does in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundKind {
    /// CTRL round, projection onto the GHZ state.
    GhzTest,
    /// CTRL round, Z measurement of `A` and `T` (cut-and-choose).
    ZTest,
    Sift,
}

impl RoundKind {
    pub fn theta(self) -> u8 {
        match self {
            RoundKind::GhzTest | RoundKind::ZTest => 0,
            RoundKind::Sift => 1,
        }
    }
}

/// Recorded result of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    GhzTest { pass: bool },
    ZTest { a: u8, t_string: usize },
    Sift { a: u8, t_string: usize, bob_bits: usize },
}

impl RoundOutcome {
    pub fn theta(&self) -> u8 {
        match self {
            RoundOutcome::GhzTest { .. } | RoundOutcome::ZTest { .. } => 0,
            RoundOutcome::Sift { .. } => 1,
        }
    }
}

/// Exact round distributions, computed once and sampled many times.
#[derive(Debug, Clone)]
pub struct RoundSampler {
    n: usize,
    stats: ObservedStatistics,
    p_ghz: f64,
    ctrl_z: WeightedIndex<f64>,
    sift: WeightedIndex<f64>,
}

impl RoundSampler {
    pub fn new(params: &ProtocolParams, attack: &CollectiveAttack) -> Result<Self> {
        let ctrl = run_round_exact(params, attack, 0)?;
        let sift = run_round_exact(params, attack, 1)?;
        let stats = ObservedStatistics::from_rounds(&ctrl, &sift)?;
        let RoundStats::Sift { joint_abc } = &sift.stats else { unreachable!() };
        let weights = |w: Vec<f64>| {
            WeightedIndex::new(w.into_iter().map(|p| p.max(0.0))).map_err(|e| Error::Numerical(e.to_string()))
        };
        Ok(Self {
            n: params.n,
            p_ghz: stats.p_ghz.clamp(0.0, 1.0),
            ctrl_z: weights(stats.ctrl_joint_ac.iter().flatten().copied().collect())?,
            sift: weights(joint_abc.clone())?,
            stats,
        })
    }

    pub fn stats(&self) -> &ObservedStatistics {
        &self.stats
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: RoundKind, rng: &mut R) -> RoundOutcome {
        let d = bits::dim(self.n);
        match kind {
            RoundKind::GhzTest => RoundOutcome::GhzTest { pass: rng.random::<f64>() < self.p_ghz },
            RoundKind::ZTest => {
                let k = self.ctrl_z.sample(rng);
                RoundOutcome::ZTest { a: (k / d) as u8, t_string: k % d }
            }
            RoundKind::Sift => {
                let k = self.sift.sample(rng);
                RoundOutcome::Sift { a: (k / (d * d)) as u8, bob_bits: (k / d) % d, t_string: k % d }
            }
        }
    }
}

/// Samples one round. Builds the exact distributions each call; use
/// [`RoundSampler`] for repeated sampling.
pub fn sample_round<R: Rng + ?Sized>(
    params: &ProtocolParams,
    attack: &CollectiveAttack,
    kind: RoundKind,
    rng: &mut R,
) -> Result<RoundOutcome> {
    Ok(RoundSampler::new(params, attack)?.sample(kind, rng))
}

/// Which rounds are CTRL (`Θ_j = 0`); 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaSchedule {
    pub rounds: usize,
    pub ctrl_indices: Vec<usize>,
}

impl ThetaSchedule {
    pub fn num_ctrl(&self) -> usize {
        self.ctrl_indices.len()
    }

    /// Position of round `j` among the CTRL rounds, if it is one.
    pub fn ctrl_position(&self, j: usize) -> Option<usize> {
        self.ctrl_indices.binary_search(&j).ok()
    }

    pub fn theta(&self, j: usize) -> u8 {
        u8::from(self.ctrl_position(j).is_none())
    }
}

/// `⌈√N⌉`.
pub fn default_ctrl_count(rounds: usize) -> usize {
    let mut k = (rounds as f64).sqrt() as usize;
    while k * k < rounds {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= rounds {
        k -= 1;
    }
    k
}

/// Expands the pre-shared seed into `num_ctrl` distinct CTRL positions with
/// a ChaCha20 stream keyed by SHA-256 of the seed.
pub fn expand_theta_schedule(seed: &[u8], rounds: usize, num_ctrl: usize) -> Result<ThetaSchedule> {
    if num_ctrl > rounds {
        return Err(Error::Domain(format!("{num_ctrl} CTRL rounds requested out of {rounds}")));
    }
    let key: [u8; 32] = Sha256::new().chain_update(b"sqcka/theta-schedule/v1").chain_update(seed).finalize().into();
    let mut rng = ChaCha20Rng::from_seed(key);
    let mut ctrl_indices: Vec<usize> = index::sample(&mut rng, rounds, num_ctrl).into_iter().map(|i| i + 1).collect();
    ctrl_indices.sort_unstable();
    Ok(ThetaSchedule { rounds, ctrl_indices })
}

/// Outcome of a whole session.
#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub n: usize,
    /// Round outcomes in round order.
    pub outcomes: Vec<RoundOutcome>,
    pub tallies: TallyCounts,
    /// 1-based indices of SIFT rounds disclosed for parameter estimation.
    pub disclosed: Vec<usize>,
    pub raw_key_alice: Vec<u8>,
    /// One raw key per Bob.
    pub raw_key_bobs: Vec<Vec<u8>>,
}

impl SessionRecord {
    /// Fraction of raw-key positions where each Bob differs from Alice.
    pub fn disagreement_rates(&self) -> Vec<f64> {
        let m = self.raw_key_alice.len();
        self.raw_key_bobs
            .iter()
            .map(|key| {
                if m == 0 {
                    return 0.0;
                }
                key.iter().zip(&self.raw_key_alice).filter(|(x, y)| x != y).count() as f64 / m as f64
            })
            .collect()
    }
}

/// RNG for round `j`: one independent ChaCha stream per round index.
pub fn round_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    rng
}

/// Runs `schedule.rounds` rounds. CTRL rounds alternate GHZ test (even
/// position) and Z test (odd position); a `cc_fraction` share of the SIFT
/// rounds is disclosed for estimation and the rest form the raw keys.
pub fn run_session(
    params: &ProtocolParams,
    attack: &CollectiveAttack,
    schedule: &ThetaSchedule,
    seed: u64,
    cc_fraction: f64,
) -> Result<SessionRecord> {
    if !(0.0..1.0).contains(&cc_fraction) {
        return Err(Error::Domain(format!("cut-and-choose fraction {cc_fraction} outside [0, 1)")));
    }
    let sampler = RoundSampler::new(params, attack)?;
    let n = params.n;
    let sift_rounds: Vec<usize> = (1..=schedule.rounds).filter(|&j| schedule.theta(j) == 1).collect();
    let num_disclosed = (cc_fraction * sift_rounds.len() as f64).round() as usize;
    let mut disclosed: Vec<usize> = {
        let mut rng = round_rng(seed, 0);
        index::sample(&mut rng, sift_rounds.len(), num_disclosed).into_iter().map(|i| sift_rounds[i]).collect()
    };
    disclosed.sort_unstable();

    let kinds: Vec<RoundKind> = (1..=schedule.rounds)
        .map(|j| match schedule.ctrl_position(j) {
            Some(pos) if pos % 2 == 0 => RoundKind::GhzTest,
            Some(_) => RoundKind::ZTest,
            None => RoundKind::Sift,
        })
        .collect();
    let outcomes: Vec<RoundOutcome> = kinds
        .par_iter()
        .enumerate()
        .map(|(i, &kind)| sampler.sample(kind, &mut round_rng(seed, i + 1)))
        .collect();

    let mut tallies = TallyCounts::new(n);
    let mut raw_key_alice = Vec::new();
    let mut raw_key_bobs = vec![Vec::new(); n];
    for (i, outcome) in outcomes.iter().enumerate() {
        match *outcome {
            RoundOutcome::GhzTest { pass } => tallies.record_ghz(pass),
            RoundOutcome::ZTest { a, t_string } => tallies.record_z_ctrl(a, t_string),
            RoundOutcome::Sift { a, bob_bits, .. } => {
                if disclosed.binary_search(&(i + 1)).is_ok() {
                    tallies.record_sift(a, bob_bits);
                } else {
                    raw_key_alice.push(a);
                    for (j, key) in raw_key_bobs.iter_mut().enumerate() {
                        key.push(bits::bit(bob_bits, j, n));
                    }
                }
            }
        }
    }
    Ok(SessionRecord { n, outcomes, tallies, disclosed, raw_key_alice, raw_key_bobs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{depolarizing_attack, identity_attack, DepolarizingParams};

    fn amp_close(s: &StateVector, expect: &[f64]) {
        assert_eq!(s.dim(), expect.len());
        for (z, e) in s.amps().iter().zip(expect) {
            assert!((z - Complex64::new(*e, 0.0)).norm() < 1e-15, "{z} vs {e}");
        }
    }

    #[test]
    fn ghz_preparation() {
        let h = FRAC_1_SQRT_2;
        amp_close(&prepare_ghz(2, 0, &[0]).unwrap(), &[h, 0.0, 0.0, h]);
        let mut expect = vec![0.0; 8];
        expect[0b001] = h;
        expect[0b110] = -h;
        amp_close(&prepare_ghz(3, 1, &[0, 1]).unwrap(), &expect);
        assert!(prepare_ghz(3, 0, &[0]).is_err());
        assert!(prepare_ghz(1, 0, &[]).is_err());
        for y in 0..8u8 {
            let bits: Vec<u8> = (0..3).map(|i| (y >> (2 - i)) & 1).collect();
            assert!(prepare_ghz(4, y & 1, &bits).unwrap().is_normalized());
        }
    }

    #[test]
    fn bob_copy() {
        let layout = RegisterLayout::new(vec![(Label::T, 4), (Label::B, 4)]).unwrap();
        let v1 = bob_operation(1, 2).unwrap();
        let s = StateVector::basis(16, 2 * 4).unwrap(); // |10⟩_T |00⟩_B
        let out = apply_on_subsystems(&v1, &s, &layout, &[Label::T, Label::B]).unwrap();
        assert_eq!(out, StateVector::basis(16, 2 * 4 + 2).unwrap());
        let v0 = bob_operation(0, 2).unwrap();
        let any = StateVector::from_real(&(0..16).map(|i| (i as f64 + 1.0) / 38.678_159_211_627_43).collect::<Vec<_>>()).unwrap();
        assert_eq!(apply_on_subsystems(&v0, &any, &layout, &[Label::T, Label::B]).unwrap(), any);
    }

    #[test]
    fn noiseless_rounds() {
        for n in 1..=3 {
            let p = ProtocolParams::new(n).unwrap();
            let atk = identity_attack(n).unwrap();
            let stats = observe_exact(&p, &atk).unwrap();
            assert!((stats.p_ghz - 1.0).abs() < 1e-12);
            let d = bits::dim(n);
            for a in 0..2 {
                for c in 0..d {
                    let e = if c == bits::all(a as u8, n) { 0.5 } else { 0.0 };
                    assert!((stats.sift_joint_ac[a][c] - e).abs() < 1e-12);
                    assert!((stats.sift_joint_ab[a][c] - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depolarizing_exact_statistics() {
        let p = ProtocolParams::new(2).unwrap();
        let atk = depolarizing_attack(&DepolarizingParams::new(0.1, 0.2, 2).unwrap()).unwrap();
        let s = observe_exact(&p, &atk).unwrap();
        assert!((s.p_ghz - 0.755).abs() < 1e-12);
        for (b, expect) in [(0, 0.475), (1, 0.025), (2, 0.025), (3, 0.475)] {
            assert!((s.p_b[b] - expect).abs() < 1e-12);
        }
        let q = s.branch_norms();
        assert!((q[0][0] - 0.79).abs() < 1e-12 && (q[1][2] - 0.07).abs() < 1e-12);
        let atk = depolarizing_attack(&DepolarizingParams::new(0.2, 0.1, 2).unwrap()).unwrap();
        let s = observe_exact(&p, &atk).unwrap();
        assert!((s.sift_joint_ac[0][1] - 0.035).abs() < 1e-12);
        assert!((s.sift_joint_ac[1][3] - 0.395).abs() < 1e-12);
        assert!((s.bob_error(0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ghz_projection_of_full_depolarization() {
        let p = ProtocolParams::new(2).unwrap();
        let atk = depolarizing_attack(&DepolarizingParams::new(1.0, 0.4, 2).unwrap()).unwrap();
        let r = run_round_exact(&p, &atk, 0).unwrap();
        let (pg, post) = alice_ghz_projection(&r.state, &r.layout).unwrap();
        assert!((pg - 0.125).abs() < 1e-12);
        assert!(post.unwrap().is_normalized());
    }

    #[test]
    fn table_form_matches_dilation() {
        let p = ProtocolParams::new(2).unwrap();
        let atk = depolarizing_attack(&DepolarizingParams::new(0.3, 0.1, 2).unwrap()).unwrap();
        let tables_only = CollectiveAttack::new(2, None, atk.analytic().cloned()).unwrap();
        let a = observe_exact(&p, &atk).unwrap();
        let b = observe_exact(&p, &tables_only).unwrap();
        let c = ObservedStatistics::from_analytic(atk.analytic().unwrap());
        for other in [&b, &c] {
            assert!((a.p_ghz - other.p_ghz).abs() < 1e-12);
            for (x, y) in a.ctrl_joint_ac.iter().flatten().zip(other.ctrl_joint_ac.iter().flatten()) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in a.sift_joint_ac.iter().flatten().zip(other.sift_joint_ac.iter().flatten()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schedule_expansion() {
        let s = expand_theta_schedule(b"pre-shared", 16, 4).unwrap();
        assert_eq!(s.num_ctrl(), 4);
        assert!(s.ctrl_indices.windows(2).all(|w| w[0] < w[1]));
        assert!(s.ctrl_indices.iter().all(|&j| (1..=16).contains(&j)));
        assert_eq!(s, expand_theta_schedule(b"pre-shared", 16, 4).unwrap());
        assert_ne!(s, expand_theta_schedule(b"other key", 16, 4).unwrap());
        let all = expand_theta_schedule(b"k", 9, 9).unwrap();
        assert_eq!(all.ctrl_indices, (1..=9).collect::<Vec<_>>());
        assert!(expand_theta_schedule(b"k", 3, 4).is_err());
        assert_eq!(default_ctrl_count(10_000), 100);
        assert_eq!(default_ctrl_count(10_001), 101);
        assert_eq!(default_ctrl_count(1), 1);
        assert_eq!(default_ctrl_count(0), 0);
    }

    #[test]
    fn noiseless_session_shares_a_key() {
        let n = 3;
        let p = ProtocolParams::new(n).unwrap();
        let atk = identity_attack(n).unwrap();
        let sched = expand_theta_schedule(b"s", 400, 40).unwrap();
        let rec = run_session(&p, &atk, &sched, 7, 0.1).unwrap();
        assert!(rec.raw_key_bobs.iter().all(|k| k == &rec.raw_key_alice));
        assert_eq!(rec.tallies.ghz_pass, rec.tallies.ghz_total);
        assert_eq!(rec.tallies.ghz_total, 20);
        assert_eq!(rec.disclosed.len(), 36);
        assert_eq!(rec.raw_key_alice.len(), 360 - 36);
    }

    #[test]
    fn session_without_ctrl_rounds_has_no_ghz_data() {
        let p = ProtocolParams::new(1).unwrap();
        let atk = identity_attack(1).unwrap();
        let sched = expand_theta_schedule(b"s", 50, 0).unwrap();
        let rec = run_session(&p, &atk, &sched, 1, 0.2).unwrap();
        assert_eq!(rec.tallies.ghz_total, 0);
        assert!(crate::estimation::estimate_p_ghz(&rec.tallies, 0.99).is_err());
        assert!(run_session(&p, &atk, &sched, 1, 1.0).is_err());
    }

    #[test]
    fn sessions_are_deterministic() {
        let p = ProtocolParams::new(2).unwrap();
        let atk = depolarizing_attack(&DepolarizingParams::new(0.2, 0.1, 2).unwrap()).unwrap();
        let sched = expand_theta_schedule(b"s", 2000, 100).unwrap();
        let a = run_session(&p, &atk, &sched, 11, 0.1).unwrap();
        let b = run_session(&p, &atk, &sched, 11, 0.1).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.tallies, b.tallies);
    }
}
