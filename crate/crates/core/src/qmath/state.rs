use nalgebra::DMatrix;
use num_complex::Complex64;

use super::layout::{RegisterLayout, MAX_DIM};
use super::{Amplitude, C_ZERO};
use crate::{Error, Result};

/// Tolerance for unitarity and idempotency checks.
pub const OPERATOR_TOL: f64 = 1e-10;
/// Tolerance on the squared norm of a state flagged as normalized.
pub const NORM_TOL: f64 = 1e-12;
/// Projection probabilities below this are reported as a null outcome.
pub const NULL_PROB: f64 = 1e-14;

/// A ket over a flat index space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Amplitude>,
}

impl StateVector {
    pub fn new(amps: Vec<Amplitude>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("state vector must have positive dimension".into()));
        }
        if amps.len() > MAX_DIM {
            return Err(Error::Capacity { dim: amps.len(), cap: MAX_DIM });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("state vector has non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Domain(format!("basis index {index} out of range {dim}")));
        }
        let mut amps = vec![C_ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub(crate) fn from_amps_unchecked(amps: Vec<Amplitude>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Amplitude> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::Numerical("cannot normalize the zero vector".into()));
        }
        Ok(Self { amps: self.amps.iter().map(|z| z / n).collect() })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude> {
        if self.dim() != other.dim() {
            return Err(Error::Domain(format!(
                "inner product of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(x, y)| x.conj() * y).sum())
    }

    /// Tensor product, `self` as the more significant factor.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        tensor(self, other)
    }
}

pub fn tensor(x: &StateVector, y: &StateVector) -> Result<StateVector> {
    let dim = x
        .dim()
        .checked_mul(y.dim())
        .filter(|&d| d <= MAX_DIM)
        .ok_or(Error::Capacity { dim: x.dim().saturating_mul(y.dim()), cap: MAX_DIM })?;
    let mut amps = Vec::with_capacity(dim);
    for a in &x.amps {
        amps.extend(y.amps.iter().map(|b| a * b));
    }
    Ok(StateVector { amps })
}

/// Row-sparse square operator, used to apply gates on a few registers.
#[derive(Debug, Clone)]
pub(crate) struct SparseOperator {
    dim: usize,
    rows: Vec<Vec<(usize, Amplitude)>>,
}

impl SparseOperator {
    pub(crate) fn from_dense(m: &DMatrix<Amplitude>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let z = m[(i, j)];
                        (z != C_ZERO).then_some((j, z))
                    })
                    .collect()
            })
            .collect();
        Self { dim: m.nrows(), rows }
    }

    /// Applies the operator to the `targets` registers of `state`.
    pub(crate) fn apply(
        &self,
        state: &StateVector,
        layout: &RegisterLayout,
        targets: &[super::Label],
    ) -> Result<StateVector> {
        check_state_layout(state, layout)?;
        let (toff, roff) = layout.split_offsets(targets)?;
        if toff.len() != self.dim {
            return Err(Error::Domain(format!(
                "operator of dimension {} applied to registers of dimension {}",
                self.dim,
                toff.len()
            )));
        }
        let src = state.amps();
        let mut out = vec![C_ZERO; src.len()];
        for &r in &roff {
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = C_ZERO;
                for &(j, u) in row {
                    acc += u * src[r + toff[j]];
                }
                out[r + toff[i]] = acc;
            }
        }
        Ok(StateVector::from_amps_unchecked(out))
    }
}

pub(crate) fn check_state_layout(state: &StateVector, layout: &RegisterLayout) -> Result<()> {
    if state.dim() != layout.dim() {
        return Err(Error::Layout(format!(
            "state of dimension {} does not match layout dimension {}",
            state.dim(),
            layout.dim()
        )));
    }
    Ok(())
}

/// A unitary matrix checked once at construction.
#[derive(Debug, Clone)]
pub struct Unitary {
    matrix: DMatrix<Amplitude>,
    sparse: SparseOperator,
}

impl Unitary {
    pub fn new(matrix: DMatrix<Amplitude>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Validation(format!(
                "unitary must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = (matrix.adjoint() * &matrix - DMatrix::<Amplitude>::identity(matrix.nrows(), matrix.nrows()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !(dev <= OPERATOR_TOL) {
            return Err(Error::Validation(format!("matrix is not unitary (deviation {dev:.3e})")));
        }
        let sparse = SparseOperator::from_dense(&matrix);
        Ok(Self { matrix, sparse })
    }

    /// Permutation unitary sending `|j⟩` to `|perm[j]⟩`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation("not a permutation".into()));
            }
        }
        let mut m = DMatrix::from_element(d, d, C_ZERO);
        for (j, &p) in perm.iter().enumerate() {
            m[(p, j)] = Complex64::new(1.0, 0.0);
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        let m = DMatrix::<Amplitude>::identity(dim, dim);
        let sparse = SparseOperator::from_dense(&m);
        Self { matrix: m, sparse }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Amplitude> {
        &self.matrix
    }
}

/// Applies `u` to the `targets` registers, identity elsewhere.
pub fn apply_on_subsystems(
    u: &Unitary,
    state: &StateVector,
    layout: &RegisterLayout,
    targets: &[super::Label],
) -> Result<StateVector> {
    u.sparse.apply(state, layout, targets)
}

/// Outcome of a projective test.
#[derive(Debug, Clone)]
pub struct Projection {
    pub prob: f64,
    /// Renormalized post-measurement state, `None` for a null outcome.
    pub post: Option<StateVector>,
}

fn check_projector(p: &DMatrix<Amplitude>) -> Result<()> {
    if !p.is_square() {
        return Err(Error::Validation("projector must be square".into()));
    }
    let dev = (p * p - p).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(dev <= OPERATOR_TOL) {
        return Err(Error::Validation(format!("projector is not idempotent (deviation {dev:.3e})")));
    }
    Ok(())
}

fn finish_projection(state: &StateVector, projected: StateVector) -> Result<Projection> {
    let prob = state.inner(&projected)?.re;
    if prob < -OPERATOR_TOL {
        return Err(Error::Numerical(format!("negative projection probability {prob:.3e}")));
    }
    let prob = prob.clamp(0.0, 1.0);
    let post = if prob > NULL_PROB {
        let s = prob.sqrt();
        Some(StateVector::from_amps_unchecked(projected.amps.iter().map(|z| z / s).collect()))
    } else {
        None
    };
    Ok(Projection { prob, post })
}

/// Projects a state with a full-dimension projector.
pub fn project(state: &StateVector, projector: &DMatrix<Amplitude>) -> Result<Projection> {
    check_projector(projector)?;
    if projector.nrows() != state.dim() {
        return Err(Error::Domain("projector and state dimensions differ".into()));
    }
    let v = nalgebra::DVector::from_column_slice(state.amps());
    let pv = projector * v;
    finish_projection(state, StateVector::from_amps_unchecked(pv.as_slice().to_vec()))
}

/// Projects the `targets` registers with `projector`, identity elsewhere.
pub fn project_on_subsystems(
    state: &StateVector,
    layout: &RegisterLayout,
    targets: &[super::Label],
    projector: &DMatrix<Amplitude>,
) -> Result<Projection> {
    check_projector(projector)?;
    let projected = SparseOperator::from_dense(projector).apply(state, layout, targets)?;
    finish_projection(state, projected)
}

/// Computational-basis distribution of the `labels` registers (first label
/// most significant), marginalizing everything else.
pub fn basis_marginal(
    state: &StateVector,
    layout: &RegisterLayout,
    labels: &[super::Label],
) -> Result<Vec<f64>> {
    check_state_layout(state, layout)?;
    let (toff, roff) = layout.split_offsets(labels)?;
    let amps = state.amps();
    Ok(toff
        .iter()
        .map(|&t| roff.iter().map(|&r| amps[r + t].norm_sqr()).sum())
        .collect())
}

/// The (unnormalized) vector on the remaining registers obtained by fixing
/// `labels` to the basis digits `values`. Remaining registers keep layout order.
pub fn branch_vector(
    state: &StateVector,
    layout: &RegisterLayout,
    labels: &[super::Label],
    values: &[usize],
) -> Result<Vec<Amplitude>> {
    check_state_layout(state, layout)?;
    if labels.len() != values.len() {
        return Err(Error::Domain("labels and values differ in length".into()));
    }
    let strides = layout.strides();
    let mut base = 0;
    for (&l, &v) in labels.iter().zip(values) {
        let p = layout.position(l)?;
        if v >= layout.registers()[p].1 {
            return Err(Error::Domain(format!("digit {v} out of range for {l}")));
        }
        base += v * strides[p];
    }
    let (_, roff) = layout.split_offsets(labels)?;
    Ok(roff.iter().map(|&r| state.amps()[base + r]).collect())
}
