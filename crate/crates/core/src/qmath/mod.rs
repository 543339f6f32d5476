//! Dense complex linear algebra and entropy kernels for composite registers.
//!
//! Index convention: the first register of a [`RegisterLayout`] is the most
//! significant digit of the flat index.

mod density;
mod layout;
mod state;

use num_complex::Complex64;

use crate::{Error, Result};

pub use density::{
    conditional_entropy, entropy_from_gram, von_neumann_entropy, DensityOperator, HERMITIAN_TOL,
    PSD_TOL,
};
pub use layout::{Label, RegisterLayout, MAX_DIM};
pub use state::{
    apply_on_subsystems, basis_marginal, branch_vector, project, project_on_subsystems, tensor,
    Projection, StateVector, Unitary, NORM_TOL, NULL_PROB, OPERATOR_TOL,
};

pub(crate) use density::{hermitian_eigenvalues, real_symmetric_eigenpairs};

pub type Amplitude = Complex64;

pub(crate) const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalues or probabilities below this contribute nothing to an entropy.
pub const LOG_CUTOFF: f64 = 1e-12;

/// Shannon entropy in bits, ignoring entries below [`LOG_CUTOFF`].
pub fn shannon_entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > LOG_CUTOFF)
        .map(|p| -p * p.log2())
        .sum()
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let x = x.clamp(0.0, 1.0);
    Ok(shannon_entropy_bits([x, 1.0 - x]))
}

/// Conditional Shannon entropy `H(X|Y)` of a joint table `joint[x][y]`.
pub fn shannon_conditional_entropy(joint: &[Vec<f64>]) -> f64 {
    let ny = joint.first().map_or(0, Vec::len);
    let h_xy = shannon_entropy_bits(joint.iter().flatten().copied());
    let h_y = shannon_entropy_bits((0..ny).map(|y| joint.iter().map(|row| row[y]).sum::<f64>()));
    h_xy - h_y
}
