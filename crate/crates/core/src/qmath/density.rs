use nalgebra::DMatrix;
use num_complex::Complex64;

use super::layout::{Label, RegisterLayout, MAX_DIM};
use super::state::StateVector;
use super::{shannon_entropy_bits, Amplitude, C_ZERO};
use crate::{Error, Result};

/// Hermiticity and unit-trace tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted in a density operator.
pub const PSD_TOL: f64 = 1e-10;

/// A density matrix with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: DMatrix<Amplitude>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: DMatrix<Amplitude>) -> Result<Self> {
        check_hermitian(&mat)?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::Validation(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&mat).into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::Validation(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amps());
        Self { mat: &v * v.adjoint() }
    }

    /// Diagonal (classical) state.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        Self::new(d)
    }

    /// `Tr_{not keep} |ψ⟩⟨ψ|` without forming the full projector.
    pub fn reduced_from_pure(
        state: &StateVector,
        layout: &RegisterLayout,
        keep: &[Label],
    ) -> Result<Self> {
        super::state::check_state_layout(state, layout)?;
        let keep = ordered_keep(layout, keep)?;
        let (koff, roff) = layout.split_offsets(&keep)?;
        let amps = state.amps();
        let k = koff.len();
        let mut mat = DMatrix::from_element(k, k, C_ZERO);
        for &r in &roff {
            for i in 0..k {
                let x = amps[r + koff[i]];
                if x == C_ZERO {
                    continue;
                }
                for j in 0..k {
                    mat[(i, j)] += x * amps[r + koff[j]].conj();
                }
            }
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Amplitude> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Traces out every register not in `keep`. Kept registers stay in layout order.
    pub fn partial_trace(&self, layout: &RegisterLayout, keep: &[Label]) -> Result<Self> {
        self.check_layout(layout)?;
        let keep = ordered_keep(layout, keep)?;
        let (koff, roff) = layout.split_offsets(&keep)?;
        let k = koff.len();
        let mut mat = DMatrix::from_element(k, k, C_ZERO);
        for i in 0..k {
            for j in 0..k {
                mat[(i, j)] = roff.iter().map(|&r| self.mat[(koff[i] + r, koff[j] + r)]).sum();
            }
        }
        Ok(Self { mat })
    }

    /// Removes all coherences in the computational basis of `label`
    /// (a non-selective Z measurement of that register).
    pub fn dephase(&self, layout: &RegisterLayout, label: Label) -> Result<Self> {
        self.check_layout(layout)?;
        let p = layout.position(label)?;
        let d = self.dim();
        let mut mat = self.mat.clone();
        let digit = |i: usize| layout.multi_index(i)[p];
        let digits: Vec<usize> = (0..d).map(digit).collect();
        for i in 0..d {
            for j in 0..d {
                if digits[i] != digits[j] {
                    mat[(i, j)] = C_ZERO;
                }
            }
        }
        Ok(Self { mat })
    }

    fn check_layout(&self, layout: &RegisterLayout) -> Result<()> {
        if layout.dim() != self.dim() {
            return Err(Error::Layout(format!(
                "density operator of dimension {} does not match layout dimension {}",
                self.dim(),
                layout.dim()
            )));
        }
        Ok(())
    }
}

fn ordered_keep(layout: &RegisterLayout, keep: &[Label]) -> Result<Vec<Label>> {
    if keep.is_empty() {
        return Err(Error::Domain("partial trace must keep at least one register".into()));
    }
    for &l in keep {
        layout.position(l)?;
    }
    Ok(layout.labels().filter(|l| keep.contains(l)).collect())
}

fn check_hermitian(mat: &DMatrix<Amplitude>) -> Result<()> {
    if !mat.is_square() {
        return Err(Error::Validation("density matrix must be square".into()));
    }
    if mat.nrows() > MAX_DIM {
        return Err(Error::Capacity { dim: mat.nrows(), cap: MAX_DIM });
    }
    let n = mat.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    if !(dev <= HERMITIAN_TOL) {
        return Err(Error::Validation(format!("matrix is not Hermitian (deviation {dev:.3e})")));
    }
    Ok(())
}

/// Indices of rows with at least one nonzero entry.
fn nonzero_rows<T: nalgebra::ComplexField>(mat: &DMatrix<T>) -> Vec<usize> {
    (0..mat.nrows()).filter(|&i| mat.row(i).iter().any(|x| !x.is_zero())).collect()
}

/// Retries with a diagonal shift when the QR iteration underflows into NaN.
fn shifted_retry<T, F>(mat: &DMatrix<T>, solve: F) -> Vec<f64>
where
    T: nalgebra::ComplexField<RealField = f64>,
    F: Fn(DMatrix<T>) -> Vec<f64>,
{
    let eigs = solve(mat.clone());
    if eigs.iter().all(|x| x.is_finite()) {
        return eigs;
    }
    let n = mat.nrows();
    let scale = 1.0 + mat.iter().map(|x| x.clone().abs()).fold(0.0, f64::max) * n as f64;
    let shifted = mat + DMatrix::<T>::identity(n, n) * T::from_real(scale);
    solve(shifted).into_iter().map(|x| x - scale).collect()
}

/// Eigenvalues of a Hermitian matrix.
///
/// Zero rows are split off as exact zero eigenvalues first. Long runs of them
/// can push nalgebra's solver into subnormals, where it returns NaN.
pub(crate) fn hermitian_eigenvalues(mat: &DMatrix<Amplitude>) -> Vec<f64> {
    // Symmetrize first so round-off does not leak into the solver.
    let sym = (mat + mat.adjoint()).map(|z| z * 0.5);
    let keep = nonzero_rows(&sym);
    let mut eigs = vec![0.0; sym.nrows() - keep.len()];
    if !keep.is_empty() {
        let sub = sym.select_rows(&keep).select_columns(&keep);
        eigs.extend(shifted_retry(&sub, |m| m.symmetric_eigenvalues().iter().copied().collect()));
    }
    eigs
}

/// Eigenpairs of a real symmetric matrix on its nonzero rows. Eigenvectors
/// are embedded back into the full index space; the omitted zero rows only
/// carry zero eigenvalues.
pub(crate) fn real_symmetric_eigenpairs(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let keep = nonzero_rows(mat);
    let sub = mat.select_rows(&keep).select_columns(&keep);
    let solve = |m: DMatrix<f64>| m.symmetric_eigen();
    let mut eig = solve(sub.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|x| !x.is_finite()) {
        let scale = 1.0 + sub.amax() * sub.nrows() as f64;
        eig = solve(&sub + DMatrix::identity(sub.nrows(), sub.nrows()) * scale);
        values = eig.eigenvalues.iter().map(|x| x - scale).collect();
    }
    let mut vectors = DMatrix::zeros(mat.nrows(), keep.len());
    for (r, &i) in keep.iter().enumerate() {
        vectors.row_mut(i).copy_from(&eig.eigenvectors.row(r));
    }
    (values, vectors)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    check_hermitian(&rho.mat)?;
    Ok(spectrum_entropy(&rho.eigenvalues()))
}

/// Entropy of an eigenvalue list, clipping values below the log cutoff.
pub(crate) fn spectrum_entropy(eigs: &[f64]) -> f64 {
    shannon_entropy_bits(eigs.iter().copied()).max(0.0)
}

/// Entropy of `Σ_k |v_k⟩⟨v_k|` computed from the Gram matrix `G_kl = ⟨v_k|v_l⟩`,
/// which shares its nonzero spectrum.
pub fn entropy_from_gram(gram: &DMatrix<Amplitude>) -> Result<f64> {
    check_hermitian(gram)?;
    Ok(spectrum_entropy(&hermitian_eigenvalues(gram)))
}

/// `S(A|E) = S(AE) - S(E)` for a state on `part_a ∪ part_e`, which must
/// partition the layout.
pub fn conditional_entropy(
    rho: &DensityOperator,
    layout: &RegisterLayout,
    part_a: &[Label],
    part_e: &[Label],
) -> Result<f64> {
    rho.check_layout(layout)?;
    if part_a.is_empty() || part_e.is_empty() {
        return Err(Error::Domain("both parts must be non-empty".into()));
    }
    if part_a.iter().any(|l| part_e.contains(l)) {
        return Err(Error::Domain("parts overlap".into()));
    }
    let covered = part_a.len() + part_e.len();
    if covered != layout.registers().len() || layout.labels().any(|l| !part_a.contains(&l) && !part_e.contains(&l)) {
        return Err(Error::Domain("parts must cover the layout".into()));
    }
    let s_ae = von_neumann_entropy(rho)?;
    let s_e = von_neumann_entropy(&rho.partial_trace(layout, part_e)?)?;
    Ok(s_ae - s_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ab() -> RegisterLayout {
        RegisterLayout::new(vec![(Label::A, 2), (Label::B, 2)]).unwrap()
    }

    fn bell() -> StateVector {
        StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    fn assert_close(a: &DMatrix<Amplitude>, b: &DMatrix<Amplitude>, tol: f64) {
        let dev = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev <= tol, "deviation {dev}");
    }

    #[test]
    fn eigenvalues_split_off_zero_rows() {
        let mut m = DMatrix::from_element(5, 5, C_ZERO);
        m[(1, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 3)] = Complex64::new(0.0, 1.0);
        m[(3, 1)] = Complex64::new(0.0, -1.0);
        m[(3, 3)] = Complex64::new(2.0, 0.0);
        let mut e = hermitian_eigenvalues(&m);
        e.sort_by(f64::total_cmp);
        for (x, want) in e.iter().zip([0.0, 0.0, 0.0, 1.0, 3.0]) {
            assert!((x - want).abs() < 1e-12, "{e:?}");
        }
        let r = m.map(|z| z.re);
        let (values, vectors) = real_symmetric_eigenpairs(&r);
        assert_eq!(values.len(), 2);
        let back = &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values)) * vectors.transpose();
        assert!((back - r).amax() < 1e-12);
    }

    #[test]
    fn trace_out_product_state() {
        let rho = DensityOperator::from_pure(&StateVector::basis(4, 0).unwrap());
        let ra = rho.partial_trace(&ab(), &[Label::A]).unwrap();
        let mut expect = DMatrix::from_element(2, 2, C_ZERO);
        expect[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_close(ra.matrix(), &expect, 1e-15);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = DensityOperator::from_pure(&bell());
        let ra = rho.partial_trace(&ab(), &[Label::A]).unwrap();
        let half = DMatrix::<Amplitude>::identity(2, 2).map(|z| z * 0.5);
        assert_close(ra.matrix(), &half, 1e-15);
        assert!((von_neumann_entropy(&ra).unwrap() - 1.0).abs() < 1e-12);
        let reduced = DensityOperator::reduced_from_pure(&bell(), &ab(), &[Label::B]).unwrap();
        assert_close(reduced.matrix(), &half, 1e-15);
    }

    #[test]
    fn empty_keep_is_domain_error() {
        let rho = DensityOperator::from_pure(&bell());
        assert!(matches!(rho.partial_trace(&ab(), &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityOperator::from_diagonal(&[0.25; 4]).unwrap();
        assert!((von_neumann_entropy(&mixed).unwrap() - 2.0).abs() < 1e-12);
        let pure = DensityOperator::from_pure(&bell());
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-10);
    }

    #[test]
    fn conditional_entropy_examples() {
        let bell_rho = DensityOperator::from_pure(&bell());
        let v = conditional_entropy(&bell_rho, &ab(), &[Label::A], &[Label::B]).unwrap();
        assert!((v + 1.0).abs() < 1e-10);
        // I/2 ⊗ |0⟩⟨0|
        let prod = DensityOperator::from_diagonal(&[0.5, 0.0, 0.5, 0.0]).unwrap();
        let v = conditional_entropy(&prod, &ab(), &[Label::A], &[Label::B]).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        assert!(conditional_entropy(&prod, &ab(), &[Label::A], &[Label::A]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = DMatrix::from_element(2, 2, C_ZERO);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(DensityOperator::new(m.clone()).is_err());
        m[(1, 0)] = Complex64::new(0.3, 0.0);
        // Hermitian, trace 1, eigenvalue -0.0853.
        assert!(DensityOperator::new(m).is_err());
        assert!(DensityOperator::from_diagonal(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn dephasing_kills_coherence() {
        let rho = DensityOperator::from_pure(&bell()).dephase(&ab(), Label::A).unwrap();
        assert_eq!(rho.matrix()[(0, 3)], C_ZERO);
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gram_entropy_matches_density_entropy() {
        let v0 = [0.6, 0.0];
        let v1 = [0.48, 0.64];
        // ρ = |v0⟩⟨v0| + |v1⟩⟨v1| scaled to unit trace.
        let s = 0.36 + 0.64;
        let g = DMatrix::from_row_slice(2, 2, &[0.36 / s, 0.288 / s, 0.288 / s, 0.64 / s])
            .map(|x| Complex64::new(x, 0.0));
        let mut rho = DMatrix::from_element(2, 2, C_ZERO);
        for v in [v0, v1] {
            for i in 0..2 {
                for j in 0..2 {
                    rho[(i, j)] += Complex64::new(v[i] * v[j] / s, 0.0);
                }
            }
        }
        let a = entropy_from_gram(&g).unwrap();
        let b = von_neumann_entropy(&DensityOperator::new(rho).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
