use std::fmt;

use crate::{Error, Result};

/// Hard cap on the number of amplitudes (or density-matrix rows) handled exactly.
pub const MAX_DIM: usize = 1 << 22;

/// Names of the registers that appear in a protocol round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Alice's zeroth qubit, never leaves her lab.
    A,
    /// The `n` transferring qubits, one per Bob.
    T,
    /// Bobs' memory.
    B,
    Theta,
    /// Alice's measurement memory.
    MA,
    E1,
    E2,
    E3,
    /// Backward-channel environment registers.
    Et1,
    Et2,
    Et3,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::A => "A",
            Label::T => "T",
            Label::B => "B",
            Label::Theta => "Θ",
            Label::MA => "M_A",
            Label::E1 => "E1",
            Label::E2 => "E2",
            Label::E3 => "E3",
            Label::Et1 => "Ẽ1",
            Label::Et2 => "Ẽ2",
            Label::Et3 => "Ẽ3",
        };
        f.write_str(s)
    }
}

/// Ordered list of subsystems. The first register is the most significant
/// digit of the flat index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<(Label, usize)>,
}

impl RegisterLayout {
    pub fn new(regs: Vec<(Label, usize)>) -> Result<Self> {
        let mut total: usize = 1;
        for (i, &(label, dim)) in regs.iter().enumerate() {
            if dim == 0 {
                return Err(Error::Layout(format!("register {label} has dimension 0")));
            }
            if regs[..i].iter().any(|&(l, _)| l == label) {
                return Err(Error::Layout(format!("duplicate register {label}")));
            }
            total = total
                .checked_mul(dim)
                .filter(|&t| t <= MAX_DIM)
                .ok_or(Error::Capacity { dim: total.saturating_mul(dim), cap: MAX_DIM })?;
        }
        Ok(Self { regs })
    }

    pub fn registers(&self) -> &[(Label, usize)] {
        &self.regs
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.regs.iter().map(|&(l, _)| l)
    }

    pub fn dim(&self) -> usize {
        self.regs.iter().map(|&(_, d)| d).product()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.regs.iter().any(|&(l, _)| l == label)
    }

    pub fn position(&self, label: Label) -> Result<usize> {
        self.regs
            .iter()
            .position(|&(l, _)| l == label)
            .ok_or_else(|| Error::Layout(format!("unknown register {label}")))
    }

    pub fn dim_of(&self, label: Label) -> Result<usize> {
        Ok(self.regs[self.position(label)?].1)
    }

    /// Product of the dimensions of `labels`.
    pub fn dim_of_all(&self, labels: &[Label]) -> Result<usize> {
        labels.iter().try_fold(1usize, |acc, &l| Ok(acc * self.dim_of(l)?))
    }

    /// Flat-index stride of every register.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.regs.len()];
        for i in (0..self.regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.regs[i + 1].1;
        }
        strides
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut regs = self.regs.clone();
        regs.extend_from_slice(&other.regs);
        Self::new(regs)
    }

    /// The registers of `keep`, in this layout's order.
    pub fn sub_layout(&self, keep: &[Label]) -> Result<Self> {
        for &l in keep {
            self.position(l)?;
        }
        Self::new(self.regs.iter().copied().filter(|(l, _)| keep.contains(l)).collect())
    }

    /// Flat index of a multi-index given in layout order.
    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.regs.len() {
            return Err(Error::Layout(format!(
                "multi-index has {} digits, layout has {} registers",
                digits.len(),
                self.regs.len()
            )));
        }
        digits.iter().zip(&self.regs).try_fold(0usize, |acc, (&d, &(label, dim))| {
            if d >= dim {
                Err(Error::Layout(format!("digit {d} out of range for {label} (dim {dim})")))
            } else {
                Ok(acc * dim + d)
            }
        })
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut digits = vec![0; self.regs.len()];
        for (slot, &(_, dim)) in digits.iter_mut().zip(&self.regs).rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        digits
    }

    /// Offsets of the `targets` sub-index (first target most significant)
    /// and of the complementary registers (layout order).
    pub(crate) fn split_offsets(&self, targets: &[Label]) -> Result<(Vec<usize>, Vec<usize>)> {
        let strides = self.strides();
        let mut positions = Vec::with_capacity(targets.len());
        for (i, &t) in targets.iter().enumerate() {
            if targets[..i].contains(&t) {
                return Err(Error::Layout(format!("register {t} targeted twice")));
            }
            positions.push(self.position(t)?);
        }
        let target_offsets = enumerate_offsets(
            &positions.iter().map(|&p| (self.regs[p].1, strides[p])).collect::<Vec<_>>(),
        );
        let rest: Vec<(usize, usize)> = (0..self.regs.len())
            .filter(|p| !positions.contains(p))
            .map(|p| (self.regs[p].1, strides[p]))
            .collect();
        Ok((target_offsets, enumerate_offsets(&rest)))
    }
}

/// All flat offsets spanned by `(dim, stride)` digits, most significant first.
fn enumerate_offsets(digits: &[(usize, usize)]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &(dim, stride) in digits {
        offsets = offsets
            .iter()
            .flat_map(|&base| (0..dim).map(move |d| base + d * stride))
            .collect();
    }
    offsets
}
