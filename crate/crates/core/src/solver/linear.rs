//! Dense solves of `(I − Q) v = r` for a substochastic transient block `Q`.
//!
//! The elimination follows the Grassmann–Taksar–Heyman pattern: off-diagonal
//! entries of `I − Q` are stored as nonnegative magnitudes, each row carries
//! its exit mass (the probability of leaving the transient set in one step),
//! and pivots are rebuilt as `exit + Σ off-diagonal` instead of being updated
//! by subtraction. With a nonnegative right-hand side every operation is then
//! a sum or product of nonnegative numbers, so the result keeps full relative
//! accuracy even when the solution spans hundreds of orders of magnitude.

use std::ops::{Add, Div, Mul};

use crate::logvalue::LogValue;

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
    fn is_zero(self) -> bool;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for LogValue {
    fn zero() -> Self {
        LogValue::ZERO
    }
    fn is_zero(self) -> bool {
        LogValue::is_zero(self)
    }
    fn is_finite(self) -> bool {
        LogValue::is_finite(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SolveFault {
    /// Pivot with zero mass: the block is not strictly substochastic.
    Singular(usize),
    /// A value became non-finite at the given transient index.
    NonFinite(usize),
}

/// Transient block of an absorbing chain, indexed `0..m`.
#[derive(Clone, Debug)]
pub(crate) struct TransientSystem<S> {
    m: usize,
    /// Row-major `m × m` one-step masses between transient states. The
    /// diagonal is never read.
    q: Vec<S>,
    /// Mass leaving the transient set from each row.
    exit: Vec<S>,
}

impl<S: Scalar> TransientSystem<S> {
    pub(crate) fn new(m: usize, q: Vec<S>, exit: Vec<S>) -> Self {
        assert_eq!(q.len(), m * m);
        assert_eq!(exit.len(), m);
        TransientSystem { m, q, exit }
    }

    /// Solves `(I − Q) v = rhs` for nonnegative `rhs`.
    pub(crate) fn solve(&self, rhs: &[S]) -> Result<Vec<S>, SolveFault> {
        let m = self.m;
        assert_eq!(rhs.len(), m);
        let mut w = self.q.clone();
        let mut s = self.exit.clone();
        let mut r = rhs.to_vec();
        let mut d = vec![S::zero(); m];

        for k in 0..m {
            let mut dk = s[k];
            for j in k + 1..m {
                dk = dk + w[k * m + j];
            }
            if dk.is_zero() {
                return Err(SolveFault::Singular(k));
            }
            d[k] = dk;
            let (head, tail) = w.split_at_mut((k + 1) * m);
            let pivot_row = &head[k * m..];
            for (off, row) in tail.chunks_exact_mut(m).enumerate() {
                let i = k + 1 + off;
                let wik = row[k];
                if wik.is_zero() {
                    continue;
                }
                let f = wik / dk;
                for j in k + 1..m {
                    if j != i {
                        row[j] = row[j] + f * pivot_row[j];
                    }
                }
                s[i] = s[i] + f * s[k];
                r[i] = r[i] + f * r[k];
                if !r[i].is_finite() {
                    return Err(SolveFault::NonFinite(i));
                }
            }
        }

        let mut v = vec![S::zero(); m];
        for i in (0..m).rev() {
            let mut acc = r[i];
            for j in i + 1..m {
                acc = acc + w[i * m + j] * v[j];
            }
            let vi = acc / d[i];
            if !vi.is_finite() {
                return Err(SolveFault::NonFinite(i));
            }
            v[i] = vi;
        }
        Ok(v)
    }
}
