use crate::chain::TransitionTable;
use crate::error::{BarwError, Result};

use super::hitting::HittingProfile;
use super::{HARMONICITY_TOL, ROW_SUM_TOL};

/// The chain conditioned on `{T_0 < T_u^+}`: `p_φ(x,y) = φ(y) p(x,y) / φ(x)`.
///
/// `row(x)` covers `y ∈ {0, …, u−1}`; state `0` is absorbing and its row is
/// the point mass at `0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedKernel {
    u: usize,
    rows: Vec<Vec<f64>>,
    source: HittingProfile,
}

impl TiltedKernel {
    pub fn u(&self) -> usize {
        self.u
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn source(&self) -> &HittingProfile {
        &self.source
    }
}

/// Builds the Doob-transformed kernel from a hitting profile.
pub fn tilted_kernel(profile: &HittingProfile) -> Result<TiltedKernel> {
    if !(profile.residual() <= HARMONICITY_TOL) {
        return Err(BarwError::SolverFailure {
            residual: profile.residual(),
            tolerance: HARMONICITY_TOL,
        });
    }
    let u = profile.u();
    let table = TransitionTable::new(*profile.params());
    let mut rows = Vec::with_capacity(u);
    let mut absorbing = vec![0.0; u];
    absorbing[0] = 1.0;
    rows.push(absorbing);
    for x in 1..u {
        let logp = table.row(x);
        let lx = profile.ln_phi(x);
        let mut row: Vec<f64> = (0..u)
            .map(|y| (logp[y] + profile.ln_phi(y) - lx).exp())
            .collect();
        let total: f64 = row.iter().sum();
        let deviation = total - 1.0;
        if !(deviation.abs() <= ROW_SUM_TOL) {
            return Err(BarwError::Inconsistent { row: x, deviation });
        }
        for v in &mut row {
            *v /= total;
        }
        rows.push(row);
    }
    Ok(TiltedKernel {
        u,
        rows,
        source: profile.clone(),
    })
}
