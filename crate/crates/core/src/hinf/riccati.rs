//! Generic strict Riccati inequality `M Z + Z M^T + Z G Z + H < 0`, `Z > 0`.

use serde::{Deserialize, Serialize};

use super::linalg::{care_stabilizing, inverse, max_sym_eig, min_sym_eig, symmetrize, Mat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiStage {
    /// Stabilizing solution of the equation with a shifted constant term.
    Direct,
    /// Inverse of a solution of the reciprocal equation.
    Inverted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub x: Mat,
    /// Largest eigenvalue of the inequality's left side at `x`.
    pub margin: f64,
    pub stage: RiccatiStage,
}

const SLACK_STEPS: usize = 24;

fn residual(m: &Mat, g: &Mat, h: &Mat, z: &Mat) -> Mat {
    symmetrize(&(m * z + z * m.transpose() + z * g * z + h))
}

fn accept(m: &Mat, g: &Mat, h: &Mat, z: Mat, eps: f64, stage: RiccatiStage) -> Option<RiccatiSolution> {
    let z = symmetrize(&z);
    if !(min_sym_eig(&z) > 0.0) {
        return None;
    }
    let margin = max_sym_eig(&residual(m, g, h, &z));
    (margin <= -eps / 2.0).then_some(RiccatiSolution { x: z, margin, stage })
}

/// Finds `Z > 0` whose inequality residual has every eigenvalue at most `-eps/2`.
///
/// First seeks `W = Z^{-1}` from `M^T W + W M + W H W + G + s I = 0` for
/// growing `s >= eps`; its inverse leaves residual `-s Z^2`. This yields the
/// largest feasible `Z`, which favours the coupling condition. Failing that,
/// tries the stabilizing solution of the equation with `H + c I`.
pub fn solve_riccati_inequality(m: &Mat, g: &Mat, h: &Mat, eps: f64) -> Result<RiccatiSolution> {
    riccati_candidates(m, g, h, eps)?.next().ok_or_else(|| {
        Error::NoStabilizingSolution("no positive definite solution of the Riccati inequality was found".into())
    })
}

/// Every feasible solution met along the slack sequence, in search order.
///
/// Larger slack gives solutions further inside the feasible set, which
/// matters when one `Z` must satisfy several inequalities at once.
pub fn riccati_candidates<'a>(
    m: &'a Mat,
    g: &Mat,
    h: &Mat,
    eps: f64,
) -> Result<impl Iterator<Item = RiccatiSolution> + 'a> {
    let n = m.nrows();
    if m.shape() != (n, n) || g.shape() != (n, n) || h.shape() != (n, n) || n == 0 {
        return Err(Error::InvalidArgument("Riccati data must be square and of equal size".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let g = symmetrize(g);
    let h = symmetrize(h);
    let eye = Mat::identity(n, n);
    let slacks = move |i: usize| eps * 4f64.powi(i as i32);
    let inverted = (0..SLACK_STEPS).map(move |i| (RiccatiStage::Inverted, slacks(i)));
    let direct = (0..SLACK_STEPS).map(move |i| (RiccatiStage::Direct, slacks(i)));
    Ok(inverted.chain(direct).filter_map(move |(stage, c)| {
        let z = match stage {
            RiccatiStage::Inverted => {
                let w = care_stabilizing(m, &h, &(&g + &eye * c)).ok()?;
                if !(min_sym_eig(&w) > 0.0) {
                    return None;
                }
                inverse(&w).ok()?
            }
            RiccatiStage::Direct => care_stabilizing(&m.transpose(), &g, &(&h + &eye * c)).ok()?,
        };
        accept(m, &g, &h, z, eps, stage)
    }))
}
