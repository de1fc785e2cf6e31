use crate::dual::dot;
use crate::error::{Error, Result};
use crate::sparse_chol::NumericFactor;

use super::low_rank::LowRankTerm;

/// How the returned direction was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionKind {
    /// `-A^-1 g` with no low-rank term.
    Sparse,
    /// `-(A + R)^-1 g` through the rank-two update identity.
    LowRank,
    /// The low-rank path broke down; fell back to `-A^-1 g`.
    Fallback,
}

/// `d = -B^-1 g` for `B = A + xi u u^T + zeta v v^T`, given a factor of `A`.
///
/// With `W = [u v]` and `C = diag(xi, zeta)`:
/// `B^-1 g = A^-1 g - A^-1 W (C^-1 + W^T A^-1 W)^-1 W^T A^-1 g`.
pub fn compute_direction(
    factor: &NumericFactor,
    r: &LowRankTerm,
    g: &[f64],
) -> Result<(Vec<f64>, DirectionKind)> {
    if g.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; g.len()], DirectionKind::Sparse));
    }
    let ag = factor.solve(g);
    let sparse_dir = || -> Result<Vec<f64>> {
        let d: Vec<f64> = ag.iter().map(|v| -v).collect();
        if dot(g, &d) < 0.0 {
            Ok(d)
        } else {
            Err(Error::Direction(
                "sparse model direction is not a descent direction".into(),
            ))
        }
    };
    if !r.active {
        return Ok((sparse_dir()?, DirectionKind::Sparse));
    }

    let au = factor.solve(&r.u);
    let av = factor.solve(&r.v);
    let m00 = 1.0 / r.xi + dot(&r.u, &au);
    let m11 = 1.0 / r.zeta + dot(&r.v, &av);
    let m01 = 0.5 * (dot(&r.u, &av) + dot(&r.v, &au));
    let w0 = dot(&r.u, &ag);
    let w1 = dot(&r.v, &ag);
    let det = m00 * m11 - m01 * m01;
    let scale = (m00 * m11).abs() + m01 * m01;
    if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
        return Ok((sparse_dir()?, DirectionKind::Fallback));
    }
    let z0 = (m11 * w0 - m01 * w1) / det;
    let z1 = (m00 * w1 - m01 * w0) / det;
    let d: Vec<f64> = ag
        .iter()
        .zip(au.iter().zip(&av))
        .map(|(a, (u, v))| -(a - u * z0 - v * z1))
        .collect();
    if dot(g, &d) < 0.0 && d.iter().all(|v| v.is_finite()) {
        Ok((d, DirectionKind::LowRank))
    } else {
        Ok((sparse_dir()?, DirectionKind::Fallback))
    }
}
