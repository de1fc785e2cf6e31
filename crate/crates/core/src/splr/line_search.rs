//! Weak-Wolfe line search along a descent direction.
//!
//! Sufficient decrease is tested on the objective change reported by the
//! trial evaluation rather than on the difference of two objective values,
//! so the test keeps working once the change falls below the rounding
//! level of `f`.

use crate::dual::{dot, GradientResult};
use crate::error::{Error, Result};

/// Evidence that a step satisfies the Wolfe conditions
/// `f(x + gamma d) - f(x) <= c1 gamma g^T d` and
/// `grad f(x + gamma d)^T d >= c2 g^T d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WolfeCertificate {
    pub gamma: f64,
    pub f0: f64,
    pub f_plus: f64,
    /// `f(x + gamma d) - f(x)` as reported by the trial evaluation.
    pub decrease: f64,
    /// `g^T d` at the start point.
    pub slope0: f64,
    /// `grad f(x + gamma d)^T d`.
    pub slope_plus: f64,
    pub c1: f64,
    pub c2: f64,
    pub trials: usize,
}

impl WolfeCertificate {
    pub fn sufficient_decrease(&self) -> bool {
        self.decrease <= self.c1 * self.gamma * self.slope0
    }

    pub fn curvature(&self) -> bool {
        self.slope_plus >= self.c2 * self.slope0
    }
}

/// One evaluation of the objective at `x + gamma d`.
#[derive(Clone, Debug)]
pub struct Trial {
    pub x_plus: Vec<f64>,
    pub eval: GradientResult,
    /// `f(x + gamma d) - f(x)`.
    pub decrease: f64,
}

impl Trial {
    /// Builds a trial whose decrease is the plain difference `f_plus - f0`.
    pub fn by_difference(x_plus: Vec<f64>, eval: GradientResult, f0: f64) -> Self {
        let decrease = eval.f - f0;
        Self {
            x_plus,
            eval,
            decrease,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LineSearchResult {
    pub x_plus: Vec<f64>,
    pub eval: GradientResult,
    pub certificate: WolfeCertificate,
}

/// Bracketing-and-zoom search for a step satisfying the Wolfe conditions.
///
/// `trial(gamma)` evaluates `x + gamma d`. The search starts at
/// `gamma = 1`, doubles while the curvature condition fails with no upper
/// bracket, and otherwise shrinks the bracket by safeguarded quadratic
/// interpolation. Uses at most `max_trials` evaluations. If the bracket
/// collapses or the budget runs out, the best sufficient-decrease point
/// seen is returned; its certificate then fails
/// [`WolfeCertificate::curvature`].
#[allow(clippy::too_many_arguments)]
pub fn line_search<F>(
    mut trial: F,
    d: &[f64],
    f0: f64,
    g0: &[f64],
    c1: f64,
    c2: f64,
    max_trials: usize,
) -> Result<LineSearchResult>
where
    F: FnMut(f64) -> Trial,
{
    let slope0 = dot(g0, d);
    if !(slope0 < 0.0) {
        return Err(Error::Direction(format!(
            "line search needs a descent direction, g^T d = {slope0:e}"
        )));
    }
    // Objective values along the ray are tracked relative to f0.
    let (mut lo, mut dec_lo, mut slope_lo) = (0.0, 0.0, slope0);
    let mut hi: Option<(f64, f64)> = None;
    let mut gamma = 1.0;
    let mut best: Option<LineSearchResult> = None;

    for count in 1..=max_trials {
        let t = trial(gamma);
        let dec = t.decrease;
        let slope = dot(&t.eval.grad, d);
        let cert = WolfeCertificate {
            gamma,
            f0,
            f_plus: t.eval.f,
            decrease: dec,
            slope0,
            slope_plus: slope,
            c1,
            c2,
            trials: count,
        };
        let finite = dec.is_finite() && t.eval.f.is_finite();
        let armijo = finite && cert.sufficient_decrease();
        if !armijo || dec >= dec_lo {
            hi = Some((gamma, if finite { dec } else { f64::INFINITY }));
        } else {
            let result = LineSearchResult {
                x_plus: t.x_plus,
                eval: t.eval,
                certificate: cert,
            };
            if cert.curvature() {
                return Ok(result);
            }
            if best.as_ref().is_none_or(|b| dec < b.certificate.decrease) {
                best = Some(result);
            }
            lo = gamma;
            dec_lo = dec;
            slope_lo = slope;
        }

        gamma = match hi {
            None => 2.0 * gamma,
            Some((h, dec_hi)) => {
                let width = h - lo;
                if width <= f64::EPSILON * h.max(1.0) {
                    break;
                }
                // minimizer of the quadratic through (lo, dec_lo, slope_lo) and (h, dec_hi)
                let curv = dec_hi - dec_lo - slope_lo * width;
                let next = lo - slope_lo * width * width / (2.0 * curv);
                let (a, b) = (lo + 0.1 * width, h - 0.1 * width);
                if curv > 0.0 && next.is_finite() {
                    next.clamp(a, b)
                } else {
                    lo + 0.5 * width
                }
            }
        };
    }

    match best {
        Some(b) => {
            log::debug!(
                "line search: curvature not certified, keeping sufficient-decrease step {:e}",
                b.certificate.gamma
            );
            Ok(b)
        }
        None => Err(Error::LineSearch { trials: max_trials }),
    }
}
