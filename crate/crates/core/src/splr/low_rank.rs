use crate::dual::dot;
use crate::sparsify::SparseSym;

/// Curvature guard: the rank-two term is used only when
/// `y^T s > CURVATURE_GUARD * |y|^2`.
pub const CURVATURE_GUARD: f64 = 1e-6;

/// Rank-two correction `xi u u^T + zeta v v^T`, or zero when inactive.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankTerm {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub xi: f64,
    pub zeta: f64,
    pub active: bool,
}

impl LowRankTerm {
    pub fn inactive() -> Self {
        Self {
            u: Vec::new(),
            v: Vec::new(),
            xi: 0.0,
            zeta: 0.0,
            active: false,
        }
    }

    /// `R w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        if !self.active {
            return vec![0.0; w.len()];
        }
        let cu = self.xi * dot(&self.u, w);
        let cv = self.zeta * dot(&self.v, w);
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| cu * u + cv * v)
            .collect()
    }
}

/// BFGS-style rank-two term from the last step `s = x - x_prev` and
/// gradient change `y = g - g_prev`, with `a` = `H_Omega + tau I` at the
/// current point: `u = y`, `v = A s`, `xi = 1 / y^T s`, `zeta = -1 / v^T s`.
pub fn build_low_rank(s: &[f64], y: &[f64], a: &SparseSym) -> LowRankTerm {
    let ys = dot(y, s);
    let yy = dot(y, y);
    if !(ys > CURVATURE_GUARD * yy) || !ys.is_finite() {
        return LowRankTerm::inactive();
    }
    let v = a.mul_vec(s);
    let vs = dot(&v, s);
    let scale = dot(&v, &v).sqrt() * dot(s, s).sqrt();
    if !(vs.abs() > 1e-12 * scale) || !vs.is_finite() {
        return LowRankTerm::inactive();
    }
    LowRankTerm {
        u: y.to_vec(),
        v,
        xi: 1.0 / ys,
        zeta: -1.0 / vs,
        active: true,
    }
}
