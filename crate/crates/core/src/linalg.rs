//! Ridge-regularized least squares, `argmin_w |A w - y|^2 + eta |w|^2`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, QR};

use crate::error::{Error, Result};

/// Refinement sweeps on the normal equations after the initial solve.
const REFINE_STEPS: usize = 2;

/// A factorization of one ridge problem, reusable across right-hand sides.
///
/// `eta > 0` factors `A^T A + eta I` by Cholesky; `eta = 0` factors `A` by QR and
/// rejects rank-deficient systems.
pub struct RidgeFactor {
    a: DMatrix<f64>,
    eta: f64,
    kind: FactorKind,
}

enum FactorKind {
    Normal {
        normal: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    Qr(QR<f64, Dyn, Dyn>),
}

impl RidgeFactor {
    pub fn new(a: DMatrix<f64>, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge parameter must be >= 0, got {eta}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "system matrix" });
        }
        let (m, n) = a.shape();
        let kind = if eta > 0.0 {
            let mut normal = a.tr_mul(&a);
            for i in 0..n {
                normal[(i, i)] += eta;
            }
            let chol = Cholesky::new(normal.clone())
                .ok_or_else(|| Error::IllConditioned("normal matrix is not numerically positive definite".into()))?;
            FactorKind::Normal { normal, chol }
        } else {
            if m < n {
                return Err(Error::IllConditioned(format!(
                    "underdetermined {m}x{n} system has no unique minimizer"
                )));
            }
            let qr = QR::new(a.clone());
            let diag = qr.r().diagonal().map(f64::abs);
            let max = diag.max();
            let min = diag.min();
            if !(min > (n.max(m) as f64) * f64::EPSILON * max) {
                return Err(Error::IllConditioned(format!(
                    "matrix is numerically rank deficient (|R| diagonal ratio {:.3e})",
                    min / max
                )));
            }
            FactorKind::Qr(qr)
        };
        Ok(RidgeFactor { a, eta, kind })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Minimizer for right-hand side `y`.
    pub fn solve(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.a.nrows(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "right-hand side" });
        }
        let w = match &self.kind {
            FactorKind::Normal { normal, chol } => {
                let aty = self.a.tr_mul(y);
                let mut w = chol.solve(&aty);
                for _ in 0..REFINE_STEPS {
                    let r = &aty - normal * &w;
                    w += chol.solve(&r);
                }
                w
            }
            FactorKind::Qr(qr) => {
                let n = self.a.ncols();
                let qty = qr.q().tr_mul(y);
                let r = qr.r();
                let head = qty.rows(0, n).into_owned();
                r.solve_upper_triangular(&head)
                    .ok_or_else(|| Error::IllConditioned("triangular factor is singular".into()))?
            }
        };
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned("solution is not finite".into()));
        }
        Ok(w)
    }

    /// `|(A^T A + eta I) w - A^T y| / |A^T y|`
    pub fn normal_residual(&self, w: &DVector<f64>, y: &DVector<f64>) -> f64 {
        normal_residual(&self.a, w, y, self.eta)
    }
}

/// One-shot ridge solve.
pub fn ridge_solve(a: &DMatrix<f64>, y: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    RidgeFactor::new(a.clone(), eta)?.solve(y)
}

/// Relative residual of the regularized normal equations.
pub fn normal_residual(a: &DMatrix<f64>, w: &DVector<f64>, y: &DVector<f64>, eta: f64) -> f64 {
    let aty = a.tr_mul(y);
    let lhs = a.tr_mul(&(a * w)) + w * eta;
    let denom = aty.norm();
    let num = (lhs - &aty).norm();
    if denom > 0.0 {
        num / denom
    } else {
        num
    }
}
