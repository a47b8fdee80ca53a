//! Gaussian RBF basis `phi_i(x) = exp(-c |x - x_i|^2)` and exact derivatives of
//! expansions `u(x) = sum_i w_i phi_i(x)`.
//!
//! With `r_i = x - x_i` the closed forms used throughout are
//!
//! ```text
//! grad u  = -2c sum_i w_i phi_i r_i                      = -2c g
//! H(u)    =     sum_i w_i phi_i (4c^2 r_i r_i^T - 2c I)
//! lap u   = -2c sum_i w_i phi_i (d - 2c |r_i|^2)
//! ```
//!
//! Kernel values that underflow are exactly zero; nothing downstream divides by them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::ScalingParams;
use crate::error::{Error, Result};

/// Centers and shared width of a Gaussian basis. Centers are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfBasis {
    centers: Vec<f64>,
    dim: usize,
    width: f64,
}

impl RbfBasis {
    /// `centers` holds `n * dim` values, one center per row.
    pub fn new(centers: Vec<f64>, dim: usize, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "RBF width must be positive and finite, got {width}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("center dimension must be >= 1".into()));
        }
        if centers.is_empty() {
            return Err(Error::InvalidParameter("basis needs at least one center".into()));
        }
        if centers.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: centers.len() % dim,
            });
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "RBF centers" });
        }
        Ok(RbfBasis {
            centers,
            dim,
            width,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], width: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(rows.concat(), dim, width)
    }

    pub fn len(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.centers.chunks_exact(self.dim)
    }

    pub fn centers_flat(&self) -> &[f64] {
        &self.centers
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "evaluation point" });
        }
        Ok(())
    }
}

/// What a fitted scalar function is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Binary,
    Regression,
    OvaMember,
}

/// A fitted expansion `u(x) = sum_i w_i phi_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    basis: RbfBasis,
    weights: Vec<f64>,
    task: Task,
    /// Feature scaling applied to the data the model was fitted on. Evaluation
    /// methods on the model expect already-scaled points.
    scaling: Option<ScalingParams>,
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            let t = p - q;
            t * t
        })
        .sum()
}

/// `exp(-c |x - center|^2)`.
pub fn rbf_eval(x: &[f64], center: &[f64], c: f64) -> Result<f64> {
    if x.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: x.len(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "RBF width must be positive and finite, got {c}"
        )));
    }
    if x.iter().chain(center).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "RBF argument" });
    }
    Ok((-c * squared_distance(x, center)).exp())
}

/// `Phi[i][j] = phi_j(points[i])` for row-major `points`.
pub fn design_matrix(basis: &RbfBasis, points: &[f64]) -> Result<DMatrix<f64>> {
    let d = basis.dim();
    if points.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.len() % d,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "design points" });
    }
    let m = points.len() / d;
    let c = basis.width();
    Ok(DMatrix::from_fn(m, basis.len(), |i, j| {
        (-c * squared_distance(&points[i * d..(i + 1) * d], basis.center(j))).exp()
    }))
}

/// Derivative information of `u` at one point, computed in two O(n d) passes.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `g = sum_i w_i phi_i (x - x_i)`, so that `gradient = -2c g`.
    pub g: Vec<f64>,
    pub laplacian: f64,
    /// `H(u) grad u`
    pub hess_grad: Vec<f64>,
    /// `grad u^T H(u) grad u`
    pub grad_hess_grad: f64,
}

impl PointGeometry {
    pub fn grad_norm_sq(&self) -> f64 {
        self.gradient.iter().map(|v| v * v).sum()
    }

    /// `sqrt(|grad u|^2 + eps^2)`
    pub fn regularized_grad_norm(&self, eps: f64) -> f64 {
        (self.grad_norm_sq() + eps * eps).sqrt()
    }

    /// `|H(u) grad u|^2`
    pub fn hess_grad_norm_sq(&self) -> f64 {
        self.hess_grad.iter().map(|v| v * v).sum()
    }
}

impl RbfModel {
    pub fn new(basis: RbfBasis, weights: Vec<f64>, task: Task) -> Result<Self> {
        if weights.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { what: "model weights" });
        }
        Ok(RbfModel {
            basis,
            weights,
            task,
            scaling: None,
        })
    }

    pub fn with_scaling(mut self, scaling: Option<ScalingParams>) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn basis(&self) -> &RbfBasis {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn width(&self) -> f64 {
        self.basis.width()
    }

    /// Same basis, new weights. Used by the solvers on every iteration.
    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let mut next = RbfModel::new(self.basis.clone(), weights, self.task)?;
        next.scaling = self.scaling.clone();
        Ok(next)
    }

    /// Iterates `(w_i * phi_i(x), x - x_i, |x - x_i|^2)` with the residual written
    /// into `r`.
    #[inline]
    fn for_each_term(&self, x: &[f64], r: &mut [f64], mut f: impl FnMut(usize, f64, &[f64], f64)) {
        let c = self.basis.width;
        for (i, (center, &w)) in self.basis.centers().zip(&self.weights).enumerate() {
            let mut s = 0.0;
            for k in 0..r.len() {
                let t = x[k] - center[k];
                r[k] = t;
                s += t * t;
            }
            let wphi = w * (-c * s).exp();
            f(i, wphi, r, s);
        }
    }

    /// `u(x)`
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.basis.check_point(x)?;
        let c = self.basis.width;
        Ok(self
            .basis
            .centers()
            .zip(&self.weights)
            .map(|(center, w)| w * (-c * squared_distance(x, center)).exp())
            .sum())
    }

    /// `g = sum_i w_i phi_i(x) (x - x_i)`
    pub fn g_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.basis.check_point(x)?;
        let d = self.dim();
        let mut r = vec![0.0; d];
        let mut g = vec![0.0; d];
        self.for_each_term(x, &mut r, |_, wphi, r, _| {
            for k in 0..d {
                g[k] += wphi * r[k];
            }
        });
        Ok(g)
    }

    /// `grad u(x) = -2c g(x)`
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = -2.0 * self.width();
        Ok(self.g_vector(x)?.into_iter().map(|v| scale * v).collect())
    }

    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        self.basis.check_point(x)?;
        let c = self.width();
        let d = self.dim() as f64;
        let mut r = vec![0.0; self.dim()];
        let mut acc = 0.0;
        self.for_each_term(x, &mut r, |_, wphi, _, s| {
            acc += wphi * (d - 2.0 * c * s);
        });
        Ok(-2.0 * c * acc)
    }

    /// Full `d x d` Hessian. O(n d^2); the solvers only use Hessian-vector products.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.basis.check_point(x)?;
        let c = self.width();
        let d = self.dim();
        let mut r = vec![0.0; d];
        let mut h = DMatrix::zeros(d, d);
        let mut wsum = 0.0;
        self.for_each_term(x, &mut r, |_, wphi, r, _| {
            wsum += wphi;
            let a = 4.0 * c * c * wphi;
            for p in 0..d {
                for q in 0..d {
                    h[(p, q)] += a * (r[p] * r[q]);
                }
            }
        });
        for p in 0..d {
            h[(p, p)] -= 2.0 * c * wsum;
        }
        Ok(h)
    }

    /// `v^T H(u)(x) v` without forming the Hessian.
    pub fn hessian_quadform(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.basis.check_point(x)?;
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let c = self.width();
        let vv: f64 = v.iter().map(|t| t * t).sum();
        let mut r = vec![0.0; self.dim()];
        let mut acc = 0.0;
        self.for_each_term(x, &mut r, |_, wphi, r, _| {
            let rv: f64 = r.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += wphi * (4.0 * c * c * rv * rv - 2.0 * c * vv);
        });
        Ok(acc)
    }

    /// Value, gradient, Laplacian and the Hessian-gradient products at `x`.
    pub fn geometry(&self, x: &[f64]) -> Result<PointGeometry> {
        self.basis.check_point(x)?;
        let c = self.width();
        let d = self.dim();
        let dd = d as f64;
        let mut r = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut value = 0.0;
        let mut lap = 0.0;
        let mut wphis = vec![0.0; self.basis.len()];
        self.for_each_term(x, &mut r, |i, wphi, r, s| {
            wphis[i] = wphi;
            value += wphi;
            lap += wphi * (dd - 2.0 * c * s);
            for k in 0..d {
                g[k] += wphi * r[k];
            }
        });
        let gradient: Vec<f64> = g.iter().map(|v| -2.0 * c * v).collect();

        // H grad = 4c^2 sum_i w_i phi_i (r_i . grad) r_i - 2c (sum_i w_i phi_i) grad
        let mut acc = vec![0.0; d];
        for (center, &wphi) in self.basis.centers().zip(&wphis) {
            if wphi == 0.0 {
                continue;
            }
            let mut rg = 0.0;
            for k in 0..d {
                let t = x[k] - center[k];
                r[k] = t;
                rg += t * gradient[k];
            }
            let a = wphi * rg;
            for k in 0..d {
                acc[k] += a * r[k];
            }
        }
        let hess_grad: Vec<f64> = acc
            .iter()
            .zip(&gradient)
            .map(|(a, gk)| 4.0 * c * c * a - 2.0 * c * value * gk)
            .collect();
        let grad_hess_grad = hess_grad.iter().zip(&gradient).map(|(a, b)| a * b).sum();

        Ok(PointGeometry {
            value,
            gradient,
            g,
            laplacian: -2.0 * c * lap,
            hess_grad,
            grad_hess_grad,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(rows: &[Vec<f64>], w: &[f64], c: f64) -> RbfModel {
        RbfModel::new(RbfBasis::from_rows(rows, c).unwrap(), w.to_vec(), Task::Regression).unwrap()
    }

    #[test]
    fn rbf_eval_values() {
        assert_eq!(rbf_eval(&[0.3, -1.0], &[0.3, -1.0], 7.0).unwrap(), 1.0);
        // exp(-1) to 10 digits
        assert_relative_eq!(rbf_eval(&[1.0, 0.0], &[0.0, 0.0], 1.0).unwrap(), 0.3678794412, epsilon = 1e-10);
        let far = rbf_eval(&[1000.0], &[0.0], 1.0).unwrap();
        assert_eq!(far, 0.0);
    }

    #[test]
    fn rbf_eval_errors() {
        assert!(matches!(rbf_eval(&[1.0], &[1.0, 2.0], 1.0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(rbf_eval(&[f64::NAN], &[1.0], 1.0), Err(Error::NonFinite { .. })));
        assert!(rbf_eval(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn basis_invariants() {
        assert!(RbfBasis::new(vec![0.0, 1.0], 2, -1.0).is_err());
        assert!(RbfBasis::new(vec![0.0, 1.0], 2, f64::INFINITY).is_err());
        assert!(RbfBasis::new(vec![], 2, 1.0).is_err());
        assert!(RbfBasis::new(vec![0.0, 1.0, 2.0], 2, 1.0).is_err());
        assert!(RbfBasis::from_rows(&[vec![0.0], vec![1.0, 2.0]], 1.0).is_err());
    }

    #[test]
    fn design_matrix_examples() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.3, 2.0]];
        let basis = RbfBasis::from_rows(&rows, 0.7).unwrap();
        let phi = design_matrix(&basis, basis.centers_flat()).unwrap();
        for i in 0..3 {
            assert_eq!(phi[(i, i)], 1.0);
            for j in 0..3 {
                assert_eq!(phi[(i, j)], phi[(j, i)]);
            }
        }
        let single = RbfBasis::from_rows(&[vec![0.0, 0.0]], 3.0).unwrap();
        assert_eq!(design_matrix(&single, &[0.0, 0.0]).unwrap()[(0, 0)], 1.0);

        let r: f64 = 1.3;
        let pair = RbfBasis::from_rows(&[vec![0.0], vec![r]], 1.0).unwrap();
        let phi = design_matrix(&pair, pair.centers_flat()).unwrap();
        assert_relative_eq!(phi[(0, 1)], (-r * r).exp(), max_relative = 1e-15);
        assert_relative_eq!(phi[(1, 0)], (-r * r).exp(), max_relative = 1e-15);
        assert!(design_matrix(&pair, &[0.0, 1.0, 2.0, 3.0]).is_ok());
        assert!(design_matrix(&basis, &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn eval_examples() {
        let m = model(&[vec![0.0, 1.0], vec![2.0, 2.0]], &[0.0, 0.0], 1.0);
        assert_eq!(m.eval(&[0.5, 0.5]).unwrap(), 0.0);
        let m = model(&[vec![0.5, -0.5]], &[2.0], 4.0);
        assert_eq!(m.eval(&[0.5, -0.5]).unwrap(), 2.0);
        assert!(m.eval(&[0.5]).is_err());
    }

    #[test]
    fn gradient_zero_cases() {
        let m = model(&[vec![0.5, -0.5]], &[2.0], 4.0);
        assert_eq!(m.gradient(&[0.5, -0.5]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.g_vector(&[0.5, -0.5]).unwrap(), vec![0.0, 0.0]);
        let m = model(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[1.5, 1.5], 0.8);
        let grad = m.gradient(&[0.0, 0.0]).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn g_vector_single_center() {
        let m = model(&[vec![0.0, 0.0]], &[1.0], 1.0);
        let g = m.g_vector(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn laplacian_at_center() {
        let m = model(&[vec![0.1, 0.2, 0.3]], &[1.0], 2.0);
        assert_relative_eq!(m.laplacian(&[0.1, 0.2, 0.3]).unwrap(), -12.0, max_relative = 1e-15);
        let z = model(&[vec![0.1, 0.2, 0.3]], &[0.0], 2.0);
        assert_eq!(z.laplacian(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn hessian_at_center() {
        let m = model(&[vec![0.0, 0.0, 0.0]], &[1.0], 1.0);
        let v = [0.3, -1.2, 2.0];
        let vv: f64 = v.iter().map(|t| t * t).sum();
        assert_relative_eq!(m.hessian_quadform(&[0.0; 3], &v).unwrap(), -2.0 * vv, max_relative = 1e-14);
        assert_eq!(m.hessian_quadform(&[0.0; 3], &[0.0; 3]).unwrap(), 0.0);
        let h = m.hessian(&[0.0; 3]).unwrap();
        assert_eq!(h, DMatrix::from_diagonal_element(3, 3, -2.0));
    }

    #[test]
    fn underflowed_kernels_are_harmless() {
        let m = model(&[vec![0.0], vec![1e4]], &[1.0, 1.0], 10.0);
        let geo = m.geometry(&[0.0]).unwrap();
        assert!(geo.value.is_finite() && geo.laplacian.is_finite());
        assert_eq!(geo.value, 1.0);
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64, Vec<f64>)> {
        (1usize..6, 1usize..5).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), n),
                prop::collection::vec(-2.0..2.0f64, n),
                0.2..3.0f64,
                prop::collection::vec(-1.0..1.0f64, d),
            )
        })
    }

    proptest! {
        #[test]
        fn kernel_range_and_symmetry((rows, _w, c, _x) in instance()) {
            let basis = RbfBasis::from_rows(&rows, c).unwrap();
            let phi = design_matrix(&basis, basis.centers_flat()).unwrap();
            for i in 0..rows.len() {
                prop_assert_eq!(phi[(i, i)], 1.0);
                for j in 0..rows.len() {
                    prop_assert!(phi[(i, j)] > 0.0 && phi[(i, j)] <= 1.0);
                    prop_assert_eq!(phi[(i, j)], phi[(j, i)]);
                }
            }
        }

        #[test]
        fn geometry_matches_individual_operators((rows, w, c, x) in instance()) {
            let m = model(&rows, &w, c);
            let geo = m.geometry(&x).unwrap();
            prop_assert!((geo.value - m.eval(&x).unwrap()).abs() <= 1e-12);
            let lap = m.laplacian(&x).unwrap();
            prop_assert!((geo.laplacian - lap).abs() <= 1e-10 * (1.0 + lap.abs()));
            let q = m.hessian_quadform(&x, &geo.gradient).unwrap();
            prop_assert!((geo.grad_hess_grad - q).abs() <= 1e-10 * (1.0 + q.abs()));
            let g = m.g_vector(&x).unwrap();
            for (a, b) in geo.gradient.iter().zip(&g) {
                prop_assert!((a + 2.0 * c * b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            let h = m.hessian(&x).unwrap();
            let trace: f64 = (0..x.len()).map(|k| h[(k, k)]).sum();
            prop_assert!((trace - lap).abs() <= 1e-10 * (1.0 + lap.abs()));
        }
    }
}
