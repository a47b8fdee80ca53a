//! Level-set curvature, the elastica coefficient, the truncated elastica
//! divergence, pointwise flow right-hand sides and discrete energies.
//!
//! Every `|grad u|` is replaced by `m = sqrt(|grad u|^2 + eps^2)`, so all
//! quantities stay finite at critical points of `u`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{squared_distance, PointGeometry, RbfModel};

pub const DEFAULT_EPS_GRAD: f64 = 1e-8;

/// Which regularizer is being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Laplacian regularization, `lambda * |grad u|^2`.
    Lr,
    /// Total variation, `lambda * |grad u|`.
    Tv,
    /// Euler's elastica, `lambda * (a + b kappa^2) |grad u|`.
    Ee,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Lr => "lr",
            Mode::Tv => "tv",
            Mode::Ee => "ee",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Mode::Lr),
            "tv" => Ok(Mode::Tv),
            "ee" => Ok(Mode::Ee),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticaParams {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub eps_grad: f64,
}

impl Default for ElasticaParams {
    fn default() -> Self {
        ElasticaParams {
            a: 1.0,
            b: 0.01,
            lambda: 1.0,
            eps_grad: DEFAULT_EPS_GRAD,
        }
    }
}

impl ElasticaParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.a) || !ok(self.b) {
            return Err(Error::InvalidParameter(format!(
                "elastica weights must be finite and nonnegative (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if !ok(self.lambda) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.eps_grad > 0.0 && self.eps_grad.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_grad must be positive, got {}",
                self.eps_grad
            )));
        }
        Ok(())
    }
}

/// `kappa = lap u / m - grad u^T H grad u / m^3`, the divergence of the unit normal.
pub fn curvature_from(geo: &PointGeometry, eps_grad: f64) -> f64 {
    let m = geo.regularized_grad_norm(eps_grad);
    geo.laplacian / m - geo.grad_hess_grad / (m * m * m)
}

pub fn curvature(model: &RbfModel, x: &[f64], eps_grad: f64) -> Result<f64> {
    Ok(curvature_from(&model.geometry(x)?, eps_grad))
}

/// Per-center curvature kernel. With `gm^2 = |g|^2 + (eps / 2c)^2`,
///
/// ```text
/// f_i = |g|^2 / gm^2 - d + 2c |x - x_i|^2 - 2c (g . (x - x_i))^2 / gm^2
/// ```
///
/// and `kappa = (1 / gm) sum_i w_i phi_i f_i` holds exactly (the same `m = 2c gm`
/// appears in [`curvature`]). For `eps = 0` the leading ratio is 1.
pub fn f_term(model: &RbfModel, x: &[f64], i: usize, eps_grad: f64) -> Result<f64> {
    let n = model.basis().len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    let g = model.g_vector(x)?;
    let (g2, gm2) = g_norms(&g, model.width(), eps_grad);
    Ok(f_term_with(model, x, i, &g, g2, gm2))
}

/// `(|g|^2, |g|^2 + (eps / 2c)^2)`
pub(crate) fn g_norms(g: &[f64], c: f64, eps_grad: f64) -> (f64, f64) {
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let e = eps_grad / (2.0 * c);
    (g2, g2 + e * e)
}

pub(crate) fn f_term_with(model: &RbfModel, x: &[f64], i: usize, g: &[f64], g2: f64, gm2: f64) -> f64 {
    let c = model.width();
    let center = model.basis().center(i);
    let mut s = 0.0;
    let mut gr = 0.0;
    for k in 0..x.len() {
        let t = x[k] - center[k];
        s += t * t;
        gr += g[k] * t;
    }
    f_value(g2, gm2, model.dim() as f64, c, s, gr)
}

#[inline]
pub(crate) fn f_value(g2: f64, gm2: f64, d: f64, c: f64, s: f64, gr: f64) -> f64 {
    let lead = if gm2 > 0.0 { g2 / gm2 } else { 1.0 };
    let proj = if gm2 > 0.0 { gr * gr / gm2 } else { 0.0 };
    lead - d + 2.0 * c * s - 2.0 * c * proj
}

/// `(1 / gm) sum_i w_i phi_i(x) f_i(x)`, the summation form of the curvature.
pub fn curvature_by_f_terms(model: &RbfModel, x: &[f64], eps_grad: f64) -> Result<f64> {
    let g = model.g_vector(x)?;
    let c = model.width();
    let (g2, gm2) = g_norms(&g, c, eps_grad);
    let d = model.dim() as f64;
    let mut acc = 0.0;
    for (center, &w) in model.basis().centers().zip(model.weights()) {
        let s = squared_distance(x, center);
        let gr: f64 = x.iter().zip(center).zip(&g).map(|((a, b), gk)| (a - b) * gk).sum();
        acc += w * (-c * s).exp() * f_value(g2, gm2, d, c, s, gr);
    }
    Ok(acc / gm2.sqrt())
}

/// `K = a + b kappa^2`
pub fn elastica_k(model: &RbfModel, x: &[f64], params: &ElasticaParams) -> Result<f64> {
    let kappa = curvature(model, x, params.eps_grad)?;
    Ok(params.a + params.b * kappa * kappa)
}

/// Truncated expansion of `div V` for the elastica flow, with `L = lap u`,
/// `q = grad u^T H grad u`, `p = |H grad u|^2`:
///
/// ```text
/// a kappa - 4b kappa L q / m^4 + b kappa^3 + 2b (2L / m^3 + kappa / m^4) p
///         + 2b (L / m^3 - 3q / m^5) (-2L / m^2 + kappa / m) q
/// ```
///
/// With `a = 1, b = 0` this is exactly `kappa`.
pub fn div_v_from(geo: &PointGeometry, params: &ElasticaParams) -> f64 {
    let m = geo.regularized_grad_norm(params.eps_grad);
    let l = geo.laplacian;
    let q = geo.grad_hess_grad;
    let p = geo.hess_grad_norm_sq();
    let kappa = curvature_from(geo, params.eps_grad);
    let b = params.b;
    let m2 = m * m;
    let m3 = m2 * m;
    let m4 = m2 * m2;
    let m5 = m4 * m;
    params.a * kappa - 4.0 * b * kappa * l * q / m4
        + b * kappa * kappa * kappa
        + 2.0 * b * (2.0 * l / m3 + kappa / m4) * p
        + 2.0 * b * (l / m3 - 3.0 * q / m5) * (-2.0 * l / m2 + kappa / m) * q
}

pub fn div_v(model: &RbfModel, x: &[f64], params: &ElasticaParams) -> Result<f64> {
    Ok(div_v_from(&model.geometry(x)?, params))
}

/// `du/dt` at one point. LR: `lambda lap u - (u - y)`; TV: `lambda kappa - (u - y)`;
/// EE: `lambda div V - (u - y)`.
pub fn pde_rhs_from(geo: &PointGeometry, y: f64, params: &ElasticaParams, mode: Mode) -> f64 {
    let smoothing = match mode {
        Mode::Lr => geo.laplacian,
        Mode::Tv => curvature_from(geo, params.eps_grad),
        Mode::Ee => div_v_from(geo, params),
    };
    params.lambda * smoothing - (geo.value - y)
}

pub fn pde_rhs(model: &RbfModel, x: &[f64], y: f64, params: &ElasticaParams, mode: Mode) -> Result<f64> {
    Ok(pde_rhs_from(&model.geometry(x)?, y, params, mode))
}

/// Pointwise regularizer density `R(x)`.
pub fn regularizer_from(geo: &PointGeometry, params: &ElasticaParams, mode: Mode) -> f64 {
    match mode {
        Mode::Lr => geo.grad_norm_sq(),
        Mode::Tv => geo.regularized_grad_norm(params.eps_grad),
        Mode::Ee => {
            let kappa = curvature_from(geo, params.eps_grad);
            (params.a + params.b * kappa * kappa) * geo.regularized_grad_norm(params.eps_grad)
        }
    }
}

/// Flow right-hand side and energy contributions at every training point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEvaluation {
    pub rhs: Vec<f64>,
    pub energy: f64,
}

pub fn evaluate_flow(model: &RbfModel, dataset: &Dataset, params: &ElasticaParams, mode: Mode) -> Result<FlowEvaluation> {
    let mut rhs = Vec::with_capacity(dataset.len());
    let mut fidelity = 0.0;
    let mut reg = 0.0;
    for (x, &y) in dataset.rows().zip(dataset.targets()) {
        let geo = model.geometry(x)?;
        rhs.push(pde_rhs_from(&geo, y, params, mode));
        let r = geo.value - y;
        fidelity += r * r;
        reg += regularizer_from(&geo, params, mode);
    }
    Ok(FlowEvaluation {
        rhs,
        energy: fidelity + params.lambda * reg,
    })
}

/// Discrete energy collocated at the training points:
/// `sum_i (u(x_i) - y_i)^2 + lambda sum_i R(x_i)`.
pub fn energy(model: &RbfModel, dataset: &Dataset, params: &ElasticaParams, mode: Mode) -> Result<f64> {
    let mut fidelity = 0.0;
    let mut reg = 0.0;
    for (x, &y) in dataset.rows().zip(dataset.targets()) {
        let geo = model.geometry(x)?;
        let r = geo.value - y;
        fidelity += r * r;
        reg += regularizer_from(&geo, params, mode);
    }
    Ok(fidelity + params.lambda * reg)
}
