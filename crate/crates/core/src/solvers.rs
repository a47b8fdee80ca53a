//! Fitting procedures for the RBF weights.
//!
//! * [`fit_lr`]: one ridge solve of the collocated Laplacian system
//!   `sum_j w_j (phi_j - lambda lap phi_j)(x_i) = y_i`.
//! * [`fit_gd`]: explicit time marching of `du/dt` at the training points,
//!   mapped to weight space through a ridge solve against `Phi`, with step halving
//!   whenever the discrete energy would increase.
//! * [`fit_lagle`]: lagged linear-equation iteration; `g` (and `K` for the
//!   elastica) are frozen from the current weights, the linear system is solved,
//!   and the process repeats.
//!
//! All three start from (or are) ridge solutions, and `w0 = (Phi^T Phi + eta I)^-1 Phi^T y`
//! is shared by the iterative methods.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{design_matrix, RbfBasis, RbfModel, Task};
use crate::linalg::{ridge_solve, RidgeFactor};
use crate::variational::{
    energy, evaluate_flow, f_value, ElasticaParams, FlowEvaluation, Mode,
};

pub const DEFAULT_MAX_ITER: usize = 40;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_MAX_HALVINGS: usize = 20;
/// Ridge parameter of the direct LR solve.
pub const DEFAULT_ETA_DIRECT: f64 = 1.0;
/// Ridge parameter of the projections used by the iterative methods.
pub const DEFAULT_ETA_ITERATIVE: f64 = 1e-3;
/// Consecutive growing weight changes after which the lagged iteration gives up.
pub const OSCILLATION_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Gd,
    Lagle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Gd => "gd",
            Method::Lagle => "lagle",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Method::Direct),
            "gd" => Ok(Method::Gd),
            "lagle" => Ok(Method::Lagle),
            other => Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    pub method: Method,
    pub elastica: ElasticaParams,
    pub eta: f64,
    pub tau: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for a mode/method pair (`eta` = 1 for the direct solve, 1e-3 otherwise).
    pub fn new(mode: Mode, method: Method) -> Self {
        SolverConfig {
            mode,
            method,
            elastica: ElasticaParams::default(),
            eta: if method == Method::Direct {
                DEFAULT_ETA_DIRECT
            } else {
                DEFAULT_ETA_ITERATIVE
            },
            tau: DEFAULT_TAU,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            max_halvings: DEFAULT_MAX_HALVINGS,
            seed: 0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.elastica.lambda = lambda;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.elastica.b = b;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.elastica.validate()?;
        match (self.method, self.mode) {
            (Method::Direct, Mode::Lr) => {}
            (Method::Direct, m) => {
                return Err(Error::InvalidParameter(format!("direct solver requires mode lr, got {m}")))
            }
            (Method::Lagle, Mode::Lr) => {
                return Err(Error::InvalidParameter("lagged iteration requires mode tv or ee".into()))
            }
            _ => {}
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    /// No halved step decreased the energy; the last accepted weights are kept.
    StepExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub energy_per_iter: Vec<f64>,
    pub weight_change_per_iter: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub wall_time: Duration,
    /// Energy of the starting weights (the result itself for the direct solve).
    pub initial_energy: f64,
    /// Time step in force when the run stopped (GD only).
    pub final_tau: Option<f64>,
    /// `|A w - rhs| / |rhs|` of the last assembled lagged system (lagLE only).
    pub system_residual: Option<f64>,
}

impl FitTrace {
    fn empty(initial_energy: f64) -> Self {
        FitTrace {
            energy_per_iter: Vec::new(),
            weight_change_per_iter: Vec::new(),
            iterations_run: 0,
            converged: false,
            stop: StopReason::MaxIter,
            wall_time: Duration::ZERO,
            initial_energy,
            final_tau: None,
            system_residual: None,
        }
    }

    fn push(&mut self, energy: f64, change: f64) {
        self.energy_per_iter.push(energy);
        self.weight_change_per_iter.push(change);
        self.iterations_run += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub model: RbfModel,
    pub trace: FitTrace,
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let diff: f64 = old.iter().zip(new).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = new.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

fn check_shapes(dataset: &Dataset, basis: &RbfBasis) -> Result<()> {
    if dataset.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: dataset.dim(),
        });
    }
    Ok(())
}

fn targets(dataset: &Dataset) -> DVector<f64> {
    DVector::from_column_slice(dataset.targets())
}

/// `w0 = (Phi^T Phi + eta I)^-1 Phi^T y`, the starting point of both iterative methods.
pub fn initial_weights(dataset: &Dataset, basis: &RbfBasis, eta: f64) -> Result<Vec<f64>> {
    check_shapes(dataset, basis)?;
    let phi = design_matrix(basis, dataset.features())?;
    Ok(ridge_solve(&phi, &targets(dataset), eta)?.as_slice().to_vec())
}

/// `Psi[i][j] = phi_j(x_i) - lambda lap phi_j(x_i)`.
pub fn lr_system_matrix(dataset: &Dataset, basis: &RbfBasis, lambda: f64) -> Result<DMatrix<f64>> {
    check_shapes(dataset, basis)?;
    let c = basis.width();
    let d = basis.dim() as f64;
    let mut psi = design_matrix(basis, dataset.features())?;
    for j in 0..basis.len() {
        let center = basis.center(j);
        for (i, x) in dataset.rows().enumerate() {
            let s = crate::kernel::squared_distance(x, center);
            // lap phi = -2c (d - 2c s) phi
            psi[(i, j)] *= 1.0 + 2.0 * c * lambda * (d - 2.0 * c * s);
        }
    }
    Ok(psi)
}

pub fn fit_lr(dataset: &Dataset, basis: &RbfBasis, config: &SolverConfig) -> Result<Fit> {
    config.validate()?;
    if config.mode != Mode::Lr {
        return Err(Error::InvalidParameter(format!("fit_lr requires mode lr, got {}", config.mode)));
    }
    let start = Instant::now();
    let psi = lr_system_matrix(dataset, basis, config.elastica.lambda)?;
    let w = ridge_solve(&psi, &targets(dataset), config.eta)?;
    let model = RbfModel::new(basis.clone(), w.as_slice().to_vec(), Task::Regression)?;
    let e = energy(&model, dataset, &config.elastica, Mode::Lr)?;
    let mut trace = FitTrace::empty(e);
    trace.push(e, if w.norm() > 0.0 { 1.0 } else { 0.0 });
    trace.converged = true;
    trace.stop = StopReason::Converged;
    trace.wall_time = start.elapsed();
    Ok(Fit { model, trace })
}

/// Outcome of one [`GradientFlow::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Accepted { energy: f64, change: f64, tau: f64 },
    Exhausted,
}

/// Explicit time marching `w <- w + tau (Phi^T Phi + eta I)^-1 Phi^T du/dt`.
///
/// The factorization of `Phi` is computed once; each step costs one
/// evaluation of `du/dt` and the energy at all training points (O(n^2 d)) per
/// trial step, plus an O(n^2) solve.
pub struct GradientFlow<'a> {
    dataset: &'a Dataset,
    config: SolverConfig,
    factor: RidgeFactor,
    model: RbfModel,
    current: FlowEvaluation,
    tau: f64,
}

impl<'a> GradientFlow<'a> {
    pub fn new(dataset: &'a Dataset, basis: &RbfBasis, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        check_shapes(dataset, basis)?;
        let phi = design_matrix(basis, dataset.features())?;
        let factor = RidgeFactor::new(phi, config.eta)?;
        let w0 = factor.solve(&targets(dataset))?;
        let model = RbfModel::new(basis.clone(), w0.as_slice().to_vec(), Task::Regression)?;
        let current = evaluate_flow(&model, dataset, &config.elastica, config.mode)?;
        if !current.energy.is_finite() || current.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: 0,
                trace: Box::new(FitTrace::empty(current.energy)),
            });
        }
        Ok(GradientFlow {
            dataset,
            config: config.clone(),
            factor,
            model,
            current,
            tau: config.tau,
        })
    }

    pub fn model(&self) -> &RbfModel {
        &self.model
    }

    pub fn energy(&self) -> f64 {
        self.current.energy
    }

    pub fn rhs(&self) -> &[f64] {
        &self.current.rhs
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Takes one step, halving `tau` (persistently) until the energy does not increase.
    pub fn step(&mut self) -> Result<Step> {
        let direction = self.factor.solve(&DVector::from_column_slice(&self.current.rhs))?;
        for _ in 0..=self.config.max_halvings {
            let w: Vec<f64> = self
                .model
                .weights()
                .iter()
                .zip(direction.iter())
                .map(|(w, d)| w + self.tau * d)
                .collect();
            if w.iter().all(|v| v.is_finite()) {
                let trial = self.model.with_weights(w)?;
                let eval = evaluate_flow(&trial, self.dataset, &self.config.elastica, self.config.mode)?;
                if eval.energy.is_finite() && eval.energy <= self.current.energy && eval.rhs.iter().all(|v| v.is_finite())
                {
                    let change = relative_change(self.model.weights(), trial.weights());
                    self.model = trial;
                    self.current = eval;
                    return Ok(Step::Accepted {
                        energy: self.current.energy,
                        change,
                        tau: self.tau,
                    });
                }
            }
            self.tau *= 0.5;
        }
        Ok(Step::Exhausted)
    }
}

pub fn fit_gd(dataset: &Dataset, basis: &RbfBasis, config: &SolverConfig) -> Result<Fit> {
    if config.method != Method::Gd {
        return Err(Error::InvalidParameter(format!("fit_gd called with solver {}", config.method)));
    }
    let start = Instant::now();
    let mut flow = GradientFlow::new(dataset, basis, config)?;
    let mut trace = FitTrace::empty(flow.energy());
    while trace.iterations_run < config.max_iter {
        match flow.step()? {
            Step::Accepted { energy, change, .. } => {
                trace.push(energy, change);
                if change < config.tol {
                    trace.converged = true;
                    trace.stop = StopReason::Converged;
                    break;
                }
            }
            Step::Exhausted => {
                trace.stop = StopReason::StepExhausted;
                break;
            }
        }
    }
    trace.final_tau = Some(flow.tau());
    trace.wall_time = start.elapsed();
    Ok(Fit {
        model: flow.model,
        trace,
    })
}

/// Lagged linear system for the current weights.
///
/// Row `j` collocates at training point `x_j` with `g` and `K` frozen:
///
/// ```text
/// A[j][i] = (gm_j / (lambda K_j) - f_i(x_j)) phi_i(x_j)
/// rhs[j]  =  gm_j y_j / (lambda K_j)
/// ```
///
/// where `gm = sqrt(|g|^2 + (eps / 2c)^2)`, `K = 1` for TV and `a + b kappa^2` for
/// the elastica. A solution satisfies `u - lambda K kappa = y` at the training points.
pub fn assemble_lagle(dataset: &Dataset, model: &RbfModel, config: &SolverConfig) -> Result<(DMatrix<f64>, DVector<f64>)> {
    config.elastica.validate()?;
    if !matches!(config.mode, Mode::Tv | Mode::Ee) {
        return Err(Error::InvalidParameter("lagged system requires mode tv or ee".into()));
    }
    let basis = model.basis();
    check_shapes(dataset, basis)?;
    if !(config.elastica.lambda > 0.0) {
        return Err(Error::InvalidParameter("lagged system requires lambda > 0".into()));
    }
    let n = basis.len();
    let d = basis.dim();
    let c = basis.width();
    let params = &config.elastica;
    let mut a = DMatrix::zeros(dataset.len(), n);
    let mut rhs = DVector::zeros(dataset.len());
    let mut r = vec![0.0; d];
    let mut phis = vec![0.0; n];
    let mut fs = vec![0.0; n];
    for (j, (x, &y)) in dataset.rows().zip(dataset.targets()).enumerate() {
        let mut g = vec![0.0; d];
        for (i, (center, &w)) in basis.centers().zip(model.weights()).enumerate() {
            let mut s = 0.0;
            for k in 0..d {
                let t = x[k] - center[k];
                r[k] = t;
                s += t * t;
            }
            let phi = (-c * s).exp();
            phis[i] = phi;
            let wphi = w * phi;
            for k in 0..d {
                g[k] += wphi * r[k];
            }
        }
        let (g2, gm2) = crate::variational::g_norms(&g, c, params.eps_grad);
        let gm = gm2.sqrt();
        let mut kappa_sum = 0.0;
        for (i, (center, &w)) in basis.centers().zip(model.weights()).enumerate() {
            let mut s = 0.0;
            let mut gr = 0.0;
            for k in 0..d {
                let t = x[k] - center[k];
                s += t * t;
                gr += g[k] * t;
            }
            let f = f_value(g2, gm2, d as f64, c, s, gr);
            fs[i] = f;
            kappa_sum += w * phis[i] * f;
        }
        let k_coef = match config.mode {
            Mode::Ee => {
                let kappa = kappa_sum / gm;
                params.a + params.b * kappa * kappa
            }
            _ => 1.0,
        };
        let diag = gm / (params.lambda * k_coef);
        for i in 0..n {
            a[(j, i)] = (diag - fs[i]) * phis[i];
        }
        rhs[j] = diag * y;
    }
    Ok((a, rhs))
}

fn system_residual(a: &DMatrix<f64>, w: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let num = (a * w - rhs).norm();
    let den = rhs.norm();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn fit_lagle(dataset: &Dataset, basis: &RbfBasis, config: &SolverConfig) -> Result<Fit> {
    config.validate()?;
    if config.method != Method::Lagle {
        return Err(Error::InvalidParameter(format!("fit_lagle called with solver {}", config.method)));
    }
    let start = Instant::now();
    let w0 = initial_weights(dataset, basis, config.eta)?;
    let mut model = RbfModel::new(basis.clone(), w0, Task::Regression)?;
    let mut trace = FitTrace::empty(energy(&model, dataset, &config.elastica, config.mode)?);
    let mut streak = 0usize;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=config.max_iter {
        let (a, rhs) = assemble_lagle(dataset, &model, config)?;
        let w = ridge_solve(&a, &rhs, config.eta)?;
        trace.system_residual = Some(system_residual(&a, &w, &rhs));
        let next = model.with_weights(w.as_slice().to_vec())?;
        let change = relative_change(model.weights(), next.weights());
        let e = energy(&next, dataset, &config.elastica, config.mode)?;
        model = next;
        if !e.is_finite() {
            trace.wall_time = start.elapsed();
            return Err(Error::Divergence {
                iteration,
                trace: Box::new(trace),
            });
        }
        trace.push(e, change);
        if change < config.tol {
            trace.converged = true;
            trace.stop = StopReason::Converged;
            break;
        }
        streak = if change > last_change { streak + 1 } else { 0 };
        last_change = change;
        if streak >= OSCILLATION_STREAK {
            trace.wall_time = start.elapsed();
            return Err(Error::NonConvergence {
                iteration,
                streak,
                trace: Box::new(trace),
            });
        }
    }
    trace.wall_time = start.elapsed();
    Ok(Fit { model, trace })
}

/// Dispatches on `config.method`.
pub fn fit(dataset: &Dataset, basis: &RbfBasis, config: &SolverConfig) -> Result<Fit> {
    match config.method {
        Method::Direct => fit_lr(dataset, basis, config),
        Method::Gd => fit_gd(dataset, basis, config),
        Method::Lagle => fit_lagle(dataset, basis, config),
    }
}

/// Basis centered on the training points.
pub fn training_basis(dataset: &Dataset, width: f64) -> Result<RbfBasis> {
    RbfBasis::new(dataset.features().to_vec(), dataset.dim(), width)
}
