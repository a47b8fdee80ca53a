//! Supervised learning with Gaussian RBF expansions regularized by the
//! Laplacian, total variation or Euler's elastica energy.
//!
//! A model is `u(x) = sum_i w_i exp(-c |x - x_i|^2)` with one center per
//! training point. Training minimizes `|u - y|^2 + lambda * R(u)` over the
//! weights, either in closed form (Laplacian), by gradient flow, or by a
//! lagged linear iteration on the Euler-Lagrange equation.

pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod learners;
pub mod linalg;
pub mod model_file;
pub mod reference;
pub mod solvers;
pub mod variational;

pub use data::{Dataset, Manifest, ScalingParams, TaskKind};
pub use error::{Error, Result};
pub use eval::{cross_validate, grid_search, CvSettings, GridSpec, MethodSpec, Protocol};
pub use kernel::{RbfBasis, RbfModel};
pub use learners::{train, Predictor, PredictorKind};
pub use solvers::{fit, FitTrace, Method, SolverConfig};
pub use variational::{ElasticaParams, Mode};
