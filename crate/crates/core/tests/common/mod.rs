#![allow(dead_code)]

use elastica::kernel::{RbfBasis, RbfModel, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Centers and x in the unit cube, weights in [-1, 1].
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, d: usize, c: f64) -> RbfModel {
    let centers: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    RbfModel::new(RbfBasis::new(centers, d, c).unwrap(), weights, Task::Regression).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

/// Term-by-term `sum_i w_i exp(-c |x - x_i|^2)`.
pub fn naive_eval(model: &RbfModel, x: &[f64]) -> f64 {
    let c = model.width();
    model
        .basis()
        .centers()
        .zip(model.weights())
        .map(|(xi, w)| {
            let r2: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
            w * (-c * r2).exp()
        })
        .sum()
}

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

/// Central differences of `f`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| (f(&shifted(x, k, h)) - f(&shifted(x, k, -h))) / (2.0 * h))
        .collect()
}

/// Second-order central differences of `f`, summed over axes.
pub fn fd_laplacian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let f0 = f(x);
    (0..x.len())
        .map(|k| (f(&shifted(x, k, h)) - 2.0 * f0 + f(&shifted(x, k, -h))) / (h * h))
        .sum()
}

/// Jacobian of a vector field by central differences; `out[a][b] = d g_a / d x_b`.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut out = vec![vec![0.0; d]; d];
    for b in 0..d {
        let plus = g(&shifted(x, b, h));
        let minus = g(&shifted(x, b, -h));
        for a in 0..d {
            out[a][b] = (plus[a] - minus[a]) / (2.0 * h);
        }
    }
    out
}

/// Divergence of `grad u / |grad u|` by central differences of the analytic gradient.
pub fn fd_curvature(model: &RbfModel, x: &[f64], h: f64) -> f64 {
    let unit = |p: &[f64]| {
        let g = model.gradient(p).unwrap();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.into_iter().map(|v| v / n).collect::<Vec<_>>()
    };
    let j = fd_jacobian(unit, x, h);
    (0..x.len()).map(|k| j[k][k]).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Natural size of the k-th derivative of `model`: `sum |w_i| (2c)^(k/2)`.
pub fn derivative_scale(model: &RbfModel, order: i32) -> f64 {
    let w: f64 = model.weights().iter().map(|w| w.abs()).sum();
    w * (2.0 * model.width()).powf(order as f64 / 2.0)
}
