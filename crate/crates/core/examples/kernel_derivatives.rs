// Value, gradient, Laplacian and Hessian of a small Gaussian RBF expansion,
// checked against central differences.
use elastica::kernel::{RbfBasis, RbfModel, Task};

fn main() -> elastica::Result<()> {
    let basis = RbfBasis::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![0.3, 1.2]], 1.5)?;
    let model = RbfModel::new(basis, vec![1.0, -0.7, 0.4], Task::Regression)?;
    let x = [0.4, 0.3];

    let grad = model.gradient(&x)?;
    let h = 1e-5;
    let fd: Vec<f64> = (0..2)
        .map(|k| {
            let (mut p, mut m) = (x, x);
            p[k] += h;
            m[k] -= h;
            (model.eval(&p).unwrap() - model.eval(&m).unwrap()) / (2.0 * h)
        })
        .collect();

    println!("u(x)      = {:.10}", model.eval(&x)?);
    println!("grad u    = {grad:.10?}");
    println!("central   = {fd:.10?}");
    println!("lap u     = {:.10}", model.laplacian(&x)?);
    println!("hessian   = {:.6}", model.hessian(&x)?);
    Ok(())
}
