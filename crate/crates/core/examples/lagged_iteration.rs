// Lagged linear iteration for TV and elastica: residual of the frozen system per run.
use elastica::data::two_moons;
use elastica::solvers::{fit_lagle, training_basis};
use elastica::{Method, Mode, SolverConfig};

fn main() -> elastica::Result<()> {
    let data = two_moons(100, 0.1, 1);
    let basis = training_basis(&data, 16.0)?;
    for mode in [Mode::Tv, Mode::Ee] {
        for eta in [1e-3, 1e-8] {
            let cfg = SolverConfig::new(mode, Method::Lagle).with_lambda(1.0).with_eta(eta).with_max_iter(100);
            let f = fit_lagle(&data, &basis, &cfg)?;
            println!(
                "{mode} eta = {eta:.0e}: {} iterations, converged {}, residual {:.2e}",
                f.trace.iterations_run,
                f.trace.converged,
                f.trace.system_residual.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
