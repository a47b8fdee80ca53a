// Trains an elastica classifier on two interleaving moons and writes the
// decision surface to two_moons_surface.csv (x1,x2,u).
use std::fmt::Write;

use elastica::data::two_moons;
use elastica::learners::{surface_grid, train};
use elastica::{Method, Mode, SolverConfig};

fn main() -> elastica::Result<()> {
    let train_set = two_moons(500, 0.1, 0);
    let test_set = two_moons(500, 0.1, 1);
    let cfg = SolverConfig::new(Mode::Ee, Method::Gd).with_lambda(1e-2).with_b(0.01);
    let trained = train(&train_set, 4.0, &cfg)?;
    let trace = &trained.traces[0];
    println!(
        "{} iterations, energy {:.4} -> {:.4}, stop {:?}",
        trace.iterations_run,
        trace.initial_energy,
        trace.energy_per_iter.last().copied().unwrap_or(trace.initial_energy),
        trace.stop
    );

    let p = &trained.predictor;
    let hits = test_set
        .rows()
        .zip(test_set.targets())
        .filter(|(x, y)| p.predict(x).unwrap() == **y)
        .count();
    println!("held-out accuracy {:.1}%", 100.0 * hits as f64 / test_set.len() as f64);

    let mut csv = String::from("x1,x2,u\n");
    for [a, b, u] in surface_grid(p, 0, [-1.5, 2.5, -1.0, 1.5], 120)? {
        let _ = writeln!(csv, "{a},{b},{u}");
    }
    std::fs::write("two_moons_surface.csv", csv).map_err(|e| elastica::Error::io("two_moons_surface.csv", e))?;
    println!("surface written to two_moons_surface.csv");
    Ok(())
}
