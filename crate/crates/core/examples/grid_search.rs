// Grid search over (c, lambda) on synthetic moons, then repeated CV at the winner.
use elastica::data::two_moons;
use elastica::eval::{cross_validate, grid_search, ExpRange, GridSpec};
use elastica::{CvSettings, Method, Mode, SolverConfig};

fn main() -> elastica::Result<()> {
    let data = two_moons(200, 0.2, 3);
    let cfg = SolverConfig::new(Mode::Tv, Method::Gd);
    let grid = GridSpec {
        base: 2.0,
        c: ExpRange { lo: 0, hi: 6, step: 2 },
        lambda: ExpRange { lo: -10, hi: 0, step: 2 },
    };
    let settings = CvSettings { folds: 5, repeats: 3, ..CvSettings::default() };
    let search = grid_search(&data, &cfg, &grid, &settings)?;
    for r in &search.table {
        println!("c = 2^{:<3} lambda = 2^{:<4} accuracy {:.3}", r.point.c_exp, r.point.lambda_exp, r.mean);
    }
    let report = cross_validate(&data, &cfg, search.best, &settings)?;
    println!(
        "best c = {}, lambda = {}: {:.3} +- {:.3}",
        search.best.c, search.best.lambda, report.mean, report.std
    );
    Ok(())
}
