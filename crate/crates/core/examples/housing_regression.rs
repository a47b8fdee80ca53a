// 10x5-fold cross-validated MSE on the housing data (targets scaled to [0, 1])
// for Laplacian and TV regression at fixed parameters.
use std::path::PathBuf;

use elastica::eval::{cross_validate, GridPoint};
use elastica::{CvSettings, Manifest, Protocol, TaskKind};

fn main() -> elastica::Result<()> {
    let manifest = Manifest::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/manifest.toml"))?;
    let entry = manifest.get("housing").expect("housing in manifest");
    let protocol = Protocol { repeats: 2, ..Protocol::default() };
    let data = protocol.prepare(&entry.load()?)?;
    let settings = CvSettings { repeats: 2, ..protocol.cv_settings() };
    for (method, c, lambda) in [(elastica::MethodSpec::LR, 2.0, 2f64.powi(-8)), (elastica::MethodSpec::TV_GD, 2.0, 2f64.powi(-8))] {
        let cfg = protocol.solver_config(method, TaskKind::Regression);
        let r = cross_validate(&data, &cfg, GridPoint::new(c, lambda), &settings)?;
        println!("{method:>6}: MSE {:.3e} +- {:.1e} over {} folds", r.mean, r.std, r.records.len());
    }
    Ok(())
}
