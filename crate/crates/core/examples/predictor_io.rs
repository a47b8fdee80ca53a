// Saves a trained predictor, reloads it and checks predictions are bitwise equal.
use elastica::data::two_moons;
use elastica::learners::train;
use elastica::model_file::{load, save};
use elastica::{Method, Mode, SolverConfig};

fn main() -> elastica::Result<()> {
    let data = two_moons(100, 0.1, 9);
    let p = train(&data, 8.0, &SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(1e-2))?.predictor;
    let dir = std::env::temp_dir().join("elastica-predictor-io");
    std::fs::create_dir_all(&dir).map_err(|e| elastica::Error::io(&dir, e))?;
    let path = dir.join("moons.model");
    save(&path, &p, "predictor_io example")?;
    let (back, provenance) = load(&path)?;
    let same = data.rows().all(|x| p.predict_value(x).unwrap() == back.predict_value(x).unwrap());
    println!("{} ({provenance}): identical predictions = {same}", path.display());
    Ok(())
}
