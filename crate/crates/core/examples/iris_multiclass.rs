// One-vs-all TV classifier on iris: one model per class, argmax of scores.
use std::path::PathBuf;

use elastica::data::kfold_indices;
use elastica::learners::train;
use elastica::{Manifest, Method, Mode, SolverConfig};

fn main() -> elastica::Result<()> {
    let manifest = Manifest::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/manifest.toml"))?;
    let iris = manifest.get("iris").expect("iris in manifest").load()?;
    let folds = kfold_indices(iris.len(), 5, 0)?;
    let cfg = SolverConfig::new(Mode::Tv, Method::Gd).with_lambda(2f64.powi(-6));
    let mut correct = 0;
    for (k, test) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..iris.len()).filter(|i| !test.contains(i)).collect();
        let p = train(&iris.subset(&train_idx), 4.0, &cfg)?.predictor;
        let test_set = iris.subset(test);
        let hits = test_set
            .rows()
            .zip(test_set.targets())
            .filter(|(x, y)| p.predict(x).unwrap() == **y)
            .count();
        println!("fold {k}: {hits}/{} ({} member models)", test.len(), p.models().len());
        correct += hits;
    }
    println!("accuracy {:.2}%", 100.0 * correct as f64 / iris.len() as f64);
    Ok(())
}
