// Runs one benchmark cell (iris, lr) into ./benchmark-out; rerunning resumes.
use std::path::{Path, PathBuf};

use elastica::eval::{benchmark_run, CellFilter};
use elastica::{Manifest, MethodSpec, Protocol};

fn main() -> elastica::Result<()> {
    let manifest = Manifest::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/manifest.toml"))?;
    let filter = CellFilter { dataset: Some("iris".into()), method: Some(MethodSpec::LR) };
    let report = benchmark_run(&manifest, None, &Protocol::default(), Path::new("benchmark-out"), &filter, |msg| {
        eprintln!("{msg}")
    })?;
    println!("{} new cells, {} resumed", report.cells.len(), report.resumed);
    print!("{}", std::fs::read_to_string(&report.table_path).map_err(|e| elastica::Error::io(&report.table_path, e))?);
    Ok(())
}
