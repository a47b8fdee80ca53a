use std::path::Path;

use elastica::data::{self, two_moons, Manifest, TaskKind};
use elastica::eval::*;
use elastica::solvers::{Method, SolverConfig};
use elastica::variational::Mode;
use elastica::Dataset;

fn lr() -> SolverConfig {
    SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(1e-2)
}

#[test]
fn lr_on_two_moons_cross_validates_above_ninety_percent() {
    let ds = two_moons(200, 0.1, 0);
    let r = cross_validate(&ds, &lr(), GridPoint::new(8.0, 1e-2), &CvSettings::default()).unwrap();
    assert_eq!(r.records.len(), 50);
    assert_eq!(r.failed, 0);
    assert!(r.mean >= 0.90, "{}", r.mean);
}

#[test]
fn reports_are_reproducible_and_aggregate_exactly() {
    let ds = two_moons(60, 0.2, 9);
    let s = CvSettings { folds: 5, repeats: 3, seed: 11, scaling: ScalingMode::PerFold };
    let a = cross_validate(&ds, &lr(), GridPoint::new(4.0, 0.1), &s).unwrap();
    let b = cross_validate(&ds, &lr(), GridPoint::new(4.0, 0.1), &s).unwrap();
    assert_eq!(a.records.iter().map(|r| r.score).collect::<Vec<_>>(), b.records.iter().map(|r| r.score).collect::<Vec<_>>());
    assert_eq!(a.mean, b.mean);
    let scores: Vec<f64> = a.scores().collect();
    assert_eq!(scores.len(), s.folds * s.repeats);
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    assert!((a.mean - mean).abs() <= 1e-12);
    let sd = (scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (scores.len() - 1) as f64).sqrt();
    assert!((a.std - sd).abs() <= 1e-12);
}

#[test]
fn repeats_reshuffle() {
    let ds = two_moons(60, 0.3, 1);
    let s = CvSettings { folds: 5, repeats: 2, seed: 0, scaling: ScalingMode::PerFold };
    let r = cross_validate(&ds, &lr(), GridPoint::new(1.0, 1.0), &s).unwrap();
    let first: Vec<_> = r.records[..5].iter().map(|f| f.score).collect();
    let second: Vec<_> = r.records[5..].iter().map(|f| f.score).collect();
    assert_ne!(first, second);
}

// Test-fold values never reach training: perturbing held-out features leaves
// the fitted predictor (and therefore the other folds) untouched.
#[test]
fn held_out_rows_do_not_influence_training() {
    let ds = two_moons(40, 0.1, 2);
    let folds = data::kfold_indices(ds.len(), 5, 0).unwrap();
    let train_idx: Vec<usize> = folds[1..].concat();
    let base = elastica::learners::train(&ds.subset(&train_idx), 4.0, &lr()).unwrap().predictor;
    let mut features = ds.features().to_vec();
    for &i in &folds[0] {
        features[2 * i] += 100.0;
    }
    let shifted = Dataset::new("moved", features, 2, ds.targets().to_vec()).unwrap().into_classification();
    let again = elastica::learners::train(&shifted.subset(&train_idx), 4.0, &lr()).unwrap().predictor;
    assert_eq!(base, again);
}

#[test]
fn grid_search_picks_a_listed_point() {
    let ds = two_moons(60, 0.1, 3);
    let grid = GridSpec::square(2.0, -2, 4, 2);
    let s = grid_search(&ds, &lr(), &grid, &CvSettings { folds: 3, ..Default::default() }).unwrap();
    assert_eq!(s.table.len(), 16);
    let best = s.table.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(s.best_score, best);
    assert!(grid.points().contains(&s.best));
}

#[test]
fn grid_search_is_independent_of_worker_count() {
    let ds = two_moons(40, 0.1, 3);
    let grid = GridSpec::square(2.0, -1, 3, 1);
    let run = |w| with_workers(w, || grid_search(&ds, &lr(), &grid, &CvSettings { folds: 4, ..Default::default() }).unwrap()).unwrap();
    assert_eq!(run(1), run(3));
}

fn tiny_manifest(dir: &Path) -> Manifest {
    let moons = two_moons(40, 0.1, 7);
    std::fs::write(dir.join("moons.libsvm"), data::to_libsvm(&moons)).unwrap();
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 30.0, ((i * 7) % 11) as f64]).collect();
    let reg = Dataset::from_rows("ramp", &rows, rows.iter().map(|r| r[0] * r[0]).collect()).unwrap();
    std::fs::write(dir.join("ramp.csv"), data::to_csv(&reg)).unwrap();
    std::fs::write(
        dir.join("m.toml"),
        "[[dataset]]\nname = \"moons\"\npath = \"moons.libsvm\"\nformat = \"libsvm\"\ntask = \"binary\"\n\n\
         [[dataset]]\nname = \"ramp\"\npath = \"ramp.csv\"\nformat = \"csv\"\ntask = \"regression\"\n",
    )
    .unwrap();
    Manifest::load(&dir.join("m.toml")).unwrap()
}

fn quick_protocol() -> Protocol {
    Protocol {
        folds: 3,
        repeats: 2,
        grid: Some(GridSpec::square(2.0, 0, 2, 2)),
        max_iter: 3,
        ..Protocol::default()
    }
}

fn line_count(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn benchmark_runs_filters_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_manifest(dir.path());
    let out = dir.path().join("out");
    let protocol = quick_protocol();
    let one = CellFilter { dataset: Some("moons".into()), method: Some(MethodSpec::LR) };
    let r = benchmark_run(&manifest, None, &protocol, &out, &one, |_| {}).unwrap();
    assert_eq!(r.cells.len(), 1);
    let lines = line_count(&r.records_path);
    // header + 6 folds + 1 cell
    assert_eq!(lines, 8);

    let all = benchmark_run(&manifest, None, &protocol, &out, &CellFilter::default(), |_| {}).unwrap();
    assert_eq!(all.resumed, 1);
    assert_eq!(all.cells.len(), 5 + 3);
    assert!(all.failures.is_empty(), "{:?}", all.failures);

    let mut computed = Vec::new();
    let again = benchmark_run(&manifest, None, &protocol, &out, &CellFilter::default(), |c| computed.push(c.to_string())).unwrap();
    assert!(computed.is_empty());
    assert_eq!(again.resumed, 8);
    assert_eq!(line_count(&again.records_path), line_count(&all.records_path));

    let table = std::fs::read_to_string(&again.table_path).unwrap();
    assert!(table.starts_with("# elastica"));
    assert!(table.contains("moons") && table.contains("ramp"));

    for line in std::fs::read_to_string(&again.records_path).unwrap().lines() {
        let rec: Record = serde_json::from_str(line).unwrap();
        if let Record::Cell(c) = rec {
            assert!(c.mean.is_finite());
            assert_eq!(c.metric == Metric::Mse, c.dataset == "ramp");
        }
    }
}

#[test]
fn benchmark_refuses_a_foreign_record_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_manifest(dir.path());
    let out = dir.path().join("out");
    let one = CellFilter { dataset: Some("moons".into()), method: Some(MethodSpec::LR) };
    benchmark_run(&manifest, None, &quick_protocol(), &out, &one, |_| {}).unwrap();
    let other = Protocol { seed: 5, ..quick_protocol() };
    assert!(benchmark_run(&manifest, None, &other, &out, &one, |_| {}).is_err());
}

#[test]
fn unreadable_dataset_is_recorded_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = tiny_manifest(dir.path());
    manifest.datasets.push(data::ManifestEntry {
        name: "ghost".into(),
        path: dir.path().join("missing.libsvm"),
        format: data::DataFormat::Libsvm,
        task: TaskKind::Binary,
        stretch: false,
    });
    let only_lr = CellFilter { dataset: None, method: Some(MethodSpec::LR) };
    let r = benchmark_run(&manifest, None, &quick_protocol(), &dir.path().join("out"), &only_lr, |_| {}).unwrap();
    assert_eq!(r.cells.len(), 2);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].0, "ghost");
}
