//! Datasets, the libsvm and CSV readers, min-max scaling and fold splitting.

use std::fmt::Write as _;
use std::io::{BufRead, Read};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major feature matrix plus targets.
///
/// `label_map` is present exactly when the targets are class labels; it lists
/// the distinct label values in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    dim: usize,
    targets: Vec<f64>,
    label_map: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Vec<f64>, dim: usize, targets: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be >= 1".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidDataset("dataset is empty".into()));
        }
        if features.len() != targets.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                targets.len(),
                dim
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "features" });
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "targets" });
        }
        Ok(Dataset {
            name: name.into(),
            features,
            dim,
            targets,
            label_map: None,
        })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDataset("rows have differing lengths".into()));
        }
        Self::new(name, rows.concat(), dim, targets)
    }

    /// Marks the targets as class labels.
    pub fn into_classification(mut self) -> Self {
        let mut labels = self.targets.clone();
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        self.label_map = Some(labels);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn label_map(&self) -> Option<&[f64]> {
        self.label_map.as_deref()
    }

    pub fn is_classification(&self) -> bool {
        self.label_map.is_some()
    }

    /// Same features, different targets; drops any label map.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Dataset::new(self.name.clone(), self.features.clone(), self.dim, targets)
    }

    /// Rows at `indices`, in that order. The label map is carried over unchanged.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset {
            name: self.name.clone(),
            features,
            dim: self.dim,
            targets,
            label_map: self.label_map.clone(),
        }
    }

    /// Rescales the target column to [0, 1]. Regression benchmarks report MSE in
    /// these units.
    pub fn with_unit_targets(&self) -> Dataset {
        let (lo, hi) = self
            .targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
        let span = hi - lo;
        let targets = self
            .targets
            .iter()
            .map(|&t| if span > 0.0 { (t - lo) / span } else { 0.0 })
            .collect();
        Dataset {
            targets,
            label_map: None,
            ..self.clone()
        }
    }
}

/// Per-feature `(min, max)` learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub ranges: Vec<(f64, f64)>,
}

impl ScalingParams {
    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// Maps one point into the scaled space. Constant features map to 0; values
    /// outside the training range are not clipped.
    pub fn apply_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ranges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ranges.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }
}

pub fn fit_scaling(dataset: &Dataset) -> ScalingParams {
    let d = dataset.dim();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for row in dataset.rows() {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    ScalingParams { ranges }
}

pub fn apply_scaling(params: &ScalingParams, dataset: &Dataset) -> Result<Dataset> {
    if params.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: dataset.dim(),
        });
    }
    let mut features = Vec::with_capacity(dataset.features.len());
    for row in dataset.rows() {
        features.extend(params.apply_point(row)?);
    }
    Ok(Dataset {
        features,
        ..dataset.clone()
    })
}

/// Reads libsvm sparse text: `label idx:val idx:val ...` with 1-based, strictly
/// increasing indices. Blank lines and `#` comment lines are ignored; every other
/// line either parses or fails with its line number.
pub fn parse_libsvm<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label = parse_finite(label_tok).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("invalid label {label_tok:?}"),
        })?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected idx:value, got {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "feature indices are 1-based".into(),
                });
            }
            if idx <= last {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("feature index {idx} does not increase (previous {last})"),
                });
            }
            let val = parse_finite(val).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("invalid feature value {val:?}"),
            })?;
            if let Some(dim) = expected_dim {
                if idx > dim {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("feature index {idx} exceeds dimension {dim}"),
                    });
                }
            }
            last = idx;
            row.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push(row);
        targets.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data lines".into(),
        });
    }
    let dim = expected_dim.unwrap_or(max_index).max(1);
    let mut features = vec![0.0; rows.len() * dim];
    for (i, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            features[i * dim + idx - 1] = val;
        }
    }
    Dataset::new("", features, dim, targets)
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// libsvm text for `dataset`, zero entries omitted. Floats use the shortest
/// representation that round-trips.
pub fn to_libsvm(dataset: &Dataset) -> String {
    let mut out = String::new();
    for (row, y) in dataset.rows().zip(dataset.targets()) {
        let _ = write!(out, "{y:?}");
        for (k, v) in row.iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{v:?}", k + 1);
            }
        }
        out.push('\n');
    }
    out
}

/// CSV with a `x1,...,xd,y` header row.
pub fn to_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    for k in 1..=dataset.dim() {
        let _ = write!(out, "x{k},");
    }
    out.push_str("y\n");
    for (row, y) in dataset.rows().zip(dataset.targets()) {
        for v in row {
            let _ = write!(out, "{v:?},");
        }
        let _ = writeln!(out, "{y:?}");
    }
    out
}

/// Guesses the task from the targets: integer labels with at most
/// `MAX_INFERRED_CLASSES` distinct values are classes, anything else is regression.
pub fn infer_task(dataset: &Dataset) -> TaskKind {
    let mut labels = dataset.targets().to_vec();
    if labels.iter().any(|t| t.fract() != 0.0) {
        return TaskKind::Regression;
    }
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    match labels.len() {
        0..=2 => TaskKind::Binary,
        m if m <= MAX_INFERRED_CLASSES => TaskKind::Multiclass,
        _ => TaskKind::Regression,
    }
}

pub const MAX_INFERRED_CLASSES: usize = 50;

/// CSV with the target in the last column. A first row that does not parse as
/// numbers is treated as a header.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let values: Option<Vec<f64>> = record.iter().map(parse_finite).collect();
        let values = match values {
            Some(v) => v,
            None if i == 0 => continue,
            None => {
                return Err(Error::Parse {
                    line,
                    message: "non-numeric or non-finite field".into(),
                })
            }
        };
        if values.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one feature column and a target column".into(),
            });
        }
        let d = values.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", prev + 1, d + 1),
                })
            }
            _ => {}
        }
        features.extend_from_slice(&values[..d]);
        targets.push(values[d]);
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "no data rows".into(),
    })?;
    Dataset::new("", features, dim, targets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Libsvm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Binary,
    Multiclass,
    Regression,
}

/// Reads a dataset file. Classification tasks get a label map.
pub fn load_dataset(path: &Path, format: DataFormat, task: TaskKind) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let ds = match format {
        DataFormat::Libsvm => parse_libsvm(reader, None)?,
        DataFormat::Csv => parse_csv(reader)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset { name, ..ds };
    Ok(match task {
        TaskKind::Regression => ds,
        _ => ds.into_classification(),
    })
}

/// `k` disjoint folds covering `0..n`: a seeded shuffle cut into contiguous
/// chunks whose sizes differ by at most one (larger chunks first).
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "fold count must satisfy 2 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Two interleaving half circles with Gaussian noise; labels -1 (upper moon)
/// and +1 (lower moon).
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_out = n / 2;
    let n_in = n - n_out;
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let step = |count: usize, i: usize| {
        if count > 1 {
            std::f64::consts::PI * i as f64 / (count - 1) as f64
        } else {
            0.0
        }
    };
    for i in 0..n_out {
        let t = step(n_out, i);
        rows.push([t.cos(), t.sin()]);
        targets.push(-1.0);
    }
    for i in 0..n_in {
        let t = step(n_in, i);
        rows.push([1.0 - t.cos(), 0.5 - t.sin()]);
        targets.push(1.0);
    }
    let normal = Normal::new(0.0, noise.max(0.0)).expect("valid normal");
    let mut features = Vec::with_capacity(2 * n);
    for r in &rows {
        for v in r {
            features.push(v + normal.sample(&mut rng));
        }
    }
    Dataset::new("two-moons", features, 2, targets)
        .expect("generated data is finite")
        .into_classification()
}

/// One entry of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub format: DataFormat,
    pub task: TaskKind,
    /// Marks cells whose results are reported but never gate anything.
    #[serde(default)]
    pub stretch: bool,
}

/// `name -> (path, format, task)` table read from TOML:
///
/// ```toml
/// [[dataset]]
/// name = "heart"
/// path = "heart.libsvm"
/// format = "libsvm"
/// task = "binary"
/// ```
///
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "dataset")]
    pub datasets: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in &mut manifest.datasets {
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
        }
        Ok(manifest)
    }

    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.datasets.iter().find(|e| e.name == name)
    }
}

impl ManifestEntry {
    pub fn load(&self) -> Result<Dataset> {
        let ds = load_dataset(&self.path, self.format, self.task)?;
        Ok(Dataset {
            name: self.name.clone(),
            ..ds
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn libsvm_basic_line() {
        let ds = parse_libsvm("+1 1:0.5 3:1.0\n".as_bytes(), Some(3)).unwrap();
        assert_eq!(ds.targets(), &[1.0]);
        assert_eq!(ds.row(0), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn libsvm_label_only_line() {
        let ds = parse_libsvm("-1\n+1 2:3\n".as_bytes(), None).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(0), &[0.0, 0.0]);
        assert_eq!(ds.row(1), &[0.0, 3.0]);
    }

    #[test]
    fn libsvm_errors_carry_line_numbers() {
        let err = parse_libsvm("1 1:2\n1 3:1 2:4\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_libsvm("1 1:2\n\n1 1-2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_libsvm("x 1:2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 0:2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 1:nan\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_libsvm("".as_bytes(), None).is_err());
        assert!(parse_libsvm("1 4:1\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let ds = parse_csv("a,b,y\n1,2,3\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.targets(), &[3.0, 6.0]);
        let ds = parse_csv("1,2,3\n4,5,6\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        let err = parse_csv("1,2,3\n4,x,6\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_csv("1,2,3\n4,5\n".as_bytes()).is_err());
    }

    #[test]
    fn scaling_examples() {
        let ds = Dataset::from_rows("t", &[vec![2.0, 7.0], vec![4.0, 7.0], vec![6.0, 7.0]], vec![0.0; 3]).unwrap();
        let p = fit_scaling(&ds);
        let s = apply_scaling(&p, &ds).unwrap();
        assert_eq!(s.features(), &[0.0, 0.0, 0.5, 0.0, 1.0, 0.0]);
        let again = apply_scaling(&fit_scaling(&s), &s).unwrap();
        assert_eq!(again.features(), s.features());
        // no clipping outside the training range
        assert_eq!(p.apply_point(&[8.0, 1.0]).unwrap(), vec![1.5, 0.0]);
    }

    #[test]
    fn fold_sizes() {
        let f = kfold_indices(10, 5, 1).unwrap();
        assert!(f.iter().all(|x| x.len() == 2));
        let f = kfold_indices(7, 5, 1).unwrap();
        assert_eq!(f.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2, 1, 1, 1]);
        assert!(kfold_indices(3, 5, 1).is_err());
        assert!(kfold_indices(3, 1, 1).is_err());
        assert_eq!(kfold_indices(50, 5, 9).unwrap(), kfold_indices(50, 5, 9).unwrap());
        assert_ne!(kfold_indices(50, 5, 9).unwrap(), kfold_indices(50, 5, 10).unwrap());
    }

    #[test]
    fn two_moons_shape() {
        let ds = two_moons(101, 0.1, 3);
        assert_eq!(ds.len(), 101);
        assert_eq!(ds.label_map(), Some(&[-1.0, 1.0][..]));
        assert_eq!(two_moons(50, 0.1, 3), two_moons(50, 0.1, 3));
    }

    #[test]
    fn manifest_paths_resolve_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.libsvm"), "1 1:0.5\n-1 1:0.25\n").unwrap();
        std::fs::write(
            dir.path().join("m.toml"),
            "[[dataset]]\nname = \"a\"\npath = \"a.libsvm\"\nformat = \"libsvm\"\ntask = \"binary\"\n",
        )
        .unwrap();
        let m = Manifest::load(&dir.path().join("m.toml")).unwrap();
        let ds = m.get("a").unwrap().load().unwrap();
        assert_eq!(ds.name(), "a");
        assert_eq!(ds.label_map(), Some(&[-1.0, 1.0][..]));
    }

    proptest! {
        #[test]
        fn libsvm_round_trip(rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), -1e6..1e6f64], 4), 1..20),
                             labels in prop::collection::vec(-3.0..3.0f64, 20)) {
            let targets = labels[..rows.len()].to_vec();
            let ds = Dataset::from_rows("r", &rows, targets).unwrap();
            let back = parse_libsvm(to_libsvm(&ds).as_bytes(), Some(4)).unwrap();
            prop_assert_eq!(back.features(), ds.features());
            prop_assert_eq!(back.targets(), ds.targets());
        }

        #[test]
        fn folds_partition(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let folds = kfold_indices(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
