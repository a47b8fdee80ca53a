//! Binary, one-vs-all multiclass and regression predictors over fitted RBF models.

use serde::{Deserialize, Serialize};

use crate::data::{apply_scaling, fit_scaling, Dataset, ScalingParams};
use crate::error::{Error, Result};
use crate::kernel::{RbfModel, Task};
use crate::solvers::{fit, training_basis, FitTrace, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Binary,
    Multiclass,
    Regression,
}

/// A trained predictor. Points passed to `predict_*` are in the original
/// feature space; the stored scaling (if any) is applied once per call.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    kind: PredictorKind,
    models: Vec<RbfModel>,
    /// Binary: `[negative, positive]`. Multiclass: one label per member model.
    class_labels: Vec<f64>,
    scaling: Option<ScalingParams>,
}

/// Predictor together with the trace of every member fit.
#[derive(Debug, Clone)]
pub struct Trained {
    pub predictor: Predictor,
    pub traces: Vec<FitTrace>,
}

impl Predictor {
    pub fn new(
        kind: PredictorKind,
        models: Vec<RbfModel>,
        class_labels: Vec<f64>,
        scaling: Option<ScalingParams>,
    ) -> Result<Self> {
        let expected_models = match kind {
            PredictorKind::Binary | PredictorKind::Regression => 1,
            PredictorKind::Multiclass => class_labels.len(),
        };
        if models.len() != expected_models || models.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{kind:?} predictor needs {expected_models} member model(s), got {}",
                models.len()
            )));
        }
        match kind {
            PredictorKind::Binary if class_labels.len() != 2 => {
                return Err(Error::InvalidParameter("binary predictor needs exactly two labels".into()))
            }
            PredictorKind::Multiclass if class_labels.len() < 3 => {
                return Err(Error::InvalidParameter("multiclass predictor needs at least three labels".into()))
            }
            PredictorKind::Regression if !class_labels.is_empty() => {
                return Err(Error::InvalidParameter("regression predictor takes no labels".into()))
            }
            _ => {}
        }
        let mut sorted = class_labels.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() != class_labels.len() {
            return Err(Error::InvalidParameter("class labels must be distinct".into()));
        }
        let d = models[0].dim();
        if models.iter().any(|m| m.dim() != d) {
            return Err(Error::InvalidParameter("member models differ in dimension".into()));
        }
        if let Some(s) = &scaling {
            if s.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
            }
        }
        Ok(Predictor {
            kind,
            models,
            class_labels,
            scaling,
        })
    }

    pub fn kind(&self) -> PredictorKind {
        self.kind
    }

    pub fn models(&self) -> &[RbfModel] {
        &self.models
    }

    pub fn class_labels(&self) -> &[f64] {
        &self.class_labels
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn width(&self) -> f64 {
        self.models[0].width()
    }

    fn scaled(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match &self.scaling {
            Some(s) => s.apply_point(x),
            None => Ok(x.to_vec()),
        }
    }

    /// `u(x)` for binary and regression predictors.
    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        if self.kind == PredictorKind::Multiclass {
            return Err(Error::InvalidParameter(
                "multiclass predictors have one score per class; use scores()".into(),
            ));
        }
        self.models[0].eval(&self.scaled(x)?)
    }

    /// One score per member model.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaled(x)?;
        self.models.iter().map(|m| m.eval(&z)).collect()
    }

    /// Binary: positive label iff `u(x) >= 0`. Multiclass: label of the largest
    /// member score, ties to the lowest class index.
    pub fn predict_label(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            PredictorKind::Regression => Err(Error::InvalidParameter(
                "regression predictors have no labels; use predict_value()".into(),
            )),
            PredictorKind::Binary => {
                let u = self.predict_value(x)?;
                Ok(if u >= 0.0 { self.class_labels[1] } else { self.class_labels[0] })
            }
            PredictorKind::Multiclass => {
                let scores = self.scores(x)?;
                Ok(self.class_labels[argmax(&scores)])
            }
        }
    }

    /// Label for classifiers, value for regressors.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            PredictorKind::Regression => self.predict_value(x),
            _ => self.predict_label(x),
        }
    }
}

/// First index of the maximum; NaN scores never win.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Fits the training-set scaling, then trains on the scaled data.
pub fn train(dataset: &Dataset, width: f64, config: &SolverConfig) -> Result<Trained> {
    let scaling = fit_scaling(dataset);
    let scaled = apply_scaling(&scaling, dataset)?;
    train_inner(&scaled, width, config, Some(scaling))
}

/// Trains on `dataset` as given; predictions apply no scaling.
pub fn train_prescaled(dataset: &Dataset, width: f64, config: &SolverConfig) -> Result<Trained> {
    train_inner(dataset, width, config, None)
}

fn train_inner(dataset: &Dataset, width: f64, config: &SolverConfig, scaling: Option<ScalingParams>) -> Result<Trained> {
    if dataset.targets().iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite { what: "targets" });
    }
    let basis = training_basis(dataset, width)?;
    let Some(labels) = dataset.label_map() else {
        let f = fit(dataset, &basis, config)?;
        let model = f.model.with_scaling(scaling.clone());
        return Ok(Trained {
            predictor: Predictor::new(PredictorKind::Regression, vec![model], vec![], scaling)?,
            traces: vec![f.trace],
        });
    };
    match labels.len() {
        0 | 1 => Err(Error::InvalidDataset(format!(
            "classification needs at least two classes, found {}",
            labels.len()
        ))),
        2 => {
            let coded = code_one_vs_rest(dataset, labels[1])?;
            let f = fit(&coded, &basis, config)?;
            let model = with_task(f.model, Task::Binary).with_scaling(scaling.clone());
            Ok(Trained {
                predictor: Predictor::new(PredictorKind::Binary, vec![model], labels.to_vec(), scaling)?,
                traces: vec![f.trace],
            })
        }
        _ => {
            let mut models = Vec::with_capacity(labels.len());
            let mut traces = Vec::with_capacity(labels.len());
            for &label in labels {
                let coded = code_one_vs_rest(dataset, label)?;
                let f = fit(&coded, &basis, config)?;
                models.push(with_task(f.model, Task::OvaMember).with_scaling(scaling.clone()));
                traces.push(f.trace);
            }
            Ok(Trained {
                predictor: Predictor::new(PredictorKind::Multiclass, models, labels.to_vec(), scaling)?,
                traces,
            })
        }
    }
}

fn with_task(model: RbfModel, task: Task) -> RbfModel {
    let scaling = model.scaling().cloned();
    RbfModel::new(model.basis().clone(), model.weights().to_vec(), task)
        .expect("weights already validated")
        .with_scaling(scaling)
}

/// `u` on a `resolution x resolution` grid spanning `bounds` (endpoints included).
pub fn surface_grid(predictor: &Predictor, member: usize, bounds: [f64; 4], resolution: usize) -> Result<Vec<[f64; 3]>> {
    if predictor.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: predictor.dim() });
    }
    let model = predictor
        .models()
        .get(member)
        .ok_or(Error::IndexOutOfRange { index: member, len: predictor.models().len() })?;
    if resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be >= 2".into()));
    }
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let x = [at(bounds[0], bounds[1], i), at(bounds[2], bounds[3], j)];
            let z = match predictor.scaling() {
                Some(s) => s.apply_point(&x)?,
                None => x.to_vec(),
            };
            out.push([x[0], x[1], model.eval(&z)?]);
        }
    }
    Ok(out)
}

/// `+1` where the target equals `positive`, `-1` elsewhere.
pub fn code_one_vs_rest(dataset: &Dataset, positive: f64) -> Result<Dataset> {
    dataset.with_targets(
        dataset
            .targets()
            .iter()
            .map(|&t| if t == positive { 1.0 } else { -1.0 })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::two_moons;
    use crate::kernel::RbfBasis;
    use crate::solvers::Method;
    use crate::variational::Mode;

    fn const_model(w: Vec<f64>, rows: &[Vec<f64>]) -> RbfModel {
        RbfModel::new(RbfBasis::from_rows(rows, 1.0).unwrap(), w, Task::OvaMember).unwrap()
    }

    #[test]
    fn binary_tie_goes_positive() {
        let m = const_model(vec![0.0], &[vec![0.0]]);
        let p = Predictor::new(PredictorKind::Binary, vec![m], vec![-1.0, 1.0], None).unwrap();
        assert_eq!(p.predict_label(&[0.3]).unwrap(), 1.0);
        assert_eq!(p.predict_value(&[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn multiclass_argmax_and_ties() {
        assert_eq!(argmax(&[0.2, 0.9, -0.1]), 1);
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.1, 0.0]), 1);
        let rows = [vec![0.0]];
        let models = vec![
            const_model(vec![0.2], &rows),
            const_model(vec![0.9], &rows),
            const_model(vec![-0.1], &rows),
        ];
        let p = Predictor::new(PredictorKind::Multiclass, models, vec![10.0, 20.0, 30.0], None).unwrap();
        assert_eq!(p.predict_label(&[0.0]).unwrap(), 20.0);
        assert!(p.predict_value(&[0.0]).is_err());
    }

    #[test]
    fn predictor_shape_checks() {
        let rows = [vec![0.0]];
        let m = const_model(vec![1.0], &rows);
        assert!(Predictor::new(PredictorKind::Binary, vec![m.clone()], vec![1.0], None).is_err());
        assert!(Predictor::new(PredictorKind::Multiclass, vec![m.clone(), m.clone()], vec![1.0, 2.0], None).is_err());
        assert!(Predictor::new(PredictorKind::Binary, vec![m.clone()], vec![1.0, 1.0], None).is_err());
        let p = Predictor::new(PredictorKind::Regression, vec![m], vec![], None).unwrap();
        assert!(p.predict_value(&[0.0, 1.0]).is_err());
        assert!(p.predict_label(&[0.0]).is_err());
    }

    #[test]
    fn train_rejects_single_class() {
        let ds = Dataset::from_rows("one", &[vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap().into_classification();
        let cfg = SolverConfig::new(Mode::Lr, Method::Direct);
        assert!(matches!(train(&ds, 1.0, &cfg), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn nan_targets_are_rejected() {
        assert!(matches!(
            Dataset::from_rows("nan", &[vec![0.0]], vec![f64::NAN]),
            Err(Error::NonFinite { what: "targets" })
        ));
    }

    #[test]
    fn interpolating_predictor_returns_training_targets() {
        let ds = Dataset::from_rows("r", &[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]], vec![0.5, -1.0, 2.0]).unwrap();
        let cfg = SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(0.0).with_eta(0.0);
        let t = train(&ds, 2.0, &cfg).unwrap();
        for (x, y) in ds.rows().zip(ds.targets()) {
            assert!((t.predictor.predict_value(x).unwrap() - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn scaling_applied_once() {
        let ds = Dataset::from_rows("r", &[vec![10.0], vec![20.0], vec![30.0]], vec![1.0, 0.0, 1.0]).unwrap();
        let cfg = SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(0.0);
        let t = train(&ds, 2.0, &cfg).unwrap();
        let m = &t.predictor.models()[0];
        let x = [25.0];
        assert_eq!(t.predictor.predict_value(&x).unwrap(), m.eval(&[0.75]).unwrap());
    }

    #[test]
    fn two_class_multiclass_route_matches_binary() {
        let ds = two_moons(60, 0.1, 7);
        let cfg = SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(0.01);
        let binary = train_prescaled(&ds, 4.0, &cfg).unwrap().predictor;
        assert_eq!(binary.kind(), PredictorKind::Binary);
        // members fitted on y and -y give u2 = -u1 exactly for the direct solver
        let pos = train_prescaled(&code_one_vs_rest(&ds, 1.0).unwrap(), 4.0, &cfg).unwrap();
        let neg = train_prescaled(&code_one_vs_rest(&ds, -1.0).unwrap(), 4.0, &cfg).unwrap();
        for x in ds.rows() {
            let u1 = pos.predictor.predict_value(x).unwrap();
            let u2 = neg.predictor.predict_value(x).unwrap();
            let ova = if argmax(&[u2, u1]) == 1 { 1.0 } else { -1.0 };
            if u1 != 0.0 {
                assert_eq!(ova, binary.predict_label(x).unwrap());
            }
        }
    }
}
