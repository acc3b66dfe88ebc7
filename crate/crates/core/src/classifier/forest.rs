use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, DecisionTree, Matrix, Scenario, Transform, TreeConfig};
use crate::seed;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub scenario: Scenario,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, tree: TreeConfig::default(), scenario: Scenario::Raw }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    /// Arity of raw input rows.
    pub n_features: usize,
    pub transform: Transform,
    pub trees: Vec<DecisionTree>,
    pub oob_error: f64,
    pub seed: u64,
}

impl ForestModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let model: ForestModel = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::ModelVersion(model.format_version).to_string());
        }
        Ok(model)
    }
}

/// A trained forest and the out-of-bag vote fraction of each training row
/// (`None` for rows that were in every bootstrap sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ForestFit {
    pub model: ForestModel,
    pub oob_proba: Vec<Option<f64>>,
}

/// Bagged CART forest. Tree `t` draws its bootstrap sample and feature
/// subsets from its own stream `derive_index(seed, t)`, so the result does
/// not depend on how trees are scheduled across threads.
pub fn train_forest(x: &Matrix, y: &[bool], config: &ForestConfig, seed: u64) -> Result<ForestFit, ClassifierError> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(ClassifierError::LengthMismatch(n, y.len()));
    }
    let pos = y.iter().filter(|&&c| c).count();
    if pos < 2 || n - pos < 2 {
        return Err(ClassifierError::DegenerateInput(format!("need two rows per class, have {pos} and {}", n - pos)));
    }
    if config.n_trees == 0 {
        return Err(ClassifierError::DegenerateInput("n_trees is zero".into()));
    }
    if x.n_cols() == 0 || !x.is_finite() {
        return Err(ClassifierError::DegenerateInput("features must be finite and non-empty".into()));
    }
    let transform = Transform::fit(config.scenario, x)?;
    let z = transform.apply(x);

    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_index(seed, t as u64));
            let mut in_bag = vec![false; n];
            let sample: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            (DecisionTree::fit(&z, y, &sample, &config.tree, &mut rng), in_bag)
        })
        .collect();

    let mut votes = vec![0usize; n];
    let mut seen = vec![0usize; n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            seen[i] += 1;
            votes[i] += tree.predict(z.row(i)) as usize;
        }
    }
    let oob_proba: Vec<Option<f64>> =
        (0..n).map(|i| (seen[i] > 0).then(|| votes[i] as f64 / seen[i] as f64)).collect();
    let (wrong, counted) = oob_proba.iter().zip(y).fold((0usize, 0usize), |(w, c), (p, &truth)| match p {
        Some(p) => (w + ((*p > 0.5) != truth) as usize, c + 1),
        None => (w, c),
    });
    let oob_error = if counted == 0 { 0.0 } else { wrong as f64 / counted as f64 };

    let model = ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        n_features: x.n_cols(),
        transform,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        oob_error,
        seed,
    };
    Ok(ForestFit { model, oob_proba })
}

/// Fraction of trees voting EFOS for one raw feature row.
pub fn predict_proba(model: &ForestModel, row: &[f64]) -> Result<f64, ClassifierError> {
    if row.len() != model.n_features {
        return Err(ClassifierError::ArityMismatch { expected: model.n_features, got: row.len() });
    }
    let z = model.transform.apply_row(row);
    let votes = model.trees.iter().filter(|t| t.predict(&z)).count();
    Ok(votes as f64 / model.trees.len() as f64)
}

/// Strict majority vote.
pub fn predict_class(model: &ForestModel, row: &[f64]) -> Result<bool, ClassifierError> {
    Ok(predict_proba(model, row)? > 0.5)
}

impl ForestModel {
    /// Probabilities for every row, computed in parallel, in row order.
    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<f64>, ClassifierError> {
        if x.n_cols() != self.n_features && x.n_rows() > 0 {
            return Err(ClassifierError::ArityMismatch { expected: self.n_features, got: x.n_cols() });
        }
        (0..x.n_rows()).into_par_iter().map(|i| predict_proba(self, x.row(i))).collect()
    }
}
