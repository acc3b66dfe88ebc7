use std::collections::BTreeMap;

use super::{
    build_features, feature_matrix, train_forest, undersample, Balanced, ClassifierError, FeatureRow, ForestConfig,
    ForestFit, RowClass,
};
use crate::ingest::Dataset;
use crate::seed;
use crate::types::TaxpayerIdx;

/// Forest trained on one year of features.
#[derive(Debug, Clone)]
pub struct YearFit {
    pub year: i32,
    pub fit: ForestFit,
    pub features: Vec<FeatureRow>,
    /// Indices into `features` used for training.
    pub training: Balanced,
}

/// Seeds for `year` derived from one root: `(undersample, forest)`.
pub fn year_seeds(root: u64, year: i32) -> (u64, u64) {
    (
        seed::derive_index(seed::derive(root, "undersample"), year as u64),
        seed::derive_index(seed::derive(root, "forest"), year as u64),
    )
}

/// Undersampled training on definitive EFOS against unlabeled taxpayers.
pub fn train_year(ds: &Dataset, year: i32, config: &ForestConfig, root_seed: u64) -> Result<YearFit, ClassifierError> {
    let features = build_features(ds, year);
    let classes: Vec<RowClass> = features.iter().map(|f| RowClass::from_label(ds.label(f.taxpayer))).collect();
    let (us, fs) = year_seeds(root_seed, year);
    let training = undersample(&classes, us)?;
    let x = feature_matrix(&features).select_rows(&training.rows);
    let fit = train_forest(&x, &training.classes, config, fs)?;
    Ok(YearFit { year, fit, features, training })
}

impl YearFit {
    /// Probability for every feature row, in row order.
    pub fn scores(&self) -> Vec<(TaxpayerIdx, f64)> {
        let probs = self.fit.model.predict_all(&feature_matrix(&self.features)).expect("same feature arity");
        self.features.iter().map(|f| f.taxpayer).zip(probs).collect()
    }
}

/// Per-year scores of taxpayers with no EFOS label.
pub fn unlabeled_probas(ds: &Dataset, fits: &[YearFit]) -> BTreeMap<(TaxpayerIdx, i32), f64> {
    let mut out = BTreeMap::new();
    for f in fits {
        for (t, p) in f.scores() {
            if ds.label(t).is_none() {
                out.insert((t, f.year), p);
            }
        }
    }
    out
}
