//! Per-emitter invoice features, Box-Cox/PCA transforms, a CART random
//! forest, and the evaluation and importance measures used on it.

mod eval;
mod features;
mod forest;
mod importance;
mod matrix;
mod sampling;
mod transform;
mod tree;
mod yearly;

use thiserror::Error;

pub use eval::{
    classify_yearly, confusion_from, confusion_metrics, proba_histogram, roc_auc, write_proba_histogram_csv,
    write_scores_csv, ConfusionMetrics, EvalReport, HistogramBins, Roc,
};
pub use features::{build_features, feature_matrix, FeatureRow, FEATURE_NAMES};
pub use forest::{predict_class, predict_proba, train_forest, ForestConfig, ForestFit, ForestModel, MODEL_FORMAT_VERSION};
pub use importance::{pca_importance, perturbation_importance, DEFAULT_NOISE_SCALE};
pub use matrix::Matrix;
pub use sampling::{resample_minority, undersample, Balanced, RowClass};
pub use transform::{
    box_cox, box_cox_apply, box_cox_fit, pca_apply, pca_fit, BoxCoxParams, PcaModel, Scenario, Transform,
};
pub use tree::{DecisionTree, TreeConfig, TreeNode};
pub use yearly::{train_year, unlabeled_probas, year_seeds, YearFit};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("need at least {needed} unlabeled rows, found {found}")]
    InsufficientUnlabeled { needed: usize, found: usize },
    #[error("no definitive EFOS rows to train on")]
    NoPositives,
    #[error("class `{0}` is empty")]
    EmptyClass(&'static str),
    #[error("PCA needs at least two rows, got {0}")]
    DegenerateMatrix(usize),
    #[error("degenerate training input: {0}")]
    DegenerateInput(String),
    #[error("row has {got} features, model expects {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("all confusion counts are zero")]
    AllZero,
    #[error("scores contain a single class")]
    SingleClass,
    #[error("scores and classes differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
}
