use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{predict_proba, ForestModel, Matrix, PcaModel};
use crate::seed;

/// Noise standard deviation as a fraction of each column's mean.
pub const DEFAULT_NOISE_SCALE: f64 = 0.2;

fn ranked(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// For each feature on its own: add `N(0, (noise_scale * |column mean|)^2)`
/// noise to that column of `sample`, and report the root-mean-square change
/// in forest probability. Sorted by decreasing effect.
pub fn perturbation_importance(model: &ForestModel, sample: &Matrix, noise_scale: f64, seed: u64) -> Vec<(usize, f64)> {
    let n = sample.n_rows();
    if n == 0 {
        return (0..sample.n_cols()).map(|j| (j, 0.0)).collect();
    }
    let base: Vec<f64> = (0..n).map(|i| predict_proba(model, sample.row(i)).expect("arity checked by caller")).collect();
    let effects = (0..sample.n_cols())
        .into_par_iter()
        .map(|j| {
            let mean = sample.column(j).iter().sum::<f64>() / n as f64;
            let sd = noise_scale * mean.abs();
            if sd == 0.0 {
                return (j, 0.0);
            }
            let noise = Normal::new(0.0, sd).expect("finite sd");
            let mut rng = seed::rng(seed::derive_index(seed, j as u64));
            let mut row = vec![0.0; sample.n_cols()];
            let mut ss = 0.0;
            for (i, b) in base.iter().enumerate() {
                row.copy_from_slice(sample.row(i));
                row[j] += noise.sample(&mut rng);
                let d = predict_proba(model, &row).expect("same arity") - b;
                ss += d * d;
            }
            (j, (ss / n as f64).sqrt())
        })
        .collect();
    ranked(effects)
}

/// Absolute loadings of the first principal component, largest first.
pub fn pca_importance(model: &PcaModel) -> Vec<(usize, f64)> {
    match model.components.first() {
        Some(c) => ranked(c.iter().map(|w| w.abs()).enumerate().collect()),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{pca_fit, train_forest, ForestConfig, TreeConfig};

    fn data() -> (Matrix, Vec<bool>) {
        // Feature 0 decides the class; feature 1 is constant.
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [i as f64, 3.0]).collect();
        (Matrix::from_rows(&rows), (0..60).map(|i| i >= 30).collect())
    }

    #[test]
    fn unused_feature_has_zero_effect() {
        let (x, y) = data();
        let cfg = ForestConfig { n_trees: 10, tree: TreeConfig { mtry: Some(2), ..Default::default() }, ..Default::default() };
        let model = train_forest(&x, &y, &cfg, 2).unwrap().model;
        assert!(model.trees.iter().all(|t| !t.uses_feature(1)));
        let imp = perturbation_importance(&model, &x, DEFAULT_NOISE_SCALE, 4);
        assert_eq!(imp[0].0, 0);
        assert!(imp[0].1 > 0.0);
        assert_eq!(imp[1], (1, 0.0));
        assert_eq!(imp, perturbation_importance(&model, &x, DEFAULT_NOISE_SCALE, 4));
    }

    #[test]
    fn duplicated_rows_keep_ranking() {
        let (x, y) = data();
        let model = train_forest(&x, &y, &ForestConfig { n_trees: 10, ..Default::default() }, 2).unwrap().model;
        let idx: Vec<usize> = (0..60).chain([10, 40, 40]).collect();
        let a = perturbation_importance(&model, &x, DEFAULT_NOISE_SCALE, 4);
        let b = perturbation_importance(&model, &x.select_rows(&idx), DEFAULT_NOISE_SCALE, 4);
        assert_eq!(a.iter().map(|p| p.0).collect::<Vec<_>>(), b.iter().map(|p| p.0).collect::<Vec<_>>());
    }

    #[test]
    fn pca_loadings() {
        let m = Matrix::from_rows(&[[1.0, 1.0, 4.0], [2.0, 2.0, 4.0], [4.0, 4.0, 4.0]]);
        let imp = pca_importance(&pca_fit(&m).unwrap());
        assert!((imp[0].1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4 && (imp[1].1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert_eq!(imp[2], (2, 0.0));
        let ss: f64 = imp.iter().map(|p| p.1 * p.1).sum();
        assert!((ss - 1.0).abs() < 1e-12);
    }
}
