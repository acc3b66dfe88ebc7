use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Matrix};

/// Input transform a forest is trained behind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Raw,
    BoxCox,
    Pca,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "raw" | "none" => Ok(Scenario::Raw),
            "boxcox" | "box_cox" => Ok(Scenario::BoxCox),
            "pca" => Ok(Scenario::Pca),
            other => Err(format!("unknown scenario `{other}` (expected raw, boxcox or pca)")),
        }
    }
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Raw => "raw",
            Scenario::BoxCox => "boxcox",
            Scenario::Pca => "pca",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxParams {
    pub lambda: Vec<f64>,
    /// Added before transforming so that the fitted minimum is 1.
    pub shift: Vec<f64>,
    /// Columns that were constant at fit time (left at `lambda = 1`).
    pub constant_columns: Vec<usize>,
}

const LAMBDA_STEPS: i32 = 400;

/// Box-Cox transform of a positive value.
#[inline]
pub fn box_cox(x: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        x.ln()
    } else {
        (x.powf(lambda) - 1.0) / lambda
    }
}

fn log_likelihood(xs: &[f64], sum_ln: f64, lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let ys: Vec<f64> = xs.iter().map(|&x| box_cox(x, lambda)).collect();
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    if !(var > 0.0 && var.is_finite()) {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * var.ln() + (lambda - 1.0) * sum_ln
}

/// Per column, the grid lambda in `[-2, 2]` (step 0.01) maximizing the
/// Box-Cox profile log-likelihood of the shifted column.
pub fn box_cox_fit(columns: &Matrix) -> BoxCoxParams {
    let p = columns.n_cols();
    let mut out = BoxCoxParams { lambda: vec![1.0; p], shift: vec![0.0; p], constant_columns: Vec::new() };
    for j in 0..p {
        let col = columns.column(j);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if min.is_finite() && min < 1.0 { 1.0 - min } else { 0.0 };
        out.shift[j] = shift;
        if col.is_empty() || min == max {
            out.constant_columns.push(j);
            continue;
        }
        let xs: Vec<f64> = col.iter().map(|x| x + shift).collect();
        let sum_ln: f64 = xs.iter().map(|x| x.ln()).sum();
        let mut best = (f64::NEG_INFINITY, 1.0);
        for k in 0..=LAMBDA_STEPS {
            let lambda = (k - LAMBDA_STEPS / 2) as f64 / 100.0;
            let ll = log_likelihood(&xs, sum_ln, lambda);
            if ll > best.0 {
                best = (ll, lambda);
            }
        }
        out.lambda[j] = best.1;
    }
    out
}

pub fn box_cox_apply_row(params: &BoxCoxParams, row: &[f64]) -> Vec<f64> {
    row.iter()
        .enumerate()
        .map(|(j, &x)| box_cox((x + params.shift[j]).max(1.0), params.lambda[j]))
        .collect()
}

/// Values below the fitted domain are clamped to its minimum.
pub fn box_cox_apply(params: &BoxCoxParams, columns: &Matrix) -> Matrix {
    let rows: Vec<Vec<f64>> = columns.rows().map(|r| box_cox_apply_row(params, r)).collect();
    Matrix::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Rows are unit-length components, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn explained_ratio(&self) -> Vec<f64> {
        let total: f64 = self.variances.iter().sum();
        self.variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
    }

    /// Smallest number of components whose explained ratio reaches `share`.
    pub fn components_for(&self, share: f64) -> usize {
        let mut acc = 0.0;
        for (k, r) in self.explained_ratio().iter().enumerate() {
            acc += r;
            if acc >= share {
                return k + 1;
            }
        }
        self.components.len().max(1)
    }

    pub fn project_row(&self, row: &[f64], k: usize) -> Vec<f64> {
        self.components[..k]
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect()
    }
}

/// Eigen-decomposition of the sample covariance. Each component's
/// largest-magnitude loading is made positive.
pub fn pca_fit(matrix: &Matrix) -> Result<PcaModel, ClassifierError> {
    let (n, p) = (matrix.n_rows(), matrix.n_cols());
    if n < 2 {
        return Err(ClassifierError::DegenerateMatrix(n));
    }
    let mean: Vec<f64> = (0..p).map(|j| matrix.column(j).iter().sum::<f64>() / n as f64).collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for row in matrix.rows() {
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(p);
    let mut variances = Vec::with_capacity(p);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pivot = v.iter().copied().enumerate().fold((0, 0.0f64), |best, (i, x)| {
            if x.abs() > best.1.abs() + 1e-12 {
                (i, x)
            } else {
                best
            }
        });
        let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
        for x in v.iter_mut() {
            *x = sign * *x / norm;
        }
        components.push(v);
        variances.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel { mean, components, variances })
}

/// Scores on the first `k` components.
pub fn pca_apply(model: &PcaModel, matrix: &Matrix, k: usize) -> Matrix {
    let k = k.min(model.components.len());
    let rows: Vec<Vec<f64>> = matrix.rows().map(|r| model.project_row(r, k)).collect();
    Matrix::from_vec(matrix.n_rows(), k, rows.concat())
}

/// Fitted input transform stored inside a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    BoxCox { params: BoxCoxParams },
    Pca { model: PcaModel, k: usize },
}

/// PCA keeps the components explaining this share of variance.
pub const PCA_VARIANCE_SHARE: f64 = 0.99;

impl Transform {
    pub fn fit(scenario: Scenario, data: &Matrix) -> Result<Self, ClassifierError> {
        Ok(match scenario {
            Scenario::Raw => Transform::None,
            Scenario::BoxCox => Transform::BoxCox { params: box_cox_fit(data) },
            Scenario::Pca => {
                let model = pca_fit(data)?;
                let k = model.components_for(PCA_VARIANCE_SHARE);
                Transform::Pca { model, k }
            }
        })
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            Transform::None => Scenario::Raw,
            Transform::BoxCox { .. } => Scenario::BoxCox,
            Transform::Pca { .. } => Scenario::Pca,
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        match self {
            Transform::None => row.to_vec(),
            Transform::BoxCox { params } => box_cox_apply_row(params, row),
            Transform::Pca { model, k } => model.project_row(row, *k),
        }
    }

    pub fn apply(&self, data: &Matrix) -> Matrix {
        match self {
            Transform::None => data.clone(),
            Transform::BoxCox { params } => box_cox_apply(params, data),
            Transform::Pca { model, k } => pca_apply(model, data, *k),
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, LogNormal, Normal};

    use super::*;
    use crate::seed;

    #[test]
    fn formula_at_one_and_zero() {
        for x in [1.0, 2.5, 1e6] {
            assert_relative_eq!(box_cox(x, 1.0), x - 1.0, max_relative = 1e-12);
            assert_eq!(box_cox(x, 0.0), x.ln());
        }
    }

    #[test]
    fn lognormal_columns_fit_lambda_near_zero() {
        for s in 0..10 {
            let mut rng = seed::rng(s);
            let ln = LogNormal::new(5.0, 1.0).unwrap();
            let col: Vec<[f64; 1]> = (0..2000).map(|_| [ln.sample(&mut rng)]).collect();
            let p = box_cox_fit(&Matrix::from_rows(&col));
            assert!(p.lambda[0].abs() <= 0.15, "seed {s}: lambda {}", p.lambda[0]);
        }
    }

    #[test]
    fn constant_column_gets_identity() {
        let m = Matrix::from_rows(&[[3.0, 1.0], [3.0, 2.0], [3.0, 5.0]]);
        let p = box_cox_fit(&m);
        assert_eq!(p.lambda[0], 1.0);
        assert_eq!(p.constant_columns, vec![0]);
    }

    #[test]
    fn shift_makes_minimum_one() {
        let m = Matrix::from_rows(&[[-4.0], [0.0], [10.0]]);
        let p = box_cox_fit(&m);
        assert_eq!(p.shift[0], 5.0);
    }

    fn assert_orthonormal(m: &PcaModel) {
        for (a, ca) in m.components.iter().enumerate() {
            for (b, cb) in m.components.iter().enumerate() {
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9, "components {a},{b}: {dot}");
            }
        }
        assert!(m.variances.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn perfectly_correlated_pair() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [5.0, 5.0]]);
        let pca = pca_fit(&m).unwrap();
        assert_orthonormal(&pca);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(pca.components[0][0], h, epsilon = 1e-12);
        assert_relative_eq!(pca.components[0][1], h, epsilon = 1e-12);
        assert!(pca.variances[1].abs() < 1e-12);
    }

    #[test]
    fn isotropic_data_has_equal_variances() {
        let mut rng = seed::rng(4);
        let n = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<[f64; 3]> = (0..20_000).map(|_| [n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng)]).collect();
        let pca = pca_fit(&Matrix::from_rows(&rows)).unwrap();
        assert_orthonormal(&pca);
        for v in &pca.variances {
            assert!((v - 1.0).abs() < 0.05, "{:?}", pca.variances);
        }
    }

    #[test]
    fn full_reconstruction() {
        let mut rng = seed::rng(9);
        let rows: Vec<[f64; 4]> = (0..50)
            .map(|_| {
                let a: f64 = rng.random_range(-5.0..5.0);
                [a, 2.0 * a + rng.random_range(-1.0..1.0), rng.random_range(0.0..100.0), 7.0]
            })
            .collect();
        let m = Matrix::from_rows(&rows);
        let pca = pca_fit(&m).unwrap();
        assert_orthonormal(&pca);
        let scores = pca_apply(&pca, &m, 4);
        for i in 0..m.n_rows() {
            for j in 0..4 {
                let back: f64 = (0..4).map(|k| scores.get(i, k) * pca.components[k][j]).sum::<f64>() + pca.mean[j];
                let centered = m.get(i, j) - pca.mean[j];
                assert!((back - m.get(i, j)).abs() <= 1e-9 * centered.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pca_needs_two_rows() {
        assert_eq!(pca_fit(&Matrix::from_rows(&[[1.0, 2.0]])), Err(ClassifierError::DegenerateMatrix(1)));
    }

    proptest! {
        #[test]
        fn box_cox_strictly_increasing(a in 1.0f64..1e6, b in 1.0f64..1e6, k in -200i32..=200) {
            prop_assume!(a < b);
            let l = k as f64 / 100.0;
            prop_assert!(box_cox(a, l) < box_cox(b, l));
        }

        #[test]
        fn pca_invariants_hold(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let pca = pca_fit(&Matrix::from_rows(&rows)).unwrap();
            for (a, ca) in pca.components.iter().enumerate() {
                for (b, cb) in pca.components.iter().enumerate() {
                    let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-9);
                }
            }
            prop_assert!(pca.variances.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
