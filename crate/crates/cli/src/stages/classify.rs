use efosnet::classifier::{
    box_cox_apply, box_cox_fit, build_features, feature_matrix, pca_fit, pca_importance, perturbation_importance,
    proba_histogram, roc_auc, train_year, write_proba_histogram_csv, write_scores_csv, ForestModel, Scenario,
    FEATURE_NAMES,
};
use efosnet::seed;

use super::{load, years};
use crate::artifacts::{csv_bytes, Ctx};
use crate::error::CliError;

const ALL_SCENARIOS: [Scenario; 3] = [Scenario::Raw, Scenario::Pca, Scenario::BoxCox];

fn model_path(scenario: Scenario, year: i32) -> String {
    format!("models/forest_{}_{year}.json", scenario.as_str())
}

/// Trains every scenario per year so the comparison table is complete;
/// only the configured scenarios' models are saved.
pub fn train(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let keep = ctx.cfg.scenarios();
    let mut rows = Vec::new();
    for y in years(ctx, &ds) {
        for s in ALL_SCENARIOS {
            let fit = train_year(&ds, y, &ctx.cfg.forest(s), ctx.cfg.seed)
                .map_err(|e| CliError::Stage(format!("training {} forest for {y}: {e}", s.as_str())))?;
            let (scores, classes): (Vec<f64>, Vec<bool>) = fit
                .fit
                .oob_proba
                .iter()
                .zip(&fit.training.classes)
                .filter_map(|(p, &c)| p.map(|p| (p, c)))
                .unzip();
            let auc = roc_auc(&scores, &classes).map(|r| format!("{:.4}", r.auc)).unwrap_or_default();
            rows.push([
                y.to_string(),
                s.as_str().to_string(),
                fit.training.len().to_string(),
                format!("{:.4}", fit.fit.model.oob_error),
                auc,
            ]);
            if keep.contains(&s) {
                let mut json = fit.fit.model.to_json();
                json.push('\n');
                ctx.emit_file(&model_path(s, y), json.as_bytes(), "json")?;
            }
        }
    }
    ctx.emit_table(
        "scenario_comparison",
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["year", "scenario", "n_training", "oob_error", "oob_auc"])?;
            for r in &rows {
                out.write_record(r)?;
            }
            out.flush()
        }),
    )?;
    Ok(())
}

fn load_model(ctx: &Ctx, scenario: Scenario, year: i32) -> Result<ForestModel, CliError> {
    let text = ctx.read_file(&model_path(scenario, year))?;
    ForestModel::from_json(&text).map_err(|e| CliError::Stage(format!("{}: {e}", model_path(scenario, year))))
}

/// Probabilities for every taxpayer with income emissions, per scenario.
pub fn score(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let years = years(ctx, &ds);
    for (k, s) in ctx.cfg.scenarios().into_iter().enumerate() {
        let mut rows: Vec<(String, i32, f64)> = Vec::new();
        for &y in &years {
            let model = load_model(ctx, s, y)?;
            let features = build_features(&ds, y);
            let probs = model.predict_all(&feature_matrix(&features)).map_err(CliError::stage)?;
            rows.extend(features.iter().zip(probs).map(|(f, p)| (ds.id(f.taxpayer).to_string(), y, p)));
        }
        ctx.emit_table(
            &format!("scores_{}", s.as_str()),
            csv_bytes(|w| write_scores_csv(w, rows.iter().map(|(id, y, p)| (id.as_str(), *y, *p)))),
        )?;
        if k == 0 {
            let (efos, unlabeled): (Vec<_>, Vec<_>) =
                rows.iter().partition(|(id, _, _)| ds.idx_of(id).is_some_and(|t| ds.is_efos(t)));
            let cohorts = [
                ("efos", proba_histogram(&efos.iter().map(|r| r.2).collect::<Vec<_>>(), 20)),
                ("unlabeled", proba_histogram(&unlabeled.iter().map(|r| r.2).collect::<Vec<_>>(), 20)),
            ];
            ctx.emit_table("proba_histogram", csv_bytes(|w| write_proba_histogram_csv(w, &cohorts)))?;
        }
    }
    Ok(())
}

/// Noise-perturbation ranking of the primary model over the year's feature
/// rows, and first-component loadings of a PCA fitted on Box-Cox features.
pub fn importance(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let root = seed::derive(ctx.cfg.seed, "importance");
    let mut rows = Vec::new();
    for y in years(ctx, &ds) {
        let model = load_model(ctx, ctx.cfg.scenario, y)?;
        let x = feature_matrix(&build_features(&ds, y));
        let pert = perturbation_importance(&model, &x, ctx.cfg.noise_scale, seed::derive_index(root, y as u64));
        let bc = box_cox_fit(&x);
        let pca = pca_fit(&box_cox_apply(&bc, &x)).map_err(CliError::stage)?;
        for (method, ranked) in [("perturbation", pert), ("pca_loading", pca_importance(&pca))] {
            for (rank, (f, v)) in ranked.into_iter().enumerate() {
                rows.push([y.to_string(), method.to_string(), (rank + 1).to_string(), FEATURE_NAMES[f].to_string(), format!("{v:.6}")]);
            }
        }
    }
    ctx.emit_table(
        "importance",
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["year", "method", "rank", "feature", "value"])?;
            for r in &rows {
                out.write_record(r)?;
            }
            out.flush()
        }),
    )?;
    Ok(())
}
