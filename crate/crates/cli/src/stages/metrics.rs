use efosnet::metrics::{close_efos_counts, close_histogram, mean_reach, normalize_and_select, proximity_indices};
use efosnet::network::{largest_scc_subgraph, strongly_connected_components, TemporalGraph};
use efosnet::TaxpayerIdx;

use super::{load, monthly_networks, years};
use crate::artifacts::{csv_bytes, Ctx};
use crate::error::CliError;

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// Reach curves on each month's largest SCC, close-EFOS histograms of
/// unclassified nodes, and the yearly proximity index of unlabeled taxpayers.
pub fn metrics(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let d_max = ctx.cfg.max_distance;
    let opts = ctx.cfg.proximity_options();
    let mut reach_rows: Vec<Vec<String>> = Vec::new();
    let mut hist_rows: Vec<Vec<String>> = Vec::new();
    let mut prox_rows: Vec<Vec<String>> = Vec::new();
    for y in years(ctx, &ds) {
        let months = monthly_networks(ctx, &ds, y);
        let mut graphs: Vec<TemporalGraph> = Vec::new();
        for (m, built) in months {
            let Some((_, g)) = built else { continue };
            let p = strongly_connected_components(&g);
            if let Ok(scc) = largest_scc_subgraph(&g, &p) {
                let (efos, other): (Vec<TaxpayerIdx>, Vec<TaxpayerIdx>) =
                    scc.taxpayers().iter().partition(|&&t| ds.is_efos(t));
                let a = mean_reach(&scc, &efos, d_max).ok();
                let b = mean_reach(&scc, &other, d_max).ok();
                for d in 1..=d_max {
                    let cell = |v: &Option<Vec<f64>>| v.as_ref().map(|v| f6(v[d - 1])).unwrap_or_default();
                    reach_rows.push(vec![
                        m.to_string(),
                        d.to_string(),
                        cell(&a),
                        cell(&b),
                        efos.len().to_string(),
                        other.len().to_string(),
                    ]);
                }
            }
            let counts = close_efos_counts(&g, &g.efos_mask(), opts.metric);
            let unclassified: Vec<usize> = (0..g.node_count()).filter(|&u| !g.is_efos(u)).map(|u| counts[u]).collect();
            for (c, f) in close_histogram(&unclassified) {
                hist_rows.push(vec![m.to_string(), c.to_string(), f6(f)]);
            }
            graphs.push(g);
        }
        let is_efos = |t: TaxpayerIdx| ds.is_efos(t);
        let mut indices: Vec<_> =
            proximity_indices(&graphs, y, &is_efos, opts).into_iter().filter(|p| ds.label(p.node).is_none()).collect();
        if indices.is_empty() {
            continue;
        }
        let selected = normalize_and_select(&mut indices, ctx.cfg.theta_sigma).map_err(CliError::stage)?;
        for p in &indices {
            prox_rows.push(vec![
                ds.id(p.node).to_string(),
                y.to_string(),
                p.total_close_efos.to_string(),
                p.months_close.to_string(),
                f6(p.sigma),
                f6(p.sigma_hat),
                selected.contains(&p.node).to_string(),
            ]);
        }
    }
    let table = |header: &[&str], rows: &[Vec<String>]| {
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(header)?;
            for r in rows {
                out.write_record(r)?;
            }
            out.flush()
        })
    };
    ctx.emit_table(
        "reach_curves",
        table(&["period", "d", "mean_reach_efos", "mean_reach_unclassified", "n_efos", "n_unclassified"], &reach_rows),
    )?;
    ctx.emit_table("close_histogram", table(&["period", "close_count", "node_fraction"], &hist_rows))?;
    prox_rows.sort();
    ctx.emit_table(
        "proximity",
        table(&["id", "year", "total_close_efos", "months_close", "sigma", "sigma_hat", "selected"], &prox_rows),
    )?;
    Ok(())
}
