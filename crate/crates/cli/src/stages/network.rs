use efosnet::network::{build_yearly_efos_network, strongly_connected_components, write_edge_list_csv};

use super::{load, monthly_networks, years};
use crate::artifacts::{csv_bytes, Ctx};
use crate::error::CliError;

/// Regime bounds are written in pesos.
pub fn regime(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let bytes = csv_bytes(|w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["period", "q1", "q3", "n_records"])?;
        for y in years(ctx, &ds) {
            for (m, built) in monthly_networks(ctx, &ds, y) {
                match built {
                    Some((r, _)) => out.write_record([
                        m.to_string(),
                        format!("{:.4}", r.q1 / 100.0),
                        format!("{:.4}", r.q3 / 100.0),
                        r.n_records.to_string(),
                    ])?,
                    None => out.write_record([m.to_string(), String::new(), String::new(), "0".into()])?,
                }
            }
        }
        out.flush()
    });
    ctx.emit_table("regime", bytes)?;
    Ok(())
}

pub fn network(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let years = years(ctx, &ds);
    let monthly = csv_bytes(|w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["period", "nodes", "edges", "nontrivial_sccs", "largest_scc", "largest_scc_efos"])?;
        for &y in &years {
            for (m, built) in monthly_networks(ctx, &ds, y) {
                let Some((_, g)) = built else { continue };
                let p = strongly_connected_components(&g);
                let nontrivial = p.sizes().iter().filter(|&&s| s >= 2).count();
                let (largest, efos) = match p.largest() {
                    Some(c) => {
                        let members: Vec<usize> = (0..g.node_count()).filter(|&u| p.component_of(u) == c).collect();
                        (members.len(), members.iter().filter(|&&u| g.is_efos(u)).count())
                    }
                    None => (0, 0),
                };
                out.write_record([
                    m.to_string(),
                    g.node_count().to_string(),
                    g.edge_count().to_string(),
                    nontrivial.to_string(),
                    largest.to_string(),
                    efos.to_string(),
                ])?;
            }
        }
        out.flush()
    });
    ctx.emit_table("network_monthly", monthly)?;

    let opts = ctx.cfg.yearly_options();
    let mut yearly_rows = Vec::new();
    let mut members = Vec::new();
    for &y in &years {
        let g = build_yearly_efos_network(&ds, y, &opts);
        let p = strongly_connected_components(&g);
        let inside = p.nodes_in_nontrivial();
        yearly_rows.push([
            y.to_string(),
            g.node_count().to_string(),
            g.edge_count().to_string(),
            p.sizes().iter().filter(|&&s| s >= 2).count().to_string(),
            inside.len().to_string(),
            inside.iter().filter(|&&u| g.is_efos(u)).count().to_string(),
        ]);
        for u in inside {
            let c = p.component_of(u);
            members.push([
                y.to_string(),
                ds.id(g.taxpayer(u)).to_string(),
                g.class(u).as_str().to_string(),
                c.to_string(),
                p.sizes()[c as usize].to_string(),
            ]);
        }
        ctx.emit_table(&format!("efos_network_edges_{y}"), csv_bytes(|w| write_edge_list_csv(w, &g, &ds)))?;
    }
    ctx.emit_table(
        "network_yearly",
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["year", "nodes", "edges", "nontrivial_sccs", "nodes_in_nontrivial", "efos_in_nontrivial"])?;
            for r in &yearly_rows {
                out.write_record(r)?;
            }
            out.flush()
        }),
    )?;
    ctx.emit_table(
        "efos_scc_members",
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["year", "id", "class", "component", "component_size"])?;
            for r in &members {
                out.write_record(r)?;
            }
            out.flush()
        }),
    )?;
    Ok(())
}
