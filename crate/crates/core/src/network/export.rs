use std::io::{self, Write};

use super::TemporalGraph;
use crate::ingest::Dataset;
use crate::types::format_amount;

/// `src,dst,subtotal,tx_count` with taxpayer ids and peso amounts.
pub fn write_edge_list_csv<W: Write>(w: W, g: &TemporalGraph, ds: &Dataset) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["src", "dst", "subtotal", "tx_count"])?;
    for (u, v, p) in g.edges() {
        out.write_record([
            ds.id(g.taxpayer(u)).as_str(),
            ds.id(g.taxpayer(v)).as_str(),
            &format_amount(p.subtotal),
            &p.tx_count.to_string(),
        ])?;
    }
    out.flush()
}

/// `id,class` for every node of `g`.
pub fn write_node_classes_csv<W: Write>(w: W, g: &TemporalGraph, ds: &Dataset) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "class"])?;
    for u in 0..g.node_count() {
        out.write_record([ds.id(g.taxpayer(u)).as_str(), g.class(u).as_str()])?;
    }
    out.flush()
}
