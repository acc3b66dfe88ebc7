use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::EfosLabel;
use crate::types::{Centavos, MonthKey, TaxpayerIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    DefinitiveEfos,
    AllegedEfos,
    Unclassified,
}

impl NodeClass {
    pub fn from_label(label: Option<EfosLabel>) -> Self {
        match label {
            Some(EfosLabel::Definitive) => NodeClass::DefinitiveEfos,
            Some(EfosLabel::Alleged) => NodeClass::AllegedEfos,
            None => NodeClass::Unclassified,
        }
    }

    pub fn is_efos(self) -> bool {
        !matches!(self, NodeClass::Unclassified)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::DefinitiveEfos => "definitive_efos",
            NodeClass::AllegedEfos => "alleged_efos",
            NodeClass::Unclassified => "unclassified",
        }
    }
}

/// Time slice a graph was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slice {
    Month(MonthKey),
    Year(i32),
    /// Graphs built directly from an edge list (tests, tools).
    Unsliced,
}

impl std::fmt::Display for Slice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slice::Month(m) => write!(f, "{m}"),
            Slice::Year(y) => write!(f, "{y}"),
            Slice::Unsliced => f.write_str("unsliced"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePayload {
    pub subtotal: Centavos,
    pub tx_count: u64,
}

impl EdgePayload {
    fn merge(&mut self, other: EdgePayload) {
        self.subtotal += other.subtotal;
        self.tx_count += other.tx_count;
    }
}

/// Directed weighted graph over one time slice.
///
/// Local node indices are `0..node_count()`, ordered by ascending
/// [`TaxpayerIdx`]. Adjacency is stored twice (out and in) in CSR form with
/// sorted neighbor lists; parallel edges are merged and self-loops dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    slice: Slice,
    nodes: Vec<TaxpayerIdx>,
    classes: Vec<NodeClass>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    out_payload: Vec<EdgePayload>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl TemporalGraph {
    /// Builds a graph from taxpayer-level edges, merging parallel edges and
    /// dropping self-loops. Only taxpayers incident to a kept edge become nodes.
    pub fn from_edges<I, F>(slice: Slice, edges: I, class_of: F) -> Self
    where
        I: IntoIterator<Item = (TaxpayerIdx, TaxpayerIdx, EdgePayload)>,
        F: Fn(TaxpayerIdx) -> NodeClass,
    {
        let mut merged: BTreeMap<(TaxpayerIdx, TaxpayerIdx), EdgePayload> = BTreeMap::new();
        for (u, v, p) in edges {
            if u == v {
                continue;
            }
            merged.entry((u, v)).or_default().merge(p);
        }
        let mut nodes: Vec<TaxpayerIdx> = merged.keys().flat_map(|&(u, v)| [u, v]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let local = |t: TaxpayerIdx| nodes.binary_search(&t).expect("node collected") as u32;
        let local_edges: Vec<(u32, u32, EdgePayload)> =
            merged.into_iter().map(|((u, v), p)| (local(u), local(v), p)).collect();
        let classes = nodes.iter().map(|&t| class_of(t)).collect();
        Self::assemble(slice, nodes, classes, local_edges)
    }

    /// Graph on nodes `0..n` from a local edge list (tests and generic use).
    pub fn from_adjacency(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut merged: BTreeMap<(u32, u32), EdgePayload> = BTreeMap::new();
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge ({u},{v}) outside 0..{n}");
            if u != v {
                merged.entry((u as u32, v as u32)).or_default().merge(EdgePayload { subtotal: 0, tx_count: 1 });
            }
        }
        let nodes = (0..n as u32).map(TaxpayerIdx).collect();
        let classes = vec![NodeClass::Unclassified; n];
        Self::assemble(Slice::Unsliced, nodes, classes, merged.into_iter().map(|((u, v), p)| (u, v, p)).collect())
    }

    /// `edges` must be sorted by `(src, dst)` without duplicates.
    fn assemble(
        slice: Slice,
        nodes: Vec<TaxpayerIdx>,
        classes: Vec<NodeClass>,
        edges: Vec<(u32, u32, EdgePayload)>,
    ) -> Self {
        let n = nodes.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, v, _) in &edges {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = edges.iter().map(|&(_, v, _)| v).collect();
        let out_payload = edges.iter().map(|&(_, _, p)| p).collect();
        // Edges are sorted by source, so filling the in-lists in edge order
        // leaves every in-list sorted too.
        let mut in_sources = vec![0u32; edges.len()];
        let mut fill = in_offsets.clone();
        for &(u, v, _) in &edges {
            in_sources[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        TemporalGraph { slice, nodes, classes, out_offsets, out_targets, out_payload, in_offsets, in_sources }
    }

    pub fn slice(&self) -> Slice {
        self.slice
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn out_neighbors(&self, u: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, u: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[u]..self.in_offsets[u + 1]]
    }

    pub fn out_payloads(&self, u: usize) -> &[EdgePayload] {
        &self.out_payload[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// All edges as `(src, dst, payload)` in `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgePayload)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.out_neighbors(u).iter().zip(self.out_payloads(u)).map(move |(&v, &p)| (u, v as usize, p))
        })
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<EdgePayload> {
        let targets = self.out_neighbors(u);
        targets.binary_search(&(v as u32)).ok().map(|i| self.out_payloads(u)[i])
    }

    pub fn taxpayer(&self, u: usize) -> TaxpayerIdx {
        self.nodes[u]
    }

    pub fn taxpayers(&self) -> &[TaxpayerIdx] {
        &self.nodes
    }

    pub fn node_of(&self, t: TaxpayerIdx) -> Option<usize> {
        self.nodes.binary_search(&t).ok()
    }

    pub fn class(&self, u: usize) -> NodeClass {
        self.classes[u]
    }

    pub fn is_efos(&self, u: usize) -> bool {
        self.classes[u].is_efos()
    }

    /// Mask of nodes tagged definitive or alleged.
    pub fn efos_mask(&self) -> Vec<bool> {
        self.classes.iter().map(|c| c.is_efos()).collect()
    }

    /// Mask of nodes whose taxpayer satisfies `pred`.
    pub fn mask_where(&self, pred: impl Fn(TaxpayerIdx) -> bool) -> Vec<bool> {
        self.nodes.iter().map(|&t| pred(t)).collect()
    }

    /// Subgraph induced by `keep` (local indices, any order). Node order
    /// (ascending taxpayer index) and payloads are preserved.
    pub fn induced_subgraph(&self, keep: &[usize]) -> TemporalGraph {
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut remap = vec![u32::MAX; self.node_count()];
        for (new, &old) in sorted.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut edges = Vec::new();
        for &old in &sorted {
            for (&v, &p) in self.out_neighbors(old).iter().zip(self.out_payloads(old)) {
                let nv = remap[v as usize];
                if nv != u32::MAX {
                    edges.push((remap[old], nv, p));
                }
            }
        }
        let nodes = sorted.iter().map(|&i| self.nodes[i]).collect();
        let classes = sorted.iter().map(|&i| self.classes[i]).collect();
        Self::assemble(self.slice, nodes, classes, edges)
    }

    /// Same graph with node classes replaced (used when labels differ from
    /// the dataset's, e.g. hold-out experiments).
    pub fn with_classes(mut self, class_of: impl Fn(TaxpayerIdx) -> NodeClass) -> Self {
        self.classes = self.nodes.iter().map(|&t| class_of(t)).collect();
        self
    }
}
