use super::{NetworkError, TemporalGraph};

/// Strongly connected components of a graph.
///
/// Component ids are dense and ordered by the smallest local node index each
/// component contains, so the partition is independent of traversal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    component: Vec<u32>,
    sizes: Vec<usize>,
    largest: Option<u32>,
}

impl SccPartition {
    pub fn component_of(&self, node: usize) -> u32 {
        self.component[node]
    }

    pub fn components(&self) -> &[u32] {
        &self.component
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Largest component, ties to the smallest id. `None` for an empty graph.
    pub fn largest(&self) -> Option<u32> {
        self.largest
    }

    /// Members of every component, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (node, &c) in self.component.iter().enumerate() {
            out[c as usize].push(node);
        }
        out
    }

    /// Nodes of components with at least two members (i.e. on some cycle).
    pub fn nodes_in_nontrivial(&self) -> Vec<usize> {
        (0..self.component.len()).filter(|&u| self.sizes[self.component[u] as usize] >= 2).collect()
    }
}

/// Iterative Tarjan. Runs in O(V + E) with an explicit stack, so deep graphs
/// cannot overflow the call stack.
pub fn strongly_connected_components(g: &TemporalGraph) -> SccPartition {
    let n = g.node_count();
    const UNVISITED: u32 = u32::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    // (node, position in its out-neighbor list)
    let mut call: Vec<(u32, u32)> = Vec::new();
    let mut raw = vec![UNVISITED; n];
    let mut n_raw = 0u32;
    let mut counter = 0u32;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = counter;
        lowlink[root] = counter;
        counter += 1;
        stack.push(root as u32);
        on_stack[root] = true;
        call.push((root as u32, 0));

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let v = v as usize;
            let succ = g.out_neighbors(v);
            if (*pos as usize) < succ.len() {
                let w = succ[*pos as usize] as usize;
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    lowlink[w] = counter;
                    counter += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                let p = parent as usize;
                lowlink[p] = lowlink[p].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow") as usize;
                    on_stack[w] = false;
                    raw[w] = n_raw;
                    if w == v {
                        break;
                    }
                }
                n_raw += 1;
            }
        }
    }

    // Relabel by first appearance in node order = smallest member.
    let mut relabel = vec![UNVISITED; n_raw as usize];
    let mut next = 0u32;
    let mut component = vec![0u32; n];
    for u in 0..n {
        let r = raw[u] as usize;
        if relabel[r] == UNVISITED {
            relabel[r] = next;
            next += 1;
        }
        component[u] = relabel[r];
    }
    let mut sizes = vec![0usize; next as usize];
    for &c in &component {
        sizes[c as usize] += 1;
    }
    let largest = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c as u32);
    SccPartition { component, sizes, largest }
}

/// Subgraph induced by the largest component (ties to the smallest id).
pub fn largest_scc_subgraph(g: &TemporalGraph, p: &SccPartition) -> Result<TemporalGraph, NetworkError> {
    let c = p.largest().ok_or(NetworkError::EmptyGraph)?;
    let keep: Vec<usize> = (0..g.node_count()).filter(|&u| p.component_of(u) == c).collect();
    Ok(g.induced_subgraph(&keep))
}
