use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{validate_graph, Graph, RawEdge};

/// Result of cleaning a raw edge list.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub graph: Graph,
    /// `original_labels[k]` is the input label of vertex `k + 1` of `graph`.
    pub original_labels: Vec<usize>,
    pub dropped_self_loops: usize,
}

/// Turns an arbitrary edge list into a valid [`Graph`]: drops self-loops,
/// sums repeated edges, takes absolute weights, drops zero-weight edges and
/// keeps only the largest connected component, relabeled `1..=n'` in the
/// original label order.
pub fn preprocess(raw: &[RawEdge], n: usize) -> Result<Graph> {
    preprocess_with_labels(raw, n).map(|p| p.graph)
}

pub fn preprocess_with_labels(raw: &[RawEdge], n: usize) -> Result<Preprocessed> {
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut dropped_self_loops = 0;
    for r in raw {
        for v in [r.i, r.j] {
            if v == 0 || v > n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
        }
        if r.i == r.j {
            dropped_self_loops += 1;
            continue;
        }
        let key = if r.i > r.j { (r.i, r.j) } else { (r.j, r.i) };
        *merged.entry(key).or_insert(0.0) += r.weight;
    }
    let edges: Vec<(usize, usize, f64)> = merged
        .into_iter()
        .map(|((i, j), w)| (i, j, w.abs()))
        .filter(|&(_, _, w)| w > 0.0)
        .collect();
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let mut dsu = DisjointSets::new(n + 1);
    for &(i, j, _) in &edges {
        dsu.union(i, j);
    }
    let mut size = vec![0usize; n + 1];
    let mut touched = vec![false; n + 1];
    for &(i, j, _) in &edges {
        touched[i] = true;
        touched[j] = true;
    }
    let present: Vec<usize> = (1..=n).filter(|&v| touched[v]).collect();
    for &v in &present {
        let root = dsu.find(v);
        size[root] += 1;
    }
    // largest component; ties go to the one holding the smallest label
    let mut best_root = 0;
    for &v in &present {
        let root = dsu.find(v);
        if size[root] > size[best_root] {
            best_root = root;
        }
    }

    let mut new_label = vec![0usize; n + 1];
    let mut original_labels = Vec::new();
    for v in 1..=n {
        if touched[v] && dsu.find(v) == best_root {
            original_labels.push(v);
            new_label[v] = original_labels.len();
        }
    }
    let kept: Vec<RawEdge> = edges
        .into_iter()
        .filter(|&(i, _, _)| new_label[i] != 0)
        .map(|(i, j, w)| RawEdge::new(new_label[i], new_label[j], w))
        .collect();
    let graph = validate_graph(&kept, original_labels.len())?;
    Ok(Preprocessed {
        graph,
        original_labels,
        dropped_self_loops,
    })
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller label becomes the root so tie-breaking is by label
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
