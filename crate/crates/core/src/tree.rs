//! Spanning trees and the curl-free part of the flow decomposition.
//!
//! [`compute_tau_f`] finds a flow `τ_f` supported on a BFS tree with
//! `Gᵀτ_f = f`. Rather than solving the tree Laplacian system `L_T x = f` and
//! forming `D_T G_T x`, it accumulates `f` over subtrees in reverse BFS order:
//! the flow through the parent edge of `k` must carry exactly the net supply
//! of `k`'s subtree. Both routes give the same flow; [`tree_potential`]
//! recovers `x` from the flow so tests can check the equivalence.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, Graph, VertexFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    root: usize,
    parent: Vec<usize>,
    parent_edge: Vec<Option<usize>>,
    depth: Vec<usize>,
    order: Vec<usize>,
    in_tree: Vec<bool>,
}

impl SpanningTree {
    pub fn root(&self) -> usize {
        self.root
    }

    /// Parent of `v`; the root is its own parent.
    pub fn parent(&self, v: usize) -> usize {
        self.parent[v]
    }

    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent_edge[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Vertices in BFS order, root first.
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    pub fn tree_edge_mask(&self) -> &[bool] {
        &self.in_tree
    }

    pub fn off_tree_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_tree
            .iter()
            .enumerate()
            .filter(|(_, &t)| !t)
            .map(|(e, _)| e)
    }

    pub fn tree_edge_count(&self) -> usize {
        self.in_tree.iter().filter(|t| **t).count()
    }

    /// Builds a tree from an explicit set of edges, rooted at `root`
    /// (0-based). Fails unless the edges form a spanning tree.
    pub fn from_edges(g: &Graph, root: usize, edges: &[usize]) -> Result<Self> {
        if root >= g.n() {
            return Err(Error::InvalidRoot {
                root: root + 1,
                n: g.n(),
            });
        }
        let mut in_tree = vec![false; g.m()];
        for &e in edges {
            if e >= g.m() {
                return Err(Error::NotATree(format!("edge id {e} out of range")));
            }
            in_tree[e] = true;
        }
        if in_tree.iter().filter(|t| **t).count() != g.n() - 1 {
            return Err(Error::NotATree(format!(
                "{} distinct edges given, spanning tree needs {}",
                edges.len(),
                g.n() - 1
            )));
        }
        let tree = search(g, root, |e| in_tree[e]);
        if tree.order.len() != g.n() {
            return Err(Error::NotATree("edges do not span the graph".into()));
        }
        Ok(tree)
    }
}

/// Pluggable tree construction.
pub trait TreeBuilder {
    fn build(&self, g: &Graph, root: usize) -> Result<SpanningTree>;
}

/// Breadth-first search tree, neighbors explored by ascending edge id.
#[derive(Debug, Clone, Copy, Default)]
pub struct BfsTree;

impl TreeBuilder for BfsTree {
    fn build(&self, g: &Graph, root: usize) -> Result<SpanningTree> {
        bfs_tree(g, root)
    }
}

/// BFS spanning tree rooted at the 0-based vertex `root`.
pub fn bfs_tree(g: &Graph, root: usize) -> Result<SpanningTree> {
    if root >= g.n() {
        return Err(Error::InvalidRoot {
            root: root + 1,
            n: g.n(),
        });
    }
    Ok(search(g, root, |_| true))
}

fn search(g: &Graph, root: usize, allowed: impl Fn(usize) -> bool) -> SpanningTree {
    let n = g.n();
    let mut parent = vec![usize::MAX; n];
    let mut parent_edge = vec![None; n];
    let mut depth = vec![0; n];
    let mut order = Vec::with_capacity(n);
    let mut in_tree = vec![false; g.m()];
    let mut queue = VecDeque::with_capacity(n);
    parent[root] = root;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for inc in g.incidences(v) {
            let w = inc.neighbor;
            if parent[w] == usize::MAX && allowed(inc.edge) {
                parent[w] = v;
                parent_edge[w] = Some(inc.edge);
                depth[w] = depth[v] + 1;
                in_tree[inc.edge] = true;
                queue.push_back(w);
            }
        }
    }
    SpanningTree {
        root,
        parent,
        parent_edge,
        depth,
        order,
        in_tree,
    }
}

/// `|Σf| ≤ 1e-10 · max(1, ‖f‖)`.
pub fn check_compatible(f: &VertexFunction) -> Result<()> {
    let sum = f.sum();
    let tolerance = 1e-10 * f.norm().max(1.0);
    if sum.abs() > tolerance || !sum.is_finite() {
        return Err(Error::IncompatibleRhs { sum, tolerance });
    }
    Ok(())
}

/// Tree-supported flow with divergence `f`, by subtree accumulation.
///
/// Returns a full-length [`EdgeFlow`] that is zero off the tree, together
/// with the number of elementary steps taken.
pub fn tree_flow(g: &Graph, t: &SpanningTree, f: &VertexFunction) -> Result<(EdgeFlow, usize)> {
    if f.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: f.len(),
        });
    }
    check_compatible(f)?;
    let mut subtree: Vec<f64> = f.to_vec();
    let mut tau = EdgeFlow::zeros(g.m());
    let mut work = 0;
    for &k in t.order.iter().rev() {
        work += 1;
        let Some(e) = t.parent_edge[k] else { continue };
        let s = subtree[k];
        // divergence at k from edge e is sign(k, e)·τ_e, and must equal the subtree supply
        tau[e] = if g.edge(e).hi == k { s } else { -s };
        subtree[t.parent[k]] += s;
    }
    Ok((tau, work))
}

/// Potential `x` with `x_root = 0` and `D_T G_T x = τ` on tree edges.
pub fn tree_potential(g: &Graph, t: &SpanningTree, tau: &EdgeFlow) -> Result<VertexFunction> {
    if tau.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            actual: tau.len(),
        });
    }
    let mut x = VertexFunction::zeros(g.n());
    for &k in &t.order[1..] {
        let e = t.parent_edge[k].expect("non-root vertex has a parent edge");
        let edge = g.edge(e);
        let step = tau[e] / edge.weight;
        x[k] = if edge.hi == k {
            x[t.parent[k]] + step
        } else {
            x[t.parent[k]] - step
        };
    }
    Ok(x)
}

/// The curl-free flow together with the tree it lives on.
#[derive(Debug, Clone)]
pub struct CurlFreeFlow {
    pub tau_f: EdgeFlow,
    pub tree: SpanningTree,
    /// Elementary steps taken (vertex and edge visits); linear in `n + m`.
    pub work: usize,
}

/// BFS tree from `root` (0-based) and the tree-supported `τ_f` with `Gᵀτ_f = f`.
pub fn compute_tau_f(g: &Graph, f: &VertexFunction, root: usize) -> Result<CurlFreeFlow> {
    compute_tau_f_with(g, f, root, &BfsTree)
}

pub fn compute_tau_f_with(
    g: &Graph,
    f: &VertexFunction,
    root: usize,
    builder: &dyn TreeBuilder,
) -> Result<CurlFreeFlow> {
    if f.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: f.len(),
        });
    }
    check_compatible(f)?;
    let tree = builder.build(g, root)?;
    let (tau_f, work) = tree_flow(g, &tree, f)?;
    Ok(CurlFreeFlow {
        tau_f,
        tree,
        // BFS touches each vertex once and each adjacency slot once
        work: work + g.n() + 2 * g.m(),
    })
}
