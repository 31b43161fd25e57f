//! Weighted undirected graphs and the discrete operators built on them.
//!
//! Every edge is stored oriented from its larger endpoint to its smaller one,
//! and edges are kept in lexicographic `(hi, lo)` order. That order is the
//! canonical index of the edge space: every [`EdgeFlow`] is laid out in it.
//!
//! With `G` the edge-node incidence matrix and `D` the diagonal of weights:
//!
//! * [`gradient`] applies `G`: `(Gv)_e = v_hi - v_lo`,
//! * [`divergence`] applies `Gᵀ`, the adjoint under the plain inner products,
//! * [`apply_laplacian`] applies `L = GᵀDG`,
//! * [`dinv_norm`] and [`l_seminorm`] are the `D⁻¹`-norm on flows and the
//!   energy seminorm on vertex functions.
//!
//! Vertex labels are 1-based in [`RawEdge`] (the external convention) and
//! 0-based everywhere else.

use std::collections::VecDeque;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// An edge as it arrives from input: 1-based labels, any orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEdge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl RawEdge {
    pub fn new(i: usize, j: usize, weight: f64) -> Self {
        RawEdge { i, j, weight }
    }
}

/// A canonical edge, 0-based, with `hi > lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub hi: usize,
    pub lo: usize,
    pub weight: f64,
}

impl Edge {
    /// Orientation sign of `vertex` on this edge: +1 at the larger endpoint,
    /// -1 at the smaller one.
    #[inline]
    pub fn sign_at(&self, vertex: usize) -> i8 {
        if vertex == self.hi {
            1
        } else {
            debug_assert_eq!(vertex, self.lo);
            -1
        }
    }

    #[inline]
    pub fn other(&self, vertex: usize) -> usize {
        if vertex == self.hi {
            self.lo
        } else {
            self.hi
        }
    }
}

/// One slot of a vertex's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    pub sign: i8,
}

/// Immutable, validated, connected simple graph with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    incidences: Vec<Incidence>,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Dimension of the cycle space, `m - n + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.m() + 1 - self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.edges[e].weight
    }

    /// Incident edges of `vertex`, in ascending edge id.
    pub fn incidences(&self, vertex: usize) -> &[Incidence] {
        &self.incidences[self.offsets[vertex]..self.offsets[vertex + 1]]
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.offsets[vertex + 1] - self.offsets[vertex]
    }

    /// Weighted degree `Σ_{e∋i} ω_e`, the diagonal of `L`.
    pub fn weighted_degree(&self, vertex: usize) -> f64 {
        self.incidences(vertex)
            .iter()
            .map(|inc| self.edges[inc.edge].weight)
            .sum()
    }

    /// Canonical id of the edge joining two 0-based vertices, if any.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        if a >= self.n || b >= self.n {
            return None;
        }
        let (from, to) = if self.degree(a) <= self.degree(b) {
            (a, b)
        } else {
            (b, a)
        };
        self.incidences(from)
            .iter()
            .find(|inc| inc.neighbor == to)
            .map(|inc| inc.edge)
    }

    /// Edges in external (1-based) form, canonical order.
    pub fn raw_edges(&self) -> Vec<RawEdge> {
        self.edges
            .iter()
            .map(|e| RawEdge::new(e.hi + 1, e.lo + 1, e.weight))
            .collect()
    }

    fn check_vertex_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }

    fn check_edge_len(&self, len: usize) -> Result<()> {
        if len != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Builds a canonical [`Graph`] from 1-based raw edges.
///
/// Orientation of the input is discarded: each edge is stored as `(max, min)`
/// and the list is sorted lexicographically. Rejects self-loops, repeated
/// edges, nonpositive weights and disconnected input.
pub fn validate_graph(raw: &[RawEdge], n: usize) -> Result<Graph> {
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut edges = Vec::with_capacity(raw.len());
    for r in raw {
        for v in [r.i, r.j] {
            if v == 0 || v > n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
        }
        if r.i == r.j {
            return Err(Error::SelfLoop { vertex: r.i });
        }
        if r.weight.is_nan() || r.weight <= 0.0 || !r.weight.is_finite() {
            return Err(Error::NonpositiveWeight {
                i: r.i,
                j: r.j,
                weight: r.weight,
            });
        }
        let (hi, lo) = if r.i > r.j { (r.i, r.j) } else { (r.j, r.i) };
        edges.push(Edge {
            hi: hi - 1,
            lo: lo - 1,
            weight: r.weight,
        });
    }
    edges.sort_by_key(|e| (e.hi, e.lo));
    for w in edges.windows(2) {
        if (w[0].hi, w[0].lo) == (w[1].hi, w[1].lo) {
            return Err(Error::DuplicateEdge {
                i: w[0].hi + 1,
                j: w[0].lo + 1,
            });
        }
    }

    let mut offsets = vec![0usize; n + 1];
    for e in &edges {
        offsets[e.hi + 1] += 1;
        offsets[e.lo + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut incidences = vec![
        Incidence {
            edge: 0,
            neighbor: 0,
            sign: 0
        };
        2 * edges.len()
    ];
    // edges are visited in ascending id, so every adjacency list comes out sorted
    for (id, e) in edges.iter().enumerate() {
        incidences[fill[e.hi]] = Incidence {
            edge: id,
            neighbor: e.lo,
            sign: 1,
        };
        fill[e.hi] += 1;
        incidences[fill[e.lo]] = Incidence {
            edge: id,
            neighbor: e.hi,
            sign: -1,
        };
        fill[e.lo] += 1;
    }

    let graph = Graph {
        n,
        edges,
        offsets,
        incidences,
    };
    let components = count_components(&graph);
    if components != 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    Ok(graph)
}

fn count_components(g: &Graph) -> usize {
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::new();
    let mut components = 0;
    for start in 0..g.n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for inc in g.incidences(v) {
                if !seen[inc.neighbor] {
                    seen[inc.neighbor] = true;
                    queue.push_back(inc.neighbor);
                }
            }
        }
    }
    components
}

macro_rules! vector_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                $name(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn dot(&self, other: &Self) -> f64 {
                dot(&self.0, &other.0)
            }

            /// Euclidean norm.
            pub fn norm(&self) -> f64 {
                self.dot(self).sqrt()
            }

            pub fn sub(&self, other: &Self) -> Self {
                $name(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect())
            }

            pub fn add(&self, other: &Self) -> Self {
                $name(self.iter().zip(other.iter()).map(|(a, b)| a + b).collect())
            }

            pub fn scale(&self, s: f64) -> Self {
                $name(self.iter().map(|a| a * s).collect())
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

vector_newtype!(
    /// A function on vertices, element of `R^n`.
    VertexFunction
);
vector_newtype!(
    /// A flow on edges, element of `R^m` in canonical edge order.
    EdgeFlow
);

impl VertexFunction {
    pub fn constant(len: usize, value: f64) -> Self {
        VertexFunction(vec![value; len])
    }

    pub fn sum(&self) -> f64 {
        self.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.sum() / self.len() as f64
        }
    }

    /// Copy with the mean subtracted.
    pub fn mean_free(&self) -> Self {
        let mean = self.mean();
        VertexFunction(self.iter().map(|x| x - mean).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(Gv)_e = v_hi - v_lo`.
pub fn gradient(g: &Graph, v: &VertexFunction) -> Result<EdgeFlow> {
    g.check_vertex_len(v.len())?;
    Ok(EdgeFlow(
        g.edges.iter().map(|e| v[e.hi] - v[e.lo]).collect(),
    ))
}

/// `Gᵀτ`: at each vertex, the signed sum of incident flows.
pub fn divergence(g: &Graph, tau: &EdgeFlow) -> Result<VertexFunction> {
    g.check_edge_len(tau.len())?;
    let mut out = vec![0.0; g.n];
    for (e, edge) in g.edges.iter().enumerate() {
        out[edge.hi] += tau[e];
        out[edge.lo] -= tau[e];
    }
    Ok(VertexFunction(out))
}

/// `Dτ`.
pub fn weight_flow(g: &Graph, tau: &EdgeFlow) -> Result<EdgeFlow> {
    g.check_edge_len(tau.len())?;
    Ok(EdgeFlow(
        g.edges
            .iter()
            .zip(tau.iter())
            .map(|(e, t)| e.weight * t)
            .collect(),
    ))
}

/// `DGv`, the flux of a potential.
pub fn flux(g: &Graph, v: &VertexFunction) -> Result<EdgeFlow> {
    g.check_vertex_len(v.len())?;
    Ok(EdgeFlow(
        g.edges
            .iter()
            .map(|e| e.weight * (v[e.hi] - v[e.lo]))
            .collect(),
    ))
}

/// `Lv = GᵀDGv`.
pub fn apply_laplacian(g: &Graph, v: &VertexFunction) -> Result<VertexFunction> {
    divergence(g, &flux(g, v)?)
}

/// `‖τ‖_{D⁻¹} = sqrt(Σ τ_e² / ω_e)`.
pub fn dinv_norm(g: &Graph, tau: &EdgeFlow) -> Result<f64> {
    g.check_edge_len(tau.len())?;
    Ok(dinv_norm_sq_unchecked(g, tau).sqrt())
}

pub(crate) fn dinv_norm_sq_unchecked(g: &Graph, tau: &[f64]) -> f64 {
    g.edges.iter().zip(tau).map(|(e, t)| t * t / e.weight).sum()
}

/// `(τ, φ)_{D⁻¹}`.
pub fn dinv_inner(g: &Graph, tau: &EdgeFlow, phi: &EdgeFlow) -> Result<f64> {
    g.check_edge_len(tau.len())?;
    g.check_edge_len(phi.len())?;
    Ok(g.edges
        .iter()
        .zip(tau.iter().zip(phi.iter()))
        .map(|(e, (t, p))| t * p / e.weight)
        .sum())
}

/// `‖v‖_L = sqrt(Σ ω_e (v_hi - v_lo)²)`.
pub fn l_seminorm(g: &Graph, v: &VertexFunction) -> Result<f64> {
    g.check_vertex_len(v.len())?;
    Ok(g.edges
        .iter()
        .map(|e| {
            let d = v[e.hi] - v[e.lo];
            e.weight * d * d
        })
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Triangle with unit weights; e1={2,1}, e2={3,1}, e3={3,2}.
    pub fn k3() -> Graph {
        validate_graph(
            &[
                RawEdge::new(2, 1, 1.0),
                RawEdge::new(3, 1, 1.0),
                RawEdge::new(3, 2, 1.0),
            ],
            3,
        )
        .unwrap()
    }

    pub fn k3_rhs() -> VertexFunction {
        VertexFunction(vec![1.0, -1.0, 0.0])
    }

    pub fn path3() -> Graph {
        validate_graph(&[RawEdge::new(1, 2, 1.0), RawEdge::new(2, 3, 1.0)], 3).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn k3_is_canonical() {
        let g = k3();
        let ends: Vec<_> = g.edges().iter().map(|e| (e.hi + 1, e.lo + 1)).collect();
        assert_eq!(ends, vec![(2, 1), (3, 1), (3, 2)]);
        assert_eq!(g.cycle_rank(), 1);
    }

    #[test]
    fn orientation_is_normalized() {
        let g = validate_graph(&[RawEdge::new(1, 2, 1.0)], 2).unwrap();
        assert_eq!((g.edge(0).hi, g.edge(0).lo), (1, 0));
        let grad = gradient(&g, &VertexFunction(vec![0.0, 5.0])).unwrap();
        assert_eq!(grad.0, vec![5.0]);
    }

    #[test]
    fn rejects_invalid_input() {
        assert_eq!(
            validate_graph(&[RawEdge::new(1, 1, 1.0)], 1),
            Err(Error::SelfLoop { vertex: 1 })
        );
        assert_eq!(
            validate_graph(&[RawEdge::new(2, 1, 1.0), RawEdge::new(1, 2, 3.0)], 2),
            Err(Error::DuplicateEdge { i: 2, j: 1 })
        );
        assert!(matches!(
            validate_graph(&[RawEdge::new(2, 1, 0.0)], 2),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert!(matches!(
            validate_graph(&[RawEdge::new(2, 1, -1.0)], 2),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert_eq!(
            validate_graph(&[RawEdge::new(2, 1, 1.0), RawEdge::new(4, 3, 1.0)], 4),
            Err(Error::DisconnectedGraph { components: 2 })
        );
        assert_eq!(validate_graph(&[], 3), Err(Error::EmptyGraph));
        assert!(matches!(
            validate_graph(&[RawEdge::new(5, 1, 1.0)], 3),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = k3();
        assert_eq!(
            gradient(&g, &VertexFunction(vec![0.0, 1.0, 2.0]))
                .unwrap()
                .0,
            vec![1.0, 2.0, 1.0]
        );
        assert_eq!(
            gradient(&g, &VertexFunction(vec![1.0, 0.0, 0.0]))
                .unwrap()
                .0,
            vec![-1.0, -1.0, 0.0]
        );
        assert_eq!(
            gradient(&g, &VertexFunction::constant(3, 7.5)).unwrap().0,
            vec![0.0; 3]
        );
        assert!(matches!(
            gradient(&g, &VertexFunction::zeros(2)),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn divergence_examples() {
        let g = k3();
        assert_eq!(
            divergence(&g, &EdgeFlow(vec![-1.0, 0.0, 0.0])).unwrap().0,
            vec![1.0, -1.0, 0.0]
        );
        assert_eq!(
            divergence(&g, &EdgeFlow(vec![1.0, -1.0, 1.0])).unwrap().0,
            vec![0.0; 3]
        );
        assert_eq!(divergence(&g, &EdgeFlow::zeros(3)).unwrap().0, vec![0.0; 3]);
        assert!(divergence(&g, &EdgeFlow::zeros(4)).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let g = k3();
        assert_eq!(
            apply_laplacian(&g, &VertexFunction(vec![1.0, 0.0, 0.0]))
                .unwrap()
                .0,
            vec![2.0, -1.0, -1.0]
        );
        let c = apply_laplacian(&g, &VertexFunction::constant(3, -2.0)).unwrap();
        assert!(c.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn norm_examples() {
        let g = validate_graph(&[RawEdge::new(2, 1, 1.0), RawEdge::new(3, 2, 1.0)], 3).unwrap();
        assert_relative_eq!(dinv_norm(&g, &EdgeFlow(vec![3.0, 4.0])).unwrap(), 5.0);
        let g4 = validate_graph(&[RawEdge::new(2, 1, 4.0)], 2).unwrap();
        assert_relative_eq!(dinv_norm(&g4, &EdgeFlow(vec![2.0])).unwrap(), 1.0);

        let k = k3();
        let v = VertexFunction(vec![1.0 / 3.0, -1.0 / 3.0, 0.0]);
        assert_relative_eq!(
            l_seminorm(&k, &v).unwrap(),
            (2.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(
            l_seminorm(&k, &VertexFunction::constant(3, 4.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn edge_lookup() {
        let g = k3();
        assert_eq!(g.edge_id(0, 2), Some(1));
        assert_eq!(g.edge_id(2, 1), Some(2));
        let p = path3();
        assert_eq!(p.edge_id(0, 2), None);
    }

    fn dense_laplacian(g: &Graph) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; g.n()]; g.n()];
        for e in g.edges() {
            l[e.hi][e.hi] += e.weight;
            l[e.lo][e.lo] += e.weight;
            l[e.hi][e.lo] -= e.weight;
            l[e.lo][e.hi] -= e.weight;
        }
        l
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = (Graph, u64)> {
        (2..=max_n, 0usize..30, any::<u64>()).prop_map(|(n, k, seed)| {
            let max_extra = n * (n - 1) / 2 - (n - 1);
            let g =
                crate::io::random_connected_graph(n, k.min(max_extra), (0.1, 10.0), seed).unwrap();
            (g, seed)
        })
    }

    fn rand_vec(len: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    proptest! {
        #[test]
        fn adjointness((g, seed) in arb_graph(20)) {
            let u = VertexFunction(rand_vec(g.n(), seed));
            let tau = EdgeFlow(rand_vec(g.m(), seed ^ 0xabc));
            let lhs = gradient(&g, &u).unwrap().dot(&tau);
            let rhs = u.dot(&divergence(&g, &tau).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn energy_identity((g, seed) in arb_graph(20)) {
            let v = VertexFunction(rand_vec(g.n(), seed));
            let s = l_seminorm(&g, &v).unwrap().powi(2);
            let lv = apply_laplacian(&g, &v).unwrap().dot(&v);
            let d = dinv_norm(&g, &flux(&g, &v).unwrap()).unwrap().powi(2);
            prop_assert!((s - lv).abs() <= 1e-12 * s.max(1e-300));
            prop_assert!((s - d).abs() <= 1e-12 * s.max(1e-300));
            prop_assert!(lv >= -1e-14);
        }

        #[test]
        fn matches_dense_laplacian((g, seed) in arb_graph(20)) {
            let v = VertexFunction(rand_vec(g.n(), seed));
            let l = dense_laplacian(&g);
            let lv = apply_laplacian(&g, &v).unwrap();
            for i in 0..g.n() {
                let expect: f64 = (0..g.n()).map(|j| l[i][j] * v[j]).sum();
                prop_assert!((lv[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
            let c = apply_laplacian(&g, &VertexFunction::constant(g.n(), 3.0)).unwrap();
            prop_assert!(c.iter().all(|x| x.abs() <= 1e-12));
        }
    }
}
