//! Cycle bases of the divergence-free subspace and their vertex-incidence
//! decomposition.
//!
//! A cycle `i_1 → i_2 → … → i_1` is stored as signed edge entries where the
//! sign of edge `{i_k, i_{k+1}}` is `sign(i_k − i_{k+1})`: +1 when the walk
//! runs from the larger endpoint to the smaller one.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, Graph};
use crate::io::GridSpec;
use crate::tree::SpanningTree;

/// An owned cycle, used to assemble a basis by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleVector {
    /// The off-tree edge that induced a fundamental cycle.
    pub anchor: Option<usize>,
    /// `(edge id, ±1)` in walk order.
    pub entries: Vec<(usize, i8)>,
}

/// A cycle borrowed from a [`CycleBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleRef<'a> {
    pub anchor: Option<usize>,
    pub entries: &'a [(usize, i8)],
}

impl CycleRef<'_> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_owned(&self) -> CycleVector {
        CycleVector {
            anchor: self.anchor,
            entries: self.entries.to_vec(),
        }
    }

    pub fn to_flow(&self, m: usize) -> EdgeFlow {
        let mut out = EdgeFlow::zeros(m);
        for &(e, s) in self.entries {
            out[e] += f64::from(s);
        }
        out
    }

    /// Vertices the cycle passes through, ascending.
    pub fn vertices(&self, g: &Graph) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .entries
            .iter()
            .flat_map(|&(e, _)| [g.edge(e).hi, g.edge(e).lo])
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Integer divergence; all zeros for a genuine cycle.
    fn integer_divergence(&self, g: &Graph, acc: &mut std::collections::HashMap<usize, i64>) {
        acc.clear();
        for &(e, s) in self.entries {
            let edge = g.edge(e);
            *acc.entry(edge.hi).or_insert(0) += i64::from(s);
            *acc.entry(edge.lo).or_insert(0) -= i64::from(s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    Fundamental,
    Face,
}

#[derive(Debug, Clone)]
pub struct CycleBasis {
    kind: BasisKind,
    edge_count: usize,
    /// Empty when no cycle has an anchor.
    anchors: Vec<Option<usize>>,
    offsets: Vec<usize>,
    entries: Vec<(usize, i8)>,
    /// Built on first use; only the dense solver needs it.
    edge_to_cycles: OnceLock<InvertedIndex>,
    vertex_to_cycles: InvertedIndex,
}

impl PartialEq for CycleBasis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.anchors == other.anchors
            && self.offsets == other.offsets
            && self.entries == other.entries
    }
}

/// Compressed key → ascending ids lists.
#[derive(Debug, Clone, PartialEq)]
struct InvertedIndex {
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

impl InvertedIndex {
    /// Builds the index from two passes of `visit`, which must report the same
    /// `(key, id)` pairs each time with ids nondecreasing.
    fn build(keys: usize, visit: impl Fn(&mut dyn FnMut(usize, usize))) -> Self {
        let mut offsets = vec![0; keys + 1];
        visit(&mut |k, _| offsets[k + 1] += 1);
        for k in 0..keys {
            offsets[k + 1] += offsets[k];
        }
        let mut next = offsets.clone();
        let mut ids = vec![0; offsets[keys]];
        visit(&mut |k, id| {
            ids[next[k]] = id;
            next[k] += 1;
        });
        InvertedIndex { offsets, ids }
    }

    fn get(&self, key: usize) -> &[usize] {
        &self.ids[self.offsets[key]..self.offsets[key + 1]]
    }
}

impl CycleBasis {
    /// Wraps an arbitrary list of cycles, building the inverted indices.
    /// Use [`validate_cycle_basis`] to check it.
    pub fn from_cycles(g: &Graph, kind: BasisKind, cycles: Vec<CycleVector>) -> Self {
        let mut builder = BasisBuilder::with_capacity(cycles.len(), 0);
        for c in cycles {
            builder.push(c.anchor, c.entries);
        }
        builder.finish(g, kind)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cycles(&self) -> impl ExactSizeIterator<Item = CycleRef<'_>> {
        (0..self.len()).map(move |id| self.cycle(id))
    }

    pub fn cycle(&self, id: usize) -> CycleRef<'_> {
        CycleRef {
            anchor: self.anchors.get(id).copied().flatten(),
            entries: self.entries(id),
        }
    }

    /// `(edge id, ±1)` entries of cycle `id`.
    pub fn entries(&self, id: usize) -> &[(usize, i8)] {
        &self.entries[self.offsets[id]..self.offsets[id + 1]]
    }

    pub fn cycles_on_edge(&self, e: usize) -> &[usize] {
        let m = self.edge_count;
        self.edge_to_cycles
            .get_or_init(|| {
                InvertedIndex::build(m, |report| {
                    let mut keys = Vec::new();
                    for id in 0..self.len() {
                        keys.clear();
                        keys.extend(self.cycle(id).entries.iter().map(|&(e, _)| e));
                        distinct_keys(&mut keys, report, id);
                    }
                })
            })
            .get(e)
    }

    pub fn cycles_at_vertex(&self, v: usize) -> &[usize] {
        self.vertex_to_cycles.get(v)
    }

    pub fn total_support(&self) -> usize {
        self.entries.len()
    }

    /// `Σ α_j c^j` as a flow.
    pub fn combine(&self, m: usize, alpha: &[f64]) -> EdgeFlow {
        let mut out = EdgeFlow::zeros(m);
        for (c, &a) in self.cycles().zip(alpha) {
            for &(e, s) in c.entries {
                out[e] += a * f64::from(s);
            }
        }
        out
    }

    /// JSON dump: `[{anchor, entries: [[edge, coef], ...]}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.cycles().collect::<Vec<_>>()).expect("cycles serialize")
    }
}

/// Accumulates cycles into flat storage.
struct BasisBuilder {
    anchors: Vec<Option<usize>>,
    offsets: Vec<usize>,
    entries: Vec<(usize, i8)>,
}

impl BasisBuilder {
    fn with_capacity(cycles: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(cycles + 1);
        offsets.push(0);
        BasisBuilder {
            anchors: Vec::new(),
            offsets,
            entries: Vec::with_capacity(entries),
        }
    }

    fn push(&mut self, anchor: Option<usize>, entries: impl IntoIterator<Item = (usize, i8)>) {
        if anchor.is_some() || !self.anchors.is_empty() {
            self.anchors.resize(self.offsets.len() - 1, None);
            self.anchors.push(anchor);
        }
        self.entries.extend(entries);
        self.offsets.push(self.entries.len());
    }

    fn finish(self, g: &Graph, kind: BasisKind) -> CycleBasis {
        let BasisBuilder {
            anchors,
            offsets,
            entries,
        } = self;
        let cycle = |id: usize| &entries[offsets[id]..offsets[id + 1]];
        let vertex_to_cycles = InvertedIndex::build(g.n(), |report| {
            let mut keys = Vec::new();
            for id in 0..offsets.len() - 1 {
                keys.clear();
                keys.extend(
                    cycle(id)
                        .iter()
                        .flat_map(|&(e, _)| [g.edge(e).hi, g.edge(e).lo]),
                );
                distinct_keys(&mut keys, report, id);
            }
        });
        CycleBasis {
            kind,
            edge_count: g.m(),
            anchors,
            offsets,
            entries,
            edge_to_cycles: OnceLock::new(),
            vertex_to_cycles,
        }
    }
}

/// Reports each distinct key once; short lists use a linear scan.
fn distinct_keys(keys: &mut Vec<usize>, report: &mut dyn FnMut(usize, usize), id: usize) {
    const SHORT: usize = 16;
    if keys.len() > SHORT {
        keys.sort_unstable();
        keys.dedup();
        for &k in keys.iter() {
            report(k, id);
        }
    } else {
        for (i, &k) in keys.iter().enumerate() {
            if !keys[..i].contains(&k) {
                report(k, id);
            }
        }
    }
}

/// One cycle per off-tree edge `{i, j}` (`i > j`): the edge walked from `i` to
/// `j`, then the tree path from `j` back to `i` through their lowest common
/// ancestor. Cycles are listed in ascending anchor id.
pub fn fundamental_cycle_basis(g: &Graph, t: &SpanningTree) -> CycleBasis {
    let mut builder = BasisBuilder::with_capacity(g.cycle_rank(), 0);
    let mut entries = Vec::new();
    let mut down = Vec::new();
    for anchor in t.off_tree_edges() {
        let edge = g.edge(anchor);
        entries.clear();
        entries.push((anchor, 1i8));
        // climb from j (the smaller end) and from i; the j side is walked
        // upward, the i side is walked downward and is appended reversed
        let (mut a, mut b) = (edge.lo, edge.hi);
        down.clear();
        while a != b {
            if t.depth(a) >= t.depth(b) {
                let e = t.parent_edge(a).expect("non-root");
                // stepping a -> parent(a)
                entries.push((e, g.edge(e).sign_at(a)));
                a = t.parent(a);
            } else {
                let e = t.parent_edge(b).expect("non-root");
                // the walk will step parent(b) -> b
                down.push((e, -g.edge(e).sign_at(b)));
                b = t.parent(b);
            }
        }
        entries.extend(down.drain(..).rev());
        builder.push(Some(anchor), entries.iter().copied());
    }
    builder.finish(g, BasisKind::Fundamental)
}

/// The `2N²` triangles of a uniform grid, each walked counterclockwise.
pub fn face_cycle_basis(g: &Graph, spec: &GridSpec) -> Result<CycleBasis> {
    if g.n() != spec.vertex_count() || g.m() != spec.edge_count() {
        return Err(Error::NotAGridGraph(format!(
            "expected n={} m={}, got n={} m={}",
            spec.vertex_count(),
            spec.edge_count(),
            g.n(),
            g.m()
        )));
    }
    let n = spec.cells();
    let mut builder = BasisBuilder::with_capacity(spec.face_count(), 3 * spec.face_count());
    for row in 0..n {
        for col in 0..n {
            for tri in spec.cell_triangles(row, col) {
                let mut entries = [(0, 0i8); 3];
                for (k, entry) in entries.iter_mut().enumerate() {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    let e = g.edge_id(a, b).ok_or_else(|| {
                        Error::NotAGridGraph(format!("missing edge {{{}, {}}}", a + 1, b + 1))
                    })?;
                    *entry = (e, if a > b { 1 } else { -1 });
                }
                builder.push(None, entries);
            }
        }
    }
    Ok(builder.finish(g, BasisKind::Face))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DecompositionMode {
    /// Subspace `i` spans the cycles through vertex `i`.
    #[default]
    Vertex,
    /// One subspace per cycle.
    SingleCycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    pub mode: DecompositionMode,
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

impl SubspaceDecomposition {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cycle ids of subspace `k`, ascending.
    pub fn subspace(&self, k: usize) -> &[usize] {
        &self.ids[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn subspaces(&self) -> impl ExactSizeIterator<Item = &[usize]> {
        (0..self.len()).map(move |k| self.subspace(k))
    }
}

/// Splits the basis into overlapping subspaces. Vertex subspaces come in
/// ascending vertex order; vertices on no cycle contribute nothing.
pub fn vertex_subspaces(
    basis: &CycleBasis,
    g: &Graph,
    mode: DecompositionMode,
) -> Result<SubspaceDecomposition> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let (offsets, ids) = match mode {
        DecompositionMode::Vertex => {
            let mut offsets = vec![0];
            for v in 0..g.n() {
                let len = basis.cycles_at_vertex(v).len();
                if len > 0 {
                    offsets.push(offsets.last().unwrap() + len);
                }
            }
            (offsets, basis.vertex_to_cycles.ids.clone())
        }
        DecompositionMode::SingleCycle => ((0..=basis.len()).collect(), (0..basis.len()).collect()),
    };
    Ok(SubspaceDecomposition { mode, offsets, ids })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleDiagnostics {
    pub cycles: usize,
    pub expected: usize,
    pub max_length: usize,
    pub total_support: usize,
    /// Rank, when the graph is small enough to check it.
    pub rank: Option<usize>,
}

/// Largest vertex count for which the rank is checked.
pub const RANK_CHECK_LIMIT: usize = 500;

/// Checks every cycle has zero divergence and, for `n ≤ 500`, that the basis
/// has full rank `m − n + 1`.
pub fn validate_cycle_basis(g: &Graph, basis: &CycleBasis) -> Result<CycleDiagnostics> {
    let mut acc = std::collections::HashMap::new();
    for (id, c) in basis.cycles().enumerate() {
        c.integer_divergence(g, &mut acc);
        let mut bad: Vec<usize> = acc
            .iter()
            .filter(|(_, &d)| d != 0)
            .map(|(&v, _)| v)
            .collect();
        bad.sort_unstable();
        if let Some(&v) = bad.first() {
            return Err(Error::InvalidCycle {
                cycle: id,
                vertex: v + 1,
            });
        }
    }
    let expected = g.cycle_rank();
    let rank = if g.n() <= RANK_CHECK_LIMIT {
        let rank = modular_rank(g.m(), basis);
        if rank != expected || basis.len() != expected {
            return Err(Error::RankDeficient { rank, expected });
        }
        Some(rank)
    } else {
        None
    };
    Ok(CycleDiagnostics {
        cycles: basis.len(),
        expected,
        max_length: basis.cycles().map(|c| c.len()).max().unwrap_or(0),
        total_support: basis.total_support(),
        rank,
    })
}

/// Rank of the basis matrix over `GF(p)`, `p = 2³¹ − 1`. A full rank modulo
/// `p` implies full rank over the rationals.
fn modular_rank(m: usize, basis: &CycleBasis) -> usize {
    const P: u64 = 2_147_483_647;
    let to_mod = |s: i8| if s > 0 { 1 } else { P - 1 };
    let mut rows: Vec<Vec<u64>> = basis
        .cycles()
        .map(|c| {
            let mut row = vec![0u64; m];
            for &(e, s) in c.entries {
                row[e] = (row[e] + to_mod(s)) % P;
            }
            row
        })
        .collect();
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % P;
            }
            b = b * b % P;
            e >>= 1;
        }
        r
    };
    let mut rank = 0;
    for col in 0..m {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = pow(rows[rank][col], P - 2);
        let pivot_row = std::mem::take(&mut rows[rank]);
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row.is_empty() || row[col] == 0 {
                continue;
            }
            let factor = row[col] * inv % P;
            for (x, &p) in row.iter_mut().zip(&pivot_row).skip(col) {
                *x = (*x + P - factor * p % P) % P;
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
