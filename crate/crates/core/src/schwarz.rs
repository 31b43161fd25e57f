//! Least-squares over the cycle space by multiplicative Schwarz sweeps.
//!
//! Given `r0 = DGv − τ_f`, we look for `τ_0 = Σ α_j c^j` minimizing
//! `‖r0 − τ_0‖_{D⁻¹}`. Each subspace solve is an exact minimization over the
//! span of a handful of cycles, realized through the normal equations
//! `M α = b` with `M_{jl} = (c^j, c^l)_{D⁻¹}` and `b_j = (r, c^j)_{D⁻¹}`.
//! The Gram matrices do not depend on the residual and are factorized once.
//!
//! Updates touch only the edges in the subspace's support, so a sweep costs
//! `O(Σ support · dim)`, which is `O(m)` for short-cycle bases.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cycles::{CycleBasis, SubspaceDecomposition};
use crate::error::{Error, Result};
use crate::graph::{dinv_norm_sq_unchecked, EdgeFlow, Graph};

/// Relative eigenvalue / pivot threshold below which a local system is
/// treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Factorized Gram matrices of all subspaces of a basis, packed
/// contiguously so that a sweep streams through memory in subspace order.
#[derive(Debug, Clone)]
pub struct LocalSystems<'b> {
    basis: &'b CycleBasis,
    cycle_offsets: Vec<usize>,
    cycle_ids: Vec<u32>,
    /// Cholesky: packed lower factor (`k(k+1)/2`, by rows) holding reciprocal
    /// pivots on its diagonal. Pseudo-solve: eigenvectors (`k²`, row-major)
    /// then inverse eigenvalues (`k`).
    factors: Vec<f64>,
    factor_offsets: Vec<usize>,
    pseudo: Vec<bool>,
}

/// Borrowed view of one subspace's local system.
#[derive(Debug, Clone, Copy)]
pub struct LocalGram<'a> {
    systems: &'a LocalSystems<'a>,
    index: usize,
}

impl<'a> LocalGram<'a> {
    /// Cycle ids of the subspace.
    pub fn cycles(&self) -> impl ExactSizeIterator<Item = usize> + 'a {
        self.cycle_slice().iter().map(|&c| c as usize)
    }

    pub fn dim(&self) -> usize {
        self.cycle_slice().len()
    }

    fn cycle_slice(&self) -> &'a [u32] {
        let s = self.systems;
        &s.cycle_ids[s.cycle_offsets[self.index]..s.cycle_offsets[self.index + 1]]
    }

    /// `(local slot, edge id, ±1)` over all cycles of the subspace.
    fn terms(&self) -> impl Iterator<Item = (usize, usize, i8)> + 'a {
        let basis = self.systems.basis;
        self.cycle_slice()
            .iter()
            .enumerate()
            .flat_map(move |(slot, &c)| {
                basis
                    .entries(c as usize)
                    .iter()
                    .map(move |&(e, s)| (slot, e, s))
            })
    }

    /// Distinct edges touched by the subspace, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut edges: Vec<usize> = self.terms().map(|(_, e, _)| e).collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `M_{jl}`, row-major, reassembled from the edge weights of `g`.
    pub fn gram(&self, g: &Graph) -> Vec<f64> {
        let k = self.dim();
        let mut gram = vec![0.0; k * k];
        for (sa, ea, a) in self.terms() {
            for (sb, _, b) in self.terms().filter(|&(_, eb, _)| eb == ea) {
                gram[sa * k + sb] += f64::from(a * b) / g.weight(ea);
            }
        }
        gram
    }

    pub fn is_pseudo(&self) -> bool {
        self.systems.pseudo[self.index]
    }

    fn factor(&self) -> &'a [f64] {
        let s = self.systems;
        &s.factors[s.factor_offsets[self.index]..s.factor_offsets[self.index + 1]]
    }

    /// Overwrites `b` with `M⁻¹ b` (or `M⁺ b`).
    fn solve(&self, b: &mut [f64], scratch: &mut [f64]) {
        let k = b.len();
        let f = self.factor();
        if !self.is_pseudo() {
            for i in 0..k {
                let row = &f[i * (i + 1) / 2..][..=i];
                let s = b[i]
                    - row[..i]
                        .iter()
                        .zip(&b[..i])
                        .map(|(l, x)| l * x)
                        .sum::<f64>();
                b[i] = s * row[i];
            }
            for i in (0..k).rev() {
                let mut s = b[i];
                for j in i + 1..k {
                    s -= f[j * (j + 1) / 2 + i] * b[j];
                }
                b[i] = s * f[i * (i + 1) / 2 + i];
            }
        } else {
            let (mat, diag) = f.split_at(k * k);
            for c in 0..k {
                scratch[c] = (0..k).map(|r| mat[r * k + c] * b[r]).sum::<f64>() * diag[c];
            }
            for (r, out) in b.iter_mut().enumerate() {
                *out = (0..k).map(|c| mat[r * k + c] * scratch[c]).sum();
            }
        }
    }
}

impl<'b> LocalSystems<'b> {
    pub fn len(&self) -> usize {
        self.pseudo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo.is_empty()
    }

    pub fn local(&self, index: usize) -> LocalGram<'_> {
        LocalGram {
            systems: self,
            index,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = LocalGram<'_>> {
        (0..self.len()).map(move |index| self.local(index))
    }

    /// Subspaces that needed the pseudo-inverse fallback.
    pub fn pseudo_solved(&self) -> usize {
        self.pseudo.iter().filter(|p| **p).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Fall back to the pseudo-inverse on a (near) singular Gram matrix.
    #[default]
    PseudoSolve,
    /// Report [`Error::SingularLocalSystem`].
    Reject,
}

/// Assembles and factorizes the Gram matrix of every subspace.
pub fn build_local_systems<'b>(
    g: &Graph,
    basis: &'b CycleBasis,
    decomposition: &SubspaceDecomposition,
    policy: SingularPolicy,
) -> Result<LocalSystems<'b>> {
    let largest = g.m().max(basis.len());
    if largest > u32::MAX as usize {
        return Err(Error::TooLarge {
            size: largest,
            limit: u32::MAX as usize,
        });
    }
    let count = decomposition.len();
    let (mut cycle_total, mut factor_total) = (0, 0);
    for cycles in decomposition.subspaces() {
        let k = cycles.len();
        cycle_total += k;
        factor_total += k * (k + 1) / 2;
    }
    let mut sys = LocalSystems {
        basis,
        cycle_offsets: Vec::with_capacity(count + 1),
        cycle_ids: Vec::with_capacity(cycle_total),
        factors: Vec::with_capacity(factor_total),
        factor_offsets: Vec::with_capacity(count + 1),
        pseudo: Vec::with_capacity(count),
    };
    sys.cycle_offsets.push(0);
    sys.factor_offsets.push(0);
    let mut gram = Vec::new();
    let mut scratch = vec![0.0; g.m()];
    for (id, cycles) in decomposition.subspaces().enumerate() {
        let k = cycles.len();
        gram.clear();
        gram.resize(k * k, 0.0);
        for (a, &ca) in cycles.iter().enumerate() {
            for &(e, s) in basis.entries(ca) {
                scratch[e] = f64::from(s) / g.weight(e);
            }
            for (b, &cb) in cycles.iter().enumerate().skip(a) {
                let v: f64 = basis
                    .entries(cb)
                    .iter()
                    .map(|&(e, s)| scratch[e] * f64::from(s))
                    .sum();
                gram[a * k + b] = v;
                gram[b * k + a] = v;
            }
            for &(e, _) in basis.entries(ca) {
                scratch[e] = 0.0;
            }
        }
        if cholesky_factor(&gram, k, &mut sys.factors) {
            sys.pseudo.push(false);
        } else {
            match policy {
                SingularPolicy::PseudoSolve => {
                    sys.factors.extend(pseudo_factor(&gram, k));
                    sys.pseudo.push(true);
                }
                SingularPolicy::Reject => return Err(Error::SingularLocalSystem { subspace: id }),
            }
        }
        sys.factor_offsets.push(sys.factors.len());
        sys.cycle_ids.extend(cycles.iter().map(|&c| c as u32));
        sys.cycle_offsets.push(sys.cycle_ids.len());
    }
    Ok(sys)
}

/// Appends the packed lower factor, with reciprocal pivots on the diagonal,
/// to `out`; on a (near) singular pivot `out` is left unchanged and `false`
/// is returned.
fn cholesky_factor(gram: &[f64], k: usize, out: &mut Vec<f64>) -> bool {
    let max_diag = (0..k).map(|i| gram[i * k + i]).fold(0.0, f64::max);
    let base = out.len();
    out.resize(base + k * (k + 1) / 2, 0.0);
    let low = &mut out[base..];
    for i in 0..k {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let mut s = gram[i * k + j];
            for p in 0..j {
                s -= low[ri + p] * low[rj + p];
            }
            if i == j {
                if s <= SINGULAR_THRESHOLD * max_diag {
                    out.truncate(base);
                    return false;
                }
                low[ri + i] = 1.0 / s.sqrt();
            } else {
                low[ri + j] = s * low[rj + j];
            }
        }
    }
    true
}

/// Eigenvectors (`k²`, row-major) followed by pseudo-inverted eigenvalues.
fn pseudo_factor(gram: &[f64], k: usize) -> Vec<f64> {
    let max_diag = (0..k).map(|i| gram[i * k + i]).fold(0.0, f64::max);
    let eig = DMatrix::from_row_slice(k, k, gram).symmetric_eigen();
    let cutoff = SINGULAR_THRESHOLD * max_diag;
    let mut flat = vec![0.0; k * k + k];
    for r in 0..k {
        for c in 0..k {
            flat[r * k + c] = eig.eigenvectors[(r, c)];
        }
    }
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        flat[k * k + c] = if l > cutoff { 1.0 / l } else { 0.0 };
    }
    flat
}

/// Current iterate of the cycle-space minimization.
#[derive(Debug, Clone)]
pub struct SchwarzState {
    residual: EdgeFlow,
    inv_weight: Vec<f64>,
    alpha: Vec<f64>,
    objective_sq: f64,
    sweep_count: usize,
    rhs: Vec<f64>,
    alpha_local: Vec<f64>,
    scratch: Vec<f64>,
}

impl SchwarzState {
    /// Starts from `τ_0 = 0`, so the residual is `r0` itself.
    pub fn new(g: &Graph, basis: &CycleBasis, r0: &EdgeFlow) -> Result<Self> {
        if r0.len() != g.m() {
            return Err(Error::DimensionMismatch {
                expected: g.m(),
                actual: r0.len(),
            });
        }
        Ok(SchwarzState {
            objective_sq: dinv_norm_sq_unchecked(g, r0),
            residual: r0.clone(),
            inv_weight: g.edges().iter().map(|e| 1.0 / e.weight).collect(),
            alpha: vec![0.0; basis.len()],
            sweep_count: 0,
            rhs: Vec::new(),
            alpha_local: Vec::new(),
            scratch: Vec::new(),
        })
    }

    /// `‖r‖_{D⁻¹}` (cached).
    pub fn objective(&self) -> f64 {
        self.objective_sq.max(0.0).sqrt()
    }

    pub fn residual(&self) -> &EdgeFlow {
        &self.residual
    }

    /// `τ_0 = Σ α_j c^j`, rebuilt from the coefficients.
    pub fn tau0(&self, basis: &CycleBasis) -> EdgeFlow {
        basis.combine(self.residual.len(), &self.alpha)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sweep_count(&self) -> usize {
        self.sweep_count
    }

    /// Replaces the cached objective by a fresh `O(m)` evaluation.
    pub fn refresh_objective(&mut self) -> f64 {
        self.objective_sq = self
            .residual
            .iter()
            .zip(&self.inv_weight)
            .map(|(r, w)| r * r * w)
            .sum();
        self.objective()
    }

    /// `(τ_0, residual, α)`.
    pub fn into_parts(self, basis: &CycleBasis) -> (EdgeFlow, EdgeFlow, Vec<f64>) {
        (self.tau0(basis), self.residual, self.alpha)
    }
}

/// Exact minimization over one subspace. Returns the new objective.
pub fn local_solve(state: &mut SchwarzState, local: LocalGram<'_>) -> f64 {
    let k = local.dim();
    let basis = local.systems.basis;
    let cycles = local.cycle_slice();
    state.rhs.clear();
    state.rhs.resize(k, 0.0);
    for (b, &c) in state.rhs.iter_mut().zip(cycles) {
        *b = basis
            .entries(c as usize)
            .iter()
            .map(|&(e, s)| f64::from(s) * state.residual[e] * state.inv_weight[e])
            .sum();
    }
    if state.rhs.iter().all(|b| *b == 0.0) {
        return state.objective();
    }
    state.alpha_local.clear();
    state.alpha_local.extend_from_slice(&state.rhs);
    state.scratch.resize(k, 0.0);
    local.solve(&mut state.alpha_local, &mut state.scratch);
    let (b, alpha) = (&state.rhs, &state.alpha_local);
    // with Mα = b the objective drops by exactly αᵀb
    let decrease: f64 = alpha.iter().zip(b).map(|(a, b)| a * b).sum();
    for (&c, &a) in cycles.iter().zip(alpha.iter()) {
        for &(e, s) in basis.entries(c as usize) {
            state.residual[e] -= a * f64::from(s);
        }
        state.alpha[c as usize] += a;
    }
    state.objective_sq -= decrease.max(0.0);
    state.objective()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Subspaces in ascending vertex (or cycle) order.
    #[default]
    Ascending,
    /// A fresh seeded permutation every sweep.
    Random(u64),
}

/// One pass over all subspaces in `order`. When `trace` is given, the
/// objective after every local solve is appended to it.
pub fn schwarz_sweep(
    state: &mut SchwarzState,
    systems: &LocalSystems,
    order: &[usize],
    mut trace: Option<&mut Vec<f64>>,
) -> f64 {
    for &k in order {
        let obj = local_solve(state, systems.local(k));
        if let Some(t) = trace.as_deref_mut() {
            t.push(obj);
        }
    }
    state.sweep_count += 1;
    state.refresh_objective()
}

#[derive(Debug, Clone)]
pub struct CycleMinimization {
    pub tau0: EdgeFlow,
    pub residual: EdgeFlow,
    pub alpha: Vec<f64>,
    /// Objective before the first sweep and after each sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub pseudo_solved: usize,
}

/// Runs up to `max_sweeps` sweeps from `τ_0 = 0`.
pub fn minimize_cycle_component(
    g: &Graph,
    basis: &CycleBasis,
    decomposition: &SubspaceDecomposition,
    r0: &EdgeFlow,
    max_sweeps: usize,
    order: SweepOrder,
) -> Result<CycleMinimization> {
    let mut state = SchwarzState::new(g, basis, r0)?;
    let mut trace = vec![state.objective()];
    if max_sweeps == 0 || basis.is_empty() || decomposition.is_empty() {
        let (tau0, residual, alpha) = state.into_parts(basis);
        return Ok(CycleMinimization {
            tau0,
            residual,
            alpha,
            trace,
            sweeps: 0,
            pseudo_solved: 0,
        });
    }
    let systems = build_local_systems(g, basis, decomposition, SingularPolicy::PseudoSolve)?;
    let mut sequence: Vec<usize> = (0..decomposition.len()).collect();
    let mut rng = match order {
        SweepOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        SweepOrder::Ascending => None,
    };
    for _ in 0..max_sweeps {
        if let Some(rng) = rng.as_mut() {
            sequence.shuffle(rng);
        }
        trace.push(schwarz_sweep(&mut state, &systems, &sequence, None));
    }
    let sweeps = state.sweep_count();
    let (tau0, residual, alpha) = state.into_parts(basis);
    Ok(CycleMinimization {
        tau0,
        residual,
        alpha,
        trace,
        sweeps,
        pseudo_solved: systems.pseudo_solved(),
    })
}

/// Vertex-count limit for the dense routines.
pub const DENSE_VERTEX_LIMIT: usize = 2000;
/// Cycle-space dimension limit for [`exact_cycle_minimizer`].
pub const DENSE_CYCLE_LIMIT: usize = 8000;

#[derive(Debug, Clone)]
pub struct ExactCycleSolution {
    pub alpha: Vec<f64>,
    pub tau0: EdgeFlow,
    pub objective: f64,
}

/// Global minimizer of `‖r0 − Σ α_j c^j‖_{D⁻¹}` through the dense normal
/// equations. Verification tool for desk-scale graphs.
pub fn exact_cycle_minimizer(
    g: &Graph,
    basis: &CycleBasis,
    r0: &EdgeFlow,
) -> Result<ExactCycleSolution> {
    if g.n() > DENSE_VERTEX_LIMIT {
        return Err(Error::TooLarge {
            size: g.n(),
            limit: DENSE_VERTEX_LIMIT,
        });
    }
    if basis.len() > DENSE_CYCLE_LIMIT {
        return Err(Error::TooLarge {
            size: basis.len(),
            limit: DENSE_CYCLE_LIMIT,
        });
    }
    if r0.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            actual: r0.len(),
        });
    }
    let d = basis.len();
    let mut normal = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut sign_on_edge = vec![0i8; d];
    for e in 0..g.m() {
        let on = basis.cycles_on_edge(e);
        if on.is_empty() {
            continue;
        }
        let inv_w = 1.0 / g.weight(e);
        for &c in on {
            sign_on_edge[c] = basis
                .cycle(c)
                .entries
                .iter()
                .find(|&&(x, _)| x == e)
                .map(|&(_, s)| s)
                .unwrap_or(0);
        }
        for &a in on {
            let sa = f64::from(sign_on_edge[a]);
            rhs[a] += sa * r0[e] * inv_w;
            for &b in on {
                normal[(a, b)] += sa * f64::from(sign_on_edge[b]) * inv_w;
            }
        }
    }
    let alpha = match normal.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => normal
            .svd(true, true)
            .solve(&rhs, SINGULAR_THRESHOLD)
            .map_err(|_| Error::SingularLocalSystem { subspace: 0 })?,
    };
    let alpha: Vec<f64> = alpha.iter().copied().collect();
    let tau0 = basis.combine(g.m(), &alpha);
    let objective = dinv_norm_sq_unchecked(g, &r0.sub(&tau0)).sqrt();
    Ok(ExactCycleSolution {
        alpha,
        tau0,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{
        face_cycle_basis, fundamental_cycle_basis, vertex_subspaces, BasisKind, CycleVector,
        DecompositionMode,
    };
    use crate::graph::fixtures::{k3, k3_rhs};
    use crate::graph::{divergence, flux, validate_graph, RawEdge, VertexFunction};
    use crate::io::{random_connected_graph, uniform_grid};
    use crate::tree::{bfs_tree, compute_tau_f};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn k3_setup() -> (Graph, CycleBasis, SubspaceDecomposition, EdgeFlow) {
        let g = k3();
        let cf = compute_tau_f(&g, &k3_rhs(), 0).unwrap();
        let basis = fundamental_cycle_basis(&g, &cf.tree);
        let dec = vertex_subspaces(&basis, &g, DecompositionMode::Vertex).unwrap();
        // v = 0, so r0 = -τ_f
        let r0 = cf.tau_f.scale(-1.0);
        (g, basis, dec, r0)
    }

    #[test]
    fn k3_gram() {
        let (g, basis, dec, _) = k3_setup();
        let sys = build_local_systems(&g, &basis, &dec, SingularPolicy::Reject).unwrap();
        assert_eq!(sys.len(), 3);
        assert_eq!(sys.local(0).gram(&g), vec![3.0]);
    }

    #[test]
    fn k3_local_solve() {
        let (g, basis, dec, r0) = k3_setup();
        assert_eq!(r0.0, vec![1.0, 0.0, 0.0]);
        let sys = build_local_systems(&g, &basis, &dec, SingularPolicy::Reject).unwrap();
        let mut state = SchwarzState::new(&g, &basis, &r0).unwrap();
        let obj = local_solve(&mut state, sys.local(0));
        assert_relative_eq!(state.alpha()[0], 1.0 / 3.0, epsilon = 1e-15);
        let expect = [2.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0];
        for (r, e) in state.residual().iter().zip(expect) {
            assert_relative_eq!(*r, e, epsilon = 1e-15);
        }
        assert_relative_eq!(obj * obj, 2.0 / 3.0, epsilon = 1e-14);

        // idempotent: the residual is now orthogonal to the subspace
        let before = state.residual().clone();
        local_solve(&mut state, sys.local(0));
        for (a, b) in before.iter().zip(state.residual().iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn k3_one_sweep_reaches_minimum() {
        let (g, basis, dec, r0) = k3_setup();
        let out =
            minimize_cycle_component(&g, &basis, &dec, &r0, 1, SweepOrder::Ascending).unwrap();
        assert_relative_eq!(out.trace[1], (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        let exact = exact_cycle_minimizer(&g, &basis, &r0).unwrap();
        assert_relative_eq!(exact.alpha[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(exact.objective, (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn zero_sweeps_returns_zero_tau0() {
        let (g, basis, dec, r0) = k3_setup();
        let out =
            minimize_cycle_component(&g, &basis, &dec, &r0, 0, SweepOrder::Ascending).unwrap();
        assert!(out.tau0.iter().all(|x| *x == 0.0));
        assert_eq!(out.trace, vec![1.0]);
    }

    #[test]
    fn orthogonal_residual_is_fixed_point() {
        let (g, basis, dec, _) = k3_setup();
        // (1, 1, 0) is D⁻¹-orthogonal to the cycle (1, -1, 1)
        let r0 = EdgeFlow(vec![1.0, 1.0, 0.0]);
        let sys = build_local_systems(&g, &basis, &dec, SingularPolicy::Reject).unwrap();
        let mut state = SchwarzState::new(&g, &basis, &r0).unwrap();
        let order: Vec<usize> = (0..dec.len()).collect();
        schwarz_sweep(&mut state, &sys, &order, None);
        assert_eq!(state.alpha(), &[0.0]);
        assert_eq!(state.residual(), &r0);
    }

    #[test]
    fn disjoint_cycles_give_diagonal_gram() {
        // two triangles sharing vertex 1 only: a bow tie
        let g = validate_graph(
            &[
                RawEdge::new(2, 1, 1.0),
                RawEdge::new(3, 1, 2.0),
                RawEdge::new(3, 2, 1.0),
                RawEdge::new(4, 1, 1.0),
                RawEdge::new(5, 1, 1.0),
                RawEdge::new(5, 4, 4.0),
            ],
            5,
        )
        .unwrap();
        let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
        let dec = vertex_subspaces(&basis, &g, DecompositionMode::Vertex).unwrap();
        let sys = build_local_systems(&g, &basis, &dec, SingularPolicy::Reject).unwrap();
        let g0 = sys.local(0);
        assert_eq!(g0.dim(), 2);
        let m = g0.gram(&g);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[2], 0.0);
        assert_relative_eq!(m[0], 2.5);
        assert_relative_eq!(m[3], 2.25);
    }

    #[test]
    fn grid_face_grams_are_spd() {
        let grid = uniform_grid(1).unwrap();
        let basis = face_cycle_basis(&grid.graph, &grid.spec).unwrap();
        let dec = vertex_subspaces(&basis, &grid.graph, DecompositionMode::Vertex).unwrap();
        let sys = build_local_systems(&grid.graph, &basis, &dec, SingularPolicy::Reject).unwrap();
        assert!(sys.iter().all(|g| g.dim() <= 6 && !g.is_pseudo()));
    }

    #[test]
    fn dependent_cycles_fall_back_to_pseudo_solve() {
        let g = k3();
        let c = CycleVector {
            anchor: None,
            entries: vec![(0, 1), (1, -1), (2, 1)],
        };
        let basis = CycleBasis::from_cycles(&g, BasisKind::Face, vec![c.clone(), c]);
        let dec = vertex_subspaces(&basis, &g, DecompositionMode::Vertex).unwrap();
        assert!(matches!(
            build_local_systems(&g, &basis, &dec, SingularPolicy::Reject),
            Err(Error::SingularLocalSystem { subspace: 0 })
        ));
        let r0 = EdgeFlow(vec![1.0, 0.0, 0.0]);
        let out =
            minimize_cycle_component(&g, &basis, &dec, &r0, 2, SweepOrder::Ascending).unwrap();
        assert_eq!(out.pseudo_solved, 3);
        assert_relative_eq!(out.trace[1], (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn exact_rejects_large_graphs() {
        let g = random_connected_graph(2001, 0, (1.0, 1.0), 1).unwrap();
        let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
        assert!(matches!(
            exact_cycle_minimizer(&g, &basis, &EdgeFlow::zeros(g.m())),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn exact_recovers_cycle_flows() {
        let g = random_connected_graph(30, 40, (0.5, 3.0), 5).unwrap();
        let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
        let alpha: Vec<f64> = (0..basis.len()).map(|k| (k as f64).sin()).collect();
        let r0 = basis.combine(g.m(), &alpha);
        let sol = exact_cycle_minimizer(&g, &basis, &r0).unwrap();
        assert!(sol.objective < 1e-10);
    }

    fn random_problem(
        n: usize,
        k: usize,
        seed: u64,
    ) -> (Graph, EdgeFlow, VertexFunction, VertexFunction) {
        let g = random_connected_graph(n, k, (0.2, 5.0), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        let u = VertexFunction((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let v = VertexFunction((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let f = crate::graph::apply_laplacian(&g, &u).unwrap();
        let cf = compute_tau_f(&g, &f, 0).unwrap();
        let r0 = flux(&g, &v).unwrap().sub(&cf.tau_f);
        (g, r0, u, v)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sweeps_are_monotone_and_divergence_free(n in 3usize..60, k in 1usize..90, seed in any::<u64>(), single in any::<bool>()) {
            let k = k.min(n * (n - 1) / 2 - (n - 1));
            let (g, r0, _, _) = random_problem(n, k, seed);
            let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
            let mode = if single { DecompositionMode::SingleCycle } else { DecompositionMode::Vertex };
            let dec = vertex_subspaces(&basis, &g, mode).unwrap();
            let sys = build_local_systems(&g, &basis, &dec, SingularPolicy::Reject).unwrap();
            let mut state = SchwarzState::new(&g, &basis, &r0).unwrap();
            let mut trace = vec![state.objective()];
            let order: Vec<usize> = (0..dec.len()).collect();
            for _ in 0..4 {
                schwarz_sweep(&mut state, &sys, &order, Some(&mut trace));
                trace.push(state.objective());
                let tau0 = state.tau0(&basis);
                let div = divergence(&g, &tau0).unwrap();
                let scale = tau0.norm().max(1.0);
                prop_assert!(div.iter().all(|d| d.abs() <= 1e-12 * scale));
                let fresh = dinv_norm_sq_unchecked(&g, state.residual()).sqrt();
                prop_assert!((fresh - state.objective()).abs() <= 1e-12 * fresh.max(1.0));
            }
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }

        #[test]
        fn converges_to_exact_minimizer(n in 3usize..40, k in 1usize..60, seed in any::<u64>()) {
            let k = k.min(n * (n - 1) / 2 - (n - 1));
            let (g, r0, u, v) = random_problem(n, k, seed);
            let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
            let dec = vertex_subspaces(&basis, &g, DecompositionMode::Vertex).unwrap();
            let exact = exact_cycle_minimizer(&g, &basis, &r0).unwrap();
            let truth = crate::graph::l_seminorm(&g, &u.sub(&v)).unwrap();
            prop_assert!((exact.objective - truth).abs() <= 1e-8 * truth);
            let out = minimize_cycle_component(&g, &basis, &dec, &r0, 400, SweepOrder::Ascending).unwrap();
            let last = *out.trace.last().unwrap();
            prop_assert!(last - exact.objective <= 1e-6 * exact.objective.max(1.0), "{} vs {}", last, exact.objective);
            prop_assert!(last >= truth - 1e-10);
        }
    }

    #[test]
    fn incremental_residual_stays_consistent() {
        let (g, r0, _, _) = random_problem(80, 150, 11);
        let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
        let dec = vertex_subspaces(&basis, &g, DecompositionMode::Vertex).unwrap();
        let out =
            minimize_cycle_component(&g, &basis, &dec, &r0, 100, SweepOrder::Random(3)).unwrap();
        let fresh = r0.sub(&out.tau0);
        let scale = fresh.norm();
        for (a, b) in fresh.iter().zip(out.residual.iter()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}
