//! Guaranteed upper bound `ψ = ‖DGv − τ‖_{D⁻¹}` on the energy error of an
//! approximate solution `v` of `Lu = f`, together with its per-edge split.
//!
//! `τ = τ_f + τ₀` where `τ_f` is the tree flow with `Gᵀτ_f = f` and `τ₀` is a
//! cycle-space correction that pulls `τ` towards `DGv`.

use std::time::Instant;

use crate::baseline::reference_solution;
use crate::cycles::{
    face_cycle_basis, fundamental_cycle_basis, vertex_subspaces, CycleBasis, DecompositionMode,
};
use crate::error::{Error, Result};
use crate::graph::{divergence, flux, l_seminorm, EdgeFlow, Graph, VertexFunction};
use crate::io::GridSpec;
use crate::schwarz::{exact_cycle_minimizer, minimize_cycle_component, SweepOrder};
use crate::tree::compute_tau_f;

/// Relative tolerance for `Gᵀτ = f`.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisChoice {
    #[default]
    Fundamental,
    /// Triangle faces of a uniform grid graph.
    Face(GridSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CycleSolver {
    #[default]
    Schwarz,
    /// Dense normal equations; small graphs only.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub basis: BasisChoice,
    pub decomposition: DecompositionMode,
    pub sweeps: usize,
    /// 0-based root of the spanning tree.
    pub root: usize,
    pub order: SweepOrder,
    pub solver: CycleSolver,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            basis: BasisChoice::Fundamental,
            decomposition: DecompositionMode::Vertex,
            sweeps: 3,
            root: 0,
            order: SweepOrder::Ascending,
            solver: CycleSolver::Schwarz,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    pub psi: f64,
    /// `ψ_e`, in canonical edge order; `Σ ψ_e² = ψ²`.
    pub per_edge: Vec<f64>,
    pub tau: EdgeFlow,
    pub tau_f: EdgeFlow,
    pub sweeps: usize,
    /// `‖Gᵀτ − f‖`.
    pub divergence_residual: f64,
    /// Objective before the first sweep and after each sweep.
    pub trace: Vec<f64>,
    pub cycles: usize,
    pub pseudo_solved: usize,
    pub seconds: f64,
}

/// Runs the full estimator for `v` against the right-hand side `f`.
pub fn error_estimate(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
    config: &EstimatorConfig,
) -> Result<ErrorEstimate> {
    let start = Instant::now();
    if v.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: v.len(),
        });
    }
    let cf = compute_tau_f(g, f, config.root)?;
    let basis = match config.basis {
        BasisChoice::Fundamental => fundamental_cycle_basis(g, &cf.tree),
        BasisChoice::Face(spec) => face_cycle_basis(g, &spec)?,
    };
    let mut r0 = flux(g, v)?;
    for (r, t) in r0.iter_mut().zip(cf.tau_f.iter()) {
        *r -= t;
    }
    let (mut tau, trace, sweeps, pseudo_solved) = cycle_correction(g, &basis, &r0, config)?;
    drop(r0);
    for (t, t_f) in tau.iter_mut().zip(cf.tau_f.iter()) {
        *t += t_f;
    }
    let per_edge = local_psi(g, v, &tau)?;
    let psi = per_edge.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut div = divergence(g, &tau)?;
    for (d, f) in div.iter_mut().zip(f.iter()) {
        *d -= f;
    }
    let divergence_residual = div.norm();
    let tolerance = DIVERGENCE_TOLERANCE * f.norm().max(1.0);
    if divergence_residual > tolerance {
        return Err(Error::NotInWf {
            residual: divergence_residual,
            tolerance,
        });
    }
    Ok(ErrorEstimate {
        psi,
        per_edge,
        tau,
        tau_f: cf.tau_f,
        sweeps,
        divergence_residual,
        trace,
        cycles: basis.len(),
        pseudo_solved,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn cycle_correction(
    g: &Graph,
    basis: &CycleBasis,
    r0: &EdgeFlow,
    config: &EstimatorConfig,
) -> Result<(EdgeFlow, Vec<f64>, usize, usize)> {
    let initial = crate::graph::dinv_norm(g, r0)?;
    if basis.is_empty() {
        return Ok((EdgeFlow::zeros(g.m()), vec![initial], 0, 0));
    }
    match config.solver {
        CycleSolver::Exact => {
            let sol = exact_cycle_minimizer(g, basis, r0)?;
            Ok((sol.tau0, vec![initial, sol.objective], 0, 0))
        }
        CycleSolver::Schwarz => {
            let dec = vertex_subspaces(basis, g, config.decomposition)?;
            let out = minimize_cycle_component(g, basis, &dec, r0, config.sweeps, config.order)?;
            Ok((out.tau0, out.trace, out.sweeps, out.pseudo_solved))
        }
    }
}

/// `‖DGv − τ‖_{D⁻¹}`.
pub fn global_psi(g: &Graph, v: &VertexFunction, tau: &EdgeFlow) -> Result<f64> {
    crate::graph::dinv_norm(g, &flux(g, v)?.sub(tau))
}

/// `ψ_e = ω_e^{-1/2} |(DGv − τ)_e|`.
pub fn local_psi(g: &Graph, v: &VertexFunction, tau: &EdgeFlow) -> Result<Vec<f64>> {
    for (expected, actual) in [(g.n(), v.len()), (g.m(), tau.len())] {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
    }
    Ok(g.edges()
        .iter()
        .zip(tau.iter())
        .map(|(e, t)| (e.weight * (v[e.hi] - v[e.lo]) - t).abs() / e.weight.sqrt())
        .collect())
}

/// Per-edge energy error `ω_e^{1/2} |(G(u − v))_e|`.
pub fn local_true_error(g: &Graph, u: &VertexFunction, v: &VertexFunction) -> Result<Vec<f64>> {
    let d = crate::graph::gradient(g, &u.sub(v))?;
    Ok(g.edges()
        .iter()
        .zip(d.iter())
        .map(|(e, x)| e.weight.sqrt() * x.abs())
        .collect())
}

/// `ψ / ‖u − v‖_L`.
pub fn efficiency_index(psi: f64, true_error: f64) -> Result<f64> {
    if true_error == 0.0 {
        return Err(Error::ZeroTrueError);
    }
    Ok(psi / true_error)
}

/// Energy error of `v` against a reference solve of `Lu = f`.
pub fn true_error(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
) -> Result<(f64, VertexFunction)> {
    let u = reference_solution(g, f, 1e-12)?;
    Ok((l_seminorm(g, &u.sub(v))?, u))
}

/// Relative defect of `‖u−v‖²_L + ‖DGu − τ‖²_{D⁻¹} = ‖DGv − τ‖²_{D⁻¹}` with
/// `f = Lu`; fails if `τ` does not balance `f`.
pub fn hypercircle_check(
    g: &Graph,
    u: &VertexFunction,
    v: &VertexFunction,
    tau: &EdgeFlow,
) -> Result<f64> {
    let f = crate::graph::apply_laplacian(g, u)?;
    let residual = divergence(g, tau)?.sub(&f).norm();
    let tolerance = DIVERGENCE_TOLERANCE * f.norm().max(1.0);
    if residual > tolerance {
        return Err(Error::NotInWf {
            residual,
            tolerance,
        });
    }
    let lhs = l_seminorm(g, &u.sub(v))?.powi(2) + global_psi(g, u, tau)?.powi(2);
    let rhs = global_psi(g, v, tau)?.powi(2);
    Ok((lhs - rhs).abs() / rhs.max(1.0))
}
