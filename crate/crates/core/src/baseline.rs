//! Approximate and reference solvers, plus the older two-term error bound
//! minimized by alternating over `(β, τ)`, kept as a comparator.
//!
//! The two-term bound is
//!
//! ```text
//! η(τ)    = ‖DGv − τ‖_{D⁻¹} + C_p⁻¹ ‖Gᵀτ − f‖
//! E(β, τ) = (1 + β) ‖DGv − τ‖²_{D⁻¹} + (1 + 1/β) κ ‖Gᵀτ − f‖²
//! ```
//!
//! with `C_p = sqrt(λ₂(L))`. The penalty factor `κ` is selectable: `C_p⁻²`
//! (the default) keeps `η² ≤ E` for every graph, while `C_p⁻¹` is available
//! for comparison and only bounds `η²` when `C_p ≥ 1`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{
    apply_laplacian, dinv_norm, divergence, gradient, EdgeFlow, Graph, VertexFunction,
};
use crate::schwarz::DENSE_VERTEX_LIMIT;
use crate::tree::check_compatible;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub iterations: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            iterations: 3,
            seed: 0,
            tolerance: 1e-12,
        }
    }
}

/// Forward Gauss–Seidel, `sweeps` passes in ascending vertex order.
pub fn gauss_seidel(
    g: &Graph,
    f: &VertexFunction,
    v0: &VertexFunction,
    sweeps: usize,
) -> Result<VertexFunction> {
    for len in [f.len(), v0.len()] {
        if len != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                actual: len,
            });
        }
    }
    let diag: Vec<f64> = (0..g.n()).map(|i| g.weighted_degree(i)).collect();
    let mut v = v0.clone();
    for _ in 0..sweeps {
        for i in 0..g.n() {
            let off: f64 = g
                .incidences(i)
                .iter()
                .map(|inc| g.weight(inc.edge) * v[inc.neighbor])
                .sum();
            v[i] = (f[i] + off) / diag[i];
        }
    }
    Ok(v)
}

/// Uniform `[0, 1)` entries from a seeded generator, mean removed.
pub fn random_initial_guess(n: usize, seed: u64) -> VertexFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VertexFunction((0..n).map(|_| rng.gen::<f64>()).collect()).mean_free()
}

/// Mean-zero solution of `Lu = f` with `‖Lu − f‖ ≤ tolerance·‖f‖`.
///
/// Dense grounded Cholesky (with refinement) up to 2000 vertices,
/// Jacobi-preconditioned conjugate gradients beyond.
pub fn reference_solution(g: &Graph, f: &VertexFunction, tolerance: f64) -> Result<VertexFunction> {
    if f.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: f.len(),
        });
    }
    check_compatible(f)?;
    let fnorm = f.norm();
    if fnorm == 0.0 {
        return Ok(VertexFunction::zeros(g.n()));
    }
    let u = if g.n() <= DENSE_VERTEX_LIMIT {
        dense_solve(g, f, tolerance)?
    } else {
        conjugate_gradient(g, f, tolerance, 20 * g.n() + 1000)?
    };
    Ok(u.mean_free())
}

fn dense_laplacian(g: &Graph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n(), g.n());
    for e in g.edges() {
        l[(e.hi, e.hi)] += e.weight;
        l[(e.lo, e.lo)] += e.weight;
        l[(e.hi, e.lo)] -= e.weight;
        l[(e.lo, e.hi)] -= e.weight;
    }
    l
}

fn dense_solve(g: &Graph, f: &VertexFunction, tolerance: f64) -> Result<VertexFunction> {
    let n = g.n();
    // ground the last vertex; the reduced Laplacian of a connected graph is SPD
    let reduced = dense_laplacian(g).view((0, 0), (n - 1, n - 1)).into_owned();
    let chol = reduced.cholesky().ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
    })?;
    let fnorm = f.norm();
    let mut u = VertexFunction::zeros(n);
    let mut residual = f.clone();
    let mut rel = 1.0;
    for step in 0..4 {
        let rhs = DVector::from_iterator(n - 1, residual.iter().take(n - 1).copied());
        let du = chol.solve(&rhs);
        for i in 0..n - 1 {
            u[i] += du[i];
        }
        residual = f.sub(&apply_laplacian(g, &u)?);
        rel = residual.norm() / fnorm;
        if rel <= tolerance {
            return Ok(u);
        }
        if step == 3 {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: 4,
        residual: rel,
    })
}

fn conjugate_gradient(
    g: &Graph,
    f: &VertexFunction,
    tolerance: f64,
    max_iter: usize,
) -> Result<VertexFunction> {
    let n = g.n();
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / g.weighted_degree(i)).collect();
    let fnorm = f.norm();
    let mut u = VertexFunction::zeros(n);
    let mut r = f.clone();
    let mut z = VertexFunction(r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect());
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 0..max_iter {
        let rel = r.norm() / fnorm;
        if rel <= tolerance {
            // guard against drift in the recursively updated residual
            let true_rel = f.sub(&apply_laplacian(g, &u)?).norm() / fnorm;
            if true_rel <= tolerance {
                return Ok(u);
            }
            r = f.sub(&apply_laplacian(g, &u)?);
            z = VertexFunction(r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect());
            p = z.clone();
            rz = r.dot(&z);
            if it + 1 == max_iter {
                break;
            }
            continue;
        }
        let lp = apply_laplacian(g, &p)?;
        let curvature = p.dot(&lp);
        if curvature <= 0.0 {
            break;
        }
        let step = rz / curvature;
        for i in 0..n {
            u[i] += step * p[i];
            r[i] -= step * lp[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = f.sub(&apply_laplacian(g, &u)?).norm() / fnorm;
    if residual <= tolerance {
        return Ok(u);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `sqrt(λ₂(L))` from a dense eigendecomposition.
pub fn poincare_constant(g: &Graph) -> Result<f64> {
    if g.n() > DENSE_VERTEX_LIMIT {
        return Err(Error::TooLarge {
            size: g.n(),
            limit: DENSE_VERTEX_LIMIT,
        });
    }
    let mut eig: Vec<f64> = dense_laplacian(g)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig[1].max(0.0).sqrt())
}

/// `η(τ) = ‖DGv − τ‖_{D⁻¹} + C_p⁻¹‖Gᵀτ − f‖`.
pub fn eta(
    g: &Graph,
    v: &VertexFunction,
    tau: &EdgeFlow,
    f: &VertexFunction,
    c_p: f64,
) -> Result<f64> {
    let (a, b) = bound_terms(g, v, tau, f)?;
    Ok(a.sqrt() + b.sqrt() / c_p)
}

/// How the Poincaré constant enters the penalty term of `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyScaling {
    /// `κ = C_p⁻²`, consistent with `η`.
    #[default]
    Squared,
    /// `κ = C_p⁻¹`.
    Linear,
}

impl PenaltyScaling {
    pub fn factor(self, c_p: f64) -> f64 {
        match self {
            PenaltyScaling::Squared => 1.0 / (c_p * c_p),
            PenaltyScaling::Linear => 1.0 / c_p,
        }
    }
}

/// `(‖DGv − τ‖²_{D⁻¹}, ‖Gᵀτ − f‖²)`.
fn bound_terms(
    g: &Graph,
    v: &VertexFunction,
    tau: &EdgeFlow,
    f: &VertexFunction,
) -> Result<(f64, f64)> {
    let a = dinv_norm(g, &crate::graph::flux(g, v)?.sub(tau))?.powi(2);
    let div = divergence(g, tau)?;
    if f.len() != div.len() {
        return Err(Error::DimensionMismatch {
            expected: div.len(),
            actual: f.len(),
        });
    }
    let b = div.sub(f).dot(&div.sub(f));
    Ok((a, b))
}

/// `E(β, τ)`.
pub fn bound_value(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
    tau: &EdgeFlow,
    beta: f64,
    c_p: f64,
    scaling: PenaltyScaling,
) -> Result<f64> {
    let (a, b) = bound_terms(g, v, tau, f)?;
    Ok((1.0 + beta) * a + (1.0 + 1.0 / beta) * scaling.factor(c_p) * b)
}

/// Minimizer of `(1 + β)A + (1 + 1/β)B` over `β > 0`: `β = sqrt(B/A)`.
pub fn beta_step(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::DegenerateBeta { a, b });
    }
    let beta = (b / a).sqrt();
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::DegenerateBeta { a, b });
    }
    Ok(beta)
}

/// Minimizer of `E(β, ·)`: solves `(aD⁻¹ + c G Gᵀ) τ = a Gv + c G f` with
/// `a = 1 + β`, `c = (1 + 1/β) κ`, through the Woodbury identity so that
/// only an `n × n` system `(I/c + L/a)` is factorized.
pub fn tau_step(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
    beta: f64,
    c_p: f64,
    scaling: PenaltyScaling,
) -> Result<EdgeFlow> {
    if g.n() > DENSE_VERTEX_LIMIT {
        return Err(Error::TooLarge {
            size: g.n(),
            limit: DENSE_VERTEX_LIMIT,
        });
    }
    let a = 1.0 + beta;
    let c = (1.0 + 1.0 / beta) * scaling.factor(c_p);
    let rhs = gradient(g, v)?.scale(a).add(&gradient(g, f)?.scale(c));
    // z = (D/a) rhs
    let z = EdgeFlow(
        g.edges()
            .iter()
            .zip(rhs.iter())
            .map(|(e, y)| e.weight * y / a)
            .collect(),
    );
    let mut k = dense_laplacian(g) / a;
    for i in 0..g.n() {
        k[(i, i)] += 1.0 / c;
    }
    let chol = k.cholesky().ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
    })?;
    let gz = divergence(g, &z)?;
    let w = chol.solve(&DVector::from_column_slice(&gz));
    let gw = gradient(g, &VertexFunction(w.iter().copied().collect()))?;
    Ok(EdgeFlow(
        g.edges()
            .iter()
            .zip(z.iter().zip(gw.iter()))
            .map(|(e, (zi, gwi))| zi - e.weight * gwi / a)
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct BoundState {
    pub beta: f64,
    pub tau: EdgeFlow,
    pub c_p: f64,
    /// `E(β, τ)` at the returned state.
    pub e_value: f64,
    /// `E` after every completed τ- and β-step.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Set when a β-step hit `A = 0` or `B = 0`.
    pub degenerate: bool,
}

impl BoundState {
    pub fn sqrt_e(&self) -> f64 {
        self.e_value.max(0.0).sqrt()
    }
}

/// Alternating minimization of `E(β, τ)` from `β⁰ = 1`.
pub fn minimize_bound_alternating(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
    max_iter: usize,
    scaling: PenaltyScaling,
) -> Result<BoundState> {
    if g.n() > DENSE_VERTEX_LIMIT {
        return Err(Error::TooLarge {
            size: g.n(),
            limit: DENSE_VERTEX_LIMIT,
        });
    }
    let c_p = poincare_constant(g)?;
    let mut beta = 1.0;
    let mut tau = EdgeFlow::zeros(g.m());
    let mut history = Vec::new();
    let mut e_value = bound_value(g, v, f, &tau, beta, c_p, scaling)?;
    let mut iterations = 0;
    let mut degenerate = false;
    for _ in 0..max_iter {
        iterations += 1;
        tau = tau_step(g, v, f, beta, c_p, scaling)?;
        history.push(bound_value(g, v, f, &tau, beta, c_p, scaling)?);
        let (a, b) = bound_terms(g, v, &tau, f)?;
        match beta_step(a, scaling.factor(c_p) * b) {
            Ok(next) => beta = next,
            Err(Error::DegenerateBeta { .. }) => {
                degenerate = true;
                e_value = *history.last().unwrap();
                break;
            }
            Err(e) => return Err(e),
        }
        let next = bound_value(g, v, f, &tau, beta, c_p, scaling)?;
        history.push(next);
        let converged = (e_value - next).abs() <= 1e-15 * e_value.abs();
        e_value = next;
        if converged {
            break;
        }
    }
    Ok(BoundState {
        beta,
        tau,
        c_p,
        e_value,
        history,
        iterations,
        degenerate,
    })
}
