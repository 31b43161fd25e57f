//! Reusable experiment drivers shared by the command-line tool and tests.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use crate::baseline::{minimize_bound_alternating, random_initial_guess, PenaltyScaling};
use crate::error::Result;
use crate::estimator::{
    efficiency_index, error_estimate, true_error, BasisChoice, CycleSolver, EstimatorConfig,
};
use crate::graph::{l_seminorm, Graph, VertexFunction};
use crate::io::report::{ComparatorRow, ExperimentRow};
use crate::io::{sample_and_rhs, uniform_grid};
use crate::schwarz::SweepOrder;

/// Smooth field used for the grid experiments.
pub fn grid_field(x: f64, y: f64) -> f64 {
    (FRAC_PI_2 * x).sin() * (FRAC_PI_2 * y).sin()
}

/// For one grid level: sampled `u`, `v = 0`, face basis, one row per sweep
/// count. Timing covers the estimator only.
pub fn grid_experiment(
    level: u32,
    sweeps: &[usize],
    order: SweepOrder,
) -> Result<Vec<ExperimentRow>> {
    let grid = uniform_grid(level)?;
    let g = &grid.graph;
    let (u, f) = sample_and_rhs(g, &grid.coords, grid_field)?;
    let v = VertexFunction::zeros(g.n());
    let err = l_seminorm(g, &u.sub(&v))?;
    let mut rows = Vec::with_capacity(sweeps.len());
    for &s in sweeps {
        let cfg = EstimatorConfig {
            basis: BasisChoice::Face(grid.spec),
            sweeps: s,
            order,
            ..Default::default()
        };
        let est = error_estimate(g, &v, &f, &cfg)?;
        rows.push(ExperimentRow {
            label: format!("grid-l{level}"),
            n: g.n(),
            m: g.m(),
            true_error: Some(err),
            psi: est.psi,
            eff: Some(efficiency_index(est.psi, err)?),
            sweeps: s,
            seconds: est.seconds,
        });
    }
    Ok(rows)
}

/// Seeded right-hand side: uniform `[-1, 1]` entries, mean removed.
pub fn random_rhs(n: usize, seed: u64) -> VertexFunction {
    random_initial_guess(n, seed ^ 0x9e37_79b9_7f4a_7c15)
        .scale(2.0)
        .mean_free()
}

/// Schwarz estimator, exact cycle minimizer and the alternating two-term
/// bound on the same `(g, v, f)`.
pub fn compare_with_baseline(
    g: &Graph,
    v: &VertexFunction,
    f: &VertexFunction,
    config: &EstimatorConfig,
    max_iter: usize,
    scaling: PenaltyScaling,
) -> Result<Vec<ComparatorRow>> {
    let (err, _) = true_error(g, v, f)?;
    let mut rows = Vec::new();
    let schwarz = error_estimate(
        g,
        v,
        f,
        &EstimatorConfig {
            solver: CycleSolver::Schwarz,
            ..*config
        },
    )?;
    rows.push(ComparatorRow {
        method: format!("schwarz-{}", config.sweeps),
        psi_or_sqrt_e: schwarz.psi,
        true_error: err,
        eff: efficiency_index(schwarz.psi, err)?,
        seconds: schwarz.seconds,
    });
    let exact = error_estimate(
        g,
        v,
        f,
        &EstimatorConfig {
            solver: CycleSolver::Exact,
            ..*config
        },
    )?;
    rows.push(ComparatorRow {
        method: "exact".into(),
        psi_or_sqrt_e: exact.psi,
        true_error: err,
        eff: efficiency_index(exact.psi, err)?,
        seconds: exact.seconds,
    });
    let start = Instant::now();
    let bound = minimize_bound_alternating(g, v, f, max_iter, scaling)?;
    rows.push(ComparatorRow {
        method: "alternating".into(),
        psi_or_sqrt_e: bound.sqrt_e(),
        true_error: err,
        eff: efficiency_index(bound.sqrt_e(), err)?,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{k3, k3_rhs};

    #[test]
    fn grid_level_one_rows() {
        let rows = grid_experiment(1, &[0, 1, 3], SweepOrder::Ascending).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[1].psi <= w[0].psi + 1e-12));
        assert!(rows.iter().all(|r| r.eff.unwrap() >= 1.0 - 1e-12));
    }

    #[test]
    fn k3_comparison() {
        let g = k3();
        let rows = compare_with_baseline(
            &g,
            &VertexFunction::zeros(3),
            &k3_rhs(),
            &EstimatorConfig::default(),
            100,
            PenaltyScaling::Squared,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[1].eff - 1.0).abs() < 1e-10);
        assert!(rows[2].psi_or_sqrt_e >= rows[1].psi_or_sqrt_e - 1e-9);
    }

    #[test]
    fn random_rhs_is_compatible() {
        let f = random_rhs(50, 3);
        assert!(f.sum().abs() < 1e-12);
        assert!(f.iter().all(|x| x.abs() <= 2.0));
    }
}
