use crate::error::{Error, Result};
use crate::graph::{apply_laplacian, validate_graph, Graph, RawEdge, VertexFunction};

/// Uniform triangulation of the unit square with `N = 2^level` cells per side.
///
/// Vertices are numbered row by row, `x` fastest: vertex `(row, col)` has
/// 0-based id `row·(N+1) + col` and sits at `(col·h, row·h)`. Every cell is
/// cut along its `(1, 1)` diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    level: u32,
}

impl GridSpec {
    pub const MAX_LEVEL: u32 = 12;

    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > Self::MAX_LEVEL {
            return Err(Error::GridLevel(level));
        }
        Ok(GridSpec { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Cells per side, `N = 2^l`.
    pub fn cells(&self) -> usize {
        1 << self.level
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn vertex_count(&self) -> usize {
        (self.cells() + 1).pow(2)
    }

    /// `3N² + 2N`.
    pub fn edge_count(&self) -> usize {
        let n = self.cells();
        3 * n * n + 2 * n
    }

    /// Number of triangles, `2N²`.
    pub fn face_count(&self) -> usize {
        2 * self.cells() * self.cells()
    }

    /// 0-based id of the vertex at `(row, col)`.
    pub fn vertex(&self, row: usize, col: usize) -> usize {
        row * (self.cells() + 1) + col
    }

    pub fn coordinates(&self, vertex: usize) -> (f64, f64) {
        let side = self.cells() + 1;
        let (row, col) = (vertex / side, vertex % side);
        (col as f64 * self.h(), row as f64 * self.h())
    }

    /// The two triangles of cell `(row, col)` as vertex triples, lower-right
    /// triangle first, each listed counterclockwise.
    pub fn cell_triangles(&self, row: usize, col: usize) -> [[usize; 3]; 2] {
        let a = self.vertex(row, col);
        let b = self.vertex(row, col + 1);
        let c = self.vertex(row + 1, col + 1);
        let d = self.vertex(row + 1, col);
        [[a, b, c], [a, c, d]]
    }
}

#[derive(Debug, Clone)]
pub struct GridGraph {
    pub spec: GridSpec,
    pub graph: Graph,
    pub coords: Vec<(f64, f64)>,
}

/// Unit-weight graph of the uniform triangle grid at the given level.
pub fn uniform_grid(level: u32) -> Result<GridGraph> {
    let spec = GridSpec::new(level)?;
    let n = spec.cells();
    let mut raw = Vec::with_capacity(spec.edge_count());
    // RawEdge labels are 1-based
    let label = |r: usize, c: usize| spec.vertex(r, c) + 1;
    for r in 0..=n {
        for c in 0..=n {
            if c < n {
                raw.push(RawEdge::new(label(r, c + 1), label(r, c), 1.0));
            }
            if r < n {
                raw.push(RawEdge::new(label(r + 1, c), label(r, c), 1.0));
            }
            if r < n && c < n {
                raw.push(RawEdge::new(label(r + 1, c + 1), label(r, c), 1.0));
            }
        }
    }
    let graph = validate_graph(&raw, spec.vertex_count())?;
    let coords = (0..spec.vertex_count())
        .map(|v| spec.coordinates(v))
        .collect();
    Ok(GridGraph {
        spec,
        graph,
        coords,
    })
}

/// Samples `field` at the vertex coordinates and returns `(u, Lu)`.
pub fn sample_and_rhs<F>(
    g: &Graph,
    coords: &[(f64, f64)],
    field: F,
) -> Result<(VertexFunction, VertexFunction)>
where
    F: Fn(f64, f64) -> f64,
{
    let u = VertexFunction(coords.iter().map(|&(x, y)| field(x, y)).collect());
    let f = apply_laplacian(g, &u)?;
    Ok((u, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::l_seminorm;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn counts() {
        let g1 = uniform_grid(1).unwrap();
        assert_eq!(g1.graph.n(), 9);
        assert_eq!(g1.graph.m(), 16);
        assert_eq!(g1.graph.cycle_rank(), 8);

        let g5 = uniform_grid(5).unwrap();
        assert_eq!(g5.graph.n(), 1089);
        assert_eq!(g5.graph.m(), 3136);
        assert_eq!(g5.graph.cycle_rank(), g5.spec.face_count());
    }

    #[test]
    fn degree_bound_and_level_range() {
        for level in 1..=4 {
            let grid = uniform_grid(level).unwrap();
            assert_eq!(grid.graph.cycle_rank(), 2 * 4usize.pow(level));
            let max_deg = (0..grid.graph.n())
                .map(|v| grid.graph.degree(v))
                .max()
                .unwrap();
            assert!(max_deg <= 6);
        }
        assert_eq!(uniform_grid(0).unwrap_err(), Error::GridLevel(0));
        assert_eq!(uniform_grid(13).unwrap_err(), Error::GridLevel(13));
    }

    #[test]
    fn diagonals_run_along_one_one() {
        let grid = uniform_grid(1).unwrap();
        let s = grid.spec;
        assert!(grid.graph.edge_id(s.vertex(0, 0), s.vertex(1, 1)).is_some());
        assert!(grid.graph.edge_id(s.vertex(0, 1), s.vertex(1, 0)).is_none());
        assert_eq!(s.coordinates(s.vertex(1, 2)), (1.0, 0.5));
    }

    #[test]
    fn sine_field_energy() {
        let grid = uniform_grid(5).unwrap();
        let (u, f) = sample_and_rhs(&grid.graph, &grid.coords, |x, y| {
            (FRAC_PI_2 * x).sin() * (FRAC_PI_2 * y).sin()
        })
        .unwrap();
        let err = l_seminorm(&grid.graph, &u).unwrap();
        assert!((err - 1.73).abs() <= 0.01, "{err}");
        assert!(f.sum().abs() < 1e-10 * f.norm());
    }

    #[test]
    fn constant_field_has_zero_rhs() {
        let grid = uniform_grid(2).unwrap();
        let (_, f) = sample_and_rhs(&grid.graph, &grid.coords, |_, _| 3.0).unwrap();
        assert!(f.iter().all(|x| *x == 0.0));
    }
}
