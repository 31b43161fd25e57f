use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{validate_graph, Graph, RawEdge};

/// Random spanning tree on `n` vertices plus `extra` distinct non-tree edges,
/// weights uniform in `weights` (a degenerate range gives constant weights).
/// Deterministic for a fixed seed.
pub fn random_connected_graph(
    n: usize,
    extra: usize,
    weights: (f64, f64),
    seed: u64,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::EmptyGraph);
    }
    let available = n * (n - 1) / 2 - (n - 1);
    if extra > available {
        return Err(Error::TooManyEdges {
            requested: extra,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| {
        if weights.1 > weights.0 {
            rng.gen_range(weights.0..weights.1)
        } else {
            weights.0
        }
    };

    // random recursive tree over a shuffled labelling
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(&mut rng);
    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(n + extra);
    let mut raw = Vec::with_capacity(n - 1 + extra);
    for k in 1..n {
        let parent = labels[rng.gen_range(0..k)];
        let child = labels[k];
        present.insert(ordered(parent, child));
        raw.push(RawEdge::new(child, parent, weight(&mut rng)));
    }

    if 2 * extra > available {
        // dense request: enumerate the complement and take a random prefix
        let mut candidates: Vec<(usize, usize)> = (2..=n)
            .flat_map(|i| (1..i).map(move |j| (i, j)))
            .filter(|p| !present.contains(p))
            .collect();
        candidates.shuffle(&mut rng);
        for &(i, j) in candidates.iter().take(extra) {
            raw.push(RawEdge::new(i, j, weight(&mut rng)));
        }
    } else {
        let mut added = 0;
        while added < extra {
            let a = rng.gen_range(1..=n);
            let b = rng.gen_range(1..=n);
            if a == b {
                continue;
            }
            let key = ordered(a, b);
            if present.insert(key) {
                raw.push(RawEdge::new(key.0, key.1, weight(&mut rng)));
                added += 1;
            }
        }
    }
    validate_graph(&raw, n)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a > b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_and_extras() {
        let t = random_connected_graph(5, 0, (1.0, 1.0), 7).unwrap();
        assert_eq!(t.m(), 4);
        assert_eq!(t.cycle_rank(), 0);
        let g = random_connected_graph(5, 3, (1.0, 1.0), 7).unwrap();
        assert_eq!(g.m(), 7);
        assert_eq!(g.cycle_rank(), 3);
        let full = random_connected_graph(5, 6, (1.0, 1.0), 7).unwrap();
        assert_eq!(full.m(), 10);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = random_connected_graph(30, 40, (0.5, 2.0), 99).unwrap();
        let b = random_connected_graph(30, 40, (0.5, 2.0), 99).unwrap();
        assert_eq!(a, b);
        let c = random_connected_graph(30, 40, (0.5, 2.0), 100).unwrap();
        assert_ne!(a, c);
        assert!(a.edges().iter().all(|e| e.weight >= 0.5 && e.weight < 2.0));
    }

    #[test]
    fn too_many_edges() {
        assert_eq!(
            random_connected_graph(5, 7, (1.0, 1.0), 0).unwrap_err(),
            Error::TooManyEdges {
                requested: 7,
                available: 6
            }
        );
        assert!(random_connected_graph(1, 0, (1.0, 1.0), 0).is_err());
    }
}
