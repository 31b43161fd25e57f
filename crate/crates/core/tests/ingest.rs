use std::path::PathBuf;

use laplacian_apost::cycles::{fundamental_cycle_basis, validate_cycle_basis};
use laplacian_apost::io::{preprocess, read_matrix_market, write_matrix_market};
use laplacian_apost::tree::bfs_tree;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

#[test]
fn fixtures_ingest_and_validate() {
    let expected = [
        ("k3", 3, 3),
        ("karate", 34, 78),
        ("les_miserables", 77, 254),
        ("florentine", 15, 20),
        ("power_like", 600, 935),
    ];
    for (name, n, m) in expected {
        let raw = read_matrix_market(data(&format!("{name}.mtx"))).unwrap();
        let g = preprocess(&raw.edges, raw.n).unwrap();
        assert_eq!((g.n(), g.m()), (n, m), "{name}");
        let basis = fundamental_cycle_basis(&g, &bfs_tree(&g, 0).unwrap());
        let diag = validate_cycle_basis(&g, &basis).unwrap();
        assert_eq!(diag.cycles, g.m() - g.n() + 1);
    }
}

#[test]
fn matrix_market_round_trip() {
    for name in ["karate", "power_like"] {
        let raw = read_matrix_market(data(&format!("{name}.mtx"))).unwrap();
        let g = preprocess(&raw.edges, raw.n).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&g, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.mtx");
        std::fs::write(&path, &buf).unwrap();
        let again = read_matrix_market(&path).unwrap();
        let h = preprocess(&again.edges, again.n).unwrap();
        assert_eq!(g.edges(), h.edges());
    }
}
