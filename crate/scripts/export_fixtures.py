"""Regenerate the Matrix Market fixtures under crates/core/tests/data."""

import pathlib
import random

import networkx as nx

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"


def write_mtx(path, g, weight=None):
    nodes = sorted(g.nodes(), key=str)
    index = {v: k + 1 for k, v in enumerate(nodes)}
    entries = []
    for a, b, data in g.edges(data=True):
        i, j = index[a], index[b]
        if i < j:
            i, j = j, i
        w = data.get(weight, 1) if weight else 1
        entries.append((i, j, float(w)))
    entries.sort()
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real symmetric\n")
        f.write(f"{len(nodes)} {len(nodes)} {len(entries)}\n")
        for i, j, w in entries:
            f.write(f"{i} {j} {w:g}\n")


def power_like(n, extra, seed):
    """Random geometric tree plus short chords; m/n stays near 1.56."""
    rng = random.Random(seed)
    pts = [(rng.random(), rng.random()) for _ in range(n)]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for v in range(1, n):
        u = min(range(v), key=lambda k: (pts[k][0] - pts[v][0]) ** 2 + (pts[k][1] - pts[v][1]) ** 2)
        g.add_edge(u, v, weight=round(rng.uniform(0.5, 2.0), 3))
    while g.number_of_edges() < n - 1 + extra:
        v = rng.randrange(n)
        near = sorted(range(n), key=lambda k: (pts[k][0] - pts[v][0]) ** 2 + (pts[k][1] - pts[v][1]) ** 2)[1:6]
        u = rng.choice(near)
        if not g.has_edge(u, v):
            g.add_edge(u, v, weight=round(rng.uniform(0.5, 2.0), 3))
    return g


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_mtx(OUT / "karate.mtx", nx.karate_club_graph(), weight="weight")
    write_mtx(OUT / "les_miserables.mtx", nx.les_miserables_graph(), weight="weight")
    write_mtx(OUT / "florentine.mtx", nx.florentine_families_graph())
    write_mtx(OUT / "power_like.mtx", power_like(600, 336, 7), weight="weight")


if __name__ == "__main__":
    main()
