#!/usr/bin/env python3
"""Regenerate the synthetic benchmark graphs committed under data/.

The two synthetic graphs mimic the scale of the small airline/neural
benchmarks (hundreds of nodes, average degree 12-14, strong clustering)
so the pipeline can be exercised end to end without any downloads. They
are NOT the published datasets; fetch those with tools/fetch_datasets.py.

Outputs are deterministic for the seeds pinned below.
"""

import random
import sys
from pathlib import Path

import networkx as nx

DATA = Path(__file__).resolve().parent.parent / "data"


def write_edges(g: nx.Graph, path: Path) -> None:
    g = nx.convert_node_labels_to_integers(g, ordering="sorted")
    lines = [f"# nodes: {g.number_of_nodes()}"]
    lines += sorted(f"{min(u, v)} {max(u, v)}" for u, v in g.edges())
    path.write_text("\n".join(lines) + "\n")
    print(f"{path}: {g.number_of_nodes()} nodes, {g.number_of_edges()} edges, "
          f"clustering {nx.average_clustering(g):.3f}")


def clustered_graph(n: int, m: int, p: float, target_edges: int, seed: int) -> nx.Graph:
    g = nx.powerlaw_cluster_graph(n, m, p, seed=seed)
    rng = random.Random(seed + 1)
    # Trim uniformly down to the target count, keeping every node attached.
    excess = g.number_of_edges() - target_edges
    if excess < 0:
        raise SystemExit(f"generator undershoots: {g.number_of_edges()} < {target_edges}")
    removable = [e for e in g.edges() if g.degree(e[0]) > 1 and g.degree(e[1]) > 1]
    rng.shuffle(removable)
    for u, v in removable:
        if excess == 0:
            break
        if g.degree(u) > 1 and g.degree(v) > 1:
            g.remove_edge(u, v)
            excess -= 1
    if excess:
        raise SystemExit("could not reach the target edge count")
    return g


def main() -> int:
    DATA.mkdir(exist_ok=True)
    write_edges(clustered_graph(332, 7, 0.95, 2126, seed=20240332),
                DATA / "synth332.edges")
    write_edges(clustered_graph(297, 8, 0.95, 2148, seed=20240297),
                DATA / "synth297.edges")
    write_edges(nx.karate_club_graph(), DATA / "karate.edges")
    return 0


if __name__ == "__main__":
    sys.exit(main())
