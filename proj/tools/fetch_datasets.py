#!/usr/bin/env python3
"""Download the published benchmark graphs and convert them to edge lists.

Each dataset lands in data/<name>.edges as a dense 0-indexed undirected
edge list (the format every CLI command consumes). Sources are the public
copies bundled with the SEAL/WalkPool link-prediction artifacts; they ship
the standard USAir/NS/PB/Yeast/C.ele/Power/Router matrices used across the
link-prediction literature.

Requires network access and scipy. Usage:

    python3 tools/fetch_datasets.py [name ...]   # default: usair celegans
"""

import io
import sys
import urllib.request
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"

MAT_BASE = "https://raw.githubusercontent.com/muhanzhang/SEAL/master/MATLAB/data"

# name -> (url, variable holding the n x n sparse adjacency)
SOURCES = {
    "usair": (f"{MAT_BASE}/USAir.mat", "net"),
    "celegans": (f"{MAT_BASE}/Celegans.mat", "net"),
    "ns": (f"{MAT_BASE}/NS.mat", "net"),
    "pb": (f"{MAT_BASE}/PB.mat", "net"),
    "yeast": (f"{MAT_BASE}/Yeast.mat", "net"),
    "router": (f"{MAT_BASE}/Router.mat", "net"),
    "ecoli": (f"{MAT_BASE}/Ecoli.mat", "net"),
}


def fetch(name: str) -> None:
    from scipy.io import loadmat
    from scipy.sparse import csr_matrix

    url, var = SOURCES[name]
    print(f"fetching {name} from {url}")
    with urllib.request.urlopen(url, timeout=60) as response:
        blob = response.read()
    mat = loadmat(io.BytesIO(blob))
    adj = csr_matrix(mat[var])

    edges = set()
    rows, cols = adj.nonzero()
    for u, v in zip(rows.tolist(), cols.tolist()):
        if u == v:
            continue  # drop self-loops
        edges.add((min(u, v), max(u, v)))

    n = adj.shape[0]
    out = DATA / f"{name}.edges"
    lines = [f"# nodes: {n}"]
    lines += [f"{u} {v}" for u, v in sorted(edges)]
    out.write_text("\n".join(lines) + "\n")
    print(f"  wrote {out}: {n} nodes, {len(edges)} edges")


def main(argv: list[str]) -> int:
    names = argv[1:] or ["usair", "celegans"]
    unknown = [n for n in names if n not in SOURCES]
    if unknown:
        print(f"unknown dataset(s): {', '.join(unknown)}", file=sys.stderr)
        print(f"known: {', '.join(sorted(SOURCES))}", file=sys.stderr)
        return 2
    DATA.mkdir(exist_ok=True)
    for name in names:
        fetch(name)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
