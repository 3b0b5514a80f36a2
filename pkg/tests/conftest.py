from pathlib import Path

import numpy as np
import pytest

from guide.graph import from_edges, load_attributes, load_edge_list

ROOT = Path(__file__).resolve().parent.parent
CORA_DIR = ROOT / "data" / "cora"

# nodes a..e -> 0..4; e touches all others and closes exactly ebd, eac, ecd
FIG2_EDGES = [(0, 2), (0, 4), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]


@pytest.fixture(scope="session")
def cora():
    if not (CORA_DIR / "cora.edges").is_file():
        pytest.skip("Cora data not present")
    g = load_edge_list(CORA_DIR / "cora.edges")
    return g.with_attributes(load_attributes(CORA_DIR / "cora.coo", g.n, 1433))


@pytest.fixture
def fig2():
    return from_edges(FIG2_EDGES, 5)


def random_graph(rng, n, p, d=0):
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    x = rng.random((n, d)) if d else None
    return from_edges(edges, n, x)
