"""Attributed graph container, file loaders and adjacency normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised when an input file cannot be parsed."""


@dataclass(frozen=True)
class AttributedGraph:
    """Undirected, unweighted graph with a dense node-attribute matrix.

    ``adjacency`` is a CSR matrix with sorted column indices, unit weights
    and an empty diagonal. ``attributes`` is ``n x d`` (``d`` may be 0).
    """

    adjacency: sp.csr_matrix
    attributes: np.ndarray

    def __post_init__(self):
        a = self.adjacency
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got {a.shape}")
        if self.attributes.shape[0] != a.shape[0]:
            raise ValueError(
                f"attribute rows ({self.attributes.shape[0]}) != node count ({a.shape[0]})")
        if not np.all(np.isfinite(self.attributes)):
            raise ValueError("attributes contain non-finite values")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def d(self) -> int:
        return self.attributes.shape[1]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def edges(self) -> np.ndarray:
        """Return each undirected edge once as an ``(m, 2)`` array with ``u < v``."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        e = np.stack([coo.row, coo.col], axis=1).astype(np.int64)
        return e[np.lexsort((e[:, 1], e[:, 0]))]

    def with_attributes(self, attributes: np.ndarray) -> "AttributedGraph":
        return AttributedGraph(self.adjacency, np.asarray(attributes, dtype=np.float64))


@dataclass(frozen=True)
class DatasetBundle:
    graph: AttributedGraph
    name: str = "dataset"
    labels: np.ndarray | None = None
    id_map: list[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (self.graph.n,):
                raise ValueError(f"labels must have length {self.graph.n}, got {lab.shape}")
            if not np.all((lab == 0) | (lab == 1)):
                raise ValueError("labels must be 0/1")


def adjacency_from_edges(edges, n: int) -> sp.csr_matrix:
    """Build a symmetric 0/1 CSR adjacency; drops self-loops and duplicates."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        raise IndexError(f"edge endpoint out of range for n={n}")
    e = e[e[:, 0] != e[:, 1]]
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    a = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    a.sum_duplicates()
    a.data[:] = 1.0
    a.sort_indices()
    return a


def from_edges(edges, n: int, attributes: np.ndarray | None = None) -> AttributedGraph:
    if attributes is None:
        attributes = np.zeros((n, 0))
    return AttributedGraph(adjacency_from_edges(edges, n), np.asarray(attributes, dtype=np.float64))


def _data_lines(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if s and not s.startswith("#"):
                yield lineno, s


def load_edge_list(path, n_hint: int | None = None) -> AttributedGraph:
    """Read ``u v`` integer pairs (0-based) into an attribute-less graph."""
    pairs = []
    for lineno, s in _data_lines(path):
        parts = s.split()
        if len(parts) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative node id")
        if n_hint is not None and max(u, v) >= n_hint:
            raise IndexError(f"{path}:{lineno}: node id {max(u, v)} >= n_hint {n_hint}")
        pairs.append((u, v))
    if n_hint is not None:
        n = n_hint
    else:
        n = max((max(p) for p in pairs), default=-1) + 1
    return from_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2), n)


def save_edge_list(g: AttributedGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes {g.n} edges {g.num_edges}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


COORD_SUFFIXES = (".coo", ".triples")


def load_attributes(path, n: int, d: int | None = None) -> np.ndarray:
    """Load an ``n x d`` attribute matrix.

    Files ending in ``.coo`` or ``.triples`` hold ``i j value`` lines and
    unmentioned entries are zero; repeated ``(i, j)`` pairs are rejected.
    Any other suffix is read as dense rows (whitespace or comma separated).
    """
    path = Path(path)
    if path.suffix in COORD_SUFFIXES:
        if d is None:
            raise ValueError("coordinate attribute files need an explicit d")
        x = np.zeros((n, d))
        seen = set()
        for lineno, s in _data_lines(path):
            parts = s.split()
            if len(parts) != 3:
                raise GraphFormatError(f"{path}:{lineno}: expected 'i j value'")
            try:
                i, j, val = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: cannot parse {s!r}") from None
            if not (0 <= i < n and 0 <= j < d):
                raise IndexError(f"{path}:{lineno}: index ({i}, {j}) outside {n}x{d}")
            if not np.isfinite(val):
                raise GraphFormatError(f"{path}:{lineno}: non-finite value")
            if (i, j) in seen:
                raise GraphFormatError(f"{path}:{lineno}: duplicate entry ({i}, {j})")
            seen.add((i, j))
            x[i, j] = val
        return x

    rows = []
    for lineno, s in _data_lines(path):
        try:
            rows.append([float(t) for t in s.replace(",", " ").split()])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: cannot parse row") from None
    if len(rows) != n:
        raise GraphFormatError(f"{path}: expected {n} rows, found {len(rows)}")
    widths = {len(r) for r in rows}
    if len(widths) > 1 or (d is not None and widths and widths != {d}):
        raise GraphFormatError(f"{path}: inconsistent row widths {sorted(widths)}")
    x = np.array(rows, dtype=np.float64).reshape(n, -1)
    if not np.all(np.isfinite(x)):
        raise GraphFormatError(f"{path}: non-finite value")
    return x


def save_attributes(x: np.ndarray, path) -> None:
    """Write attributes; coordinate format for ``.coo``/``.triples``, dense rows otherwise."""
    path = Path(path)
    with open(path, "w") as fh:
        if path.suffix in COORD_SUFFIXES:
            fh.write(f"# shape {x.shape[0]} {x.shape[1]}\n")
            for i, j in zip(*np.nonzero(x)):
                fh.write(f"{i} {j} {float(x[i, j])!r}\n")
        else:
            for row in x:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_coo_shape(path):
    """Return the ``(n, d)`` recorded in a coordinate file's ``# shape`` header, if any."""
    with open(path) as fh:
        first = fh.readline().split()
    if len(first) == 4 and first[:2] == ["#", "shape"]:
        return int(first[2]), int(first[3])
    return None


def load_labels(path, n: int) -> np.ndarray:
    vals = []
    for lineno, s in _data_lines(path):
        if s not in ("0", "1"):
            raise GraphFormatError(f"{path}:{lineno}: label must be 0 or 1, got {s!r}")
        vals.append(int(s))
    if len(vals) != n:
        raise GraphFormatError(f"{path}: expected {n} labels, found {len(vals)}")
    return np.array(vals, dtype=np.int64)


def save_labels(labels, path) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def load_linqs(content_path, cites_path, name: str = "dataset") -> DatasetBundle:
    """Read the LINQS ``.content``/``.cites`` pair (Cora, Citeseer).

    Node ids are remapped to ``0..n-1`` in ``.content`` order; the original
    ids are kept in ``DatasetBundle.id_map``. Citations naming unknown
    papers are skipped. Class labels in the last column are ignored.
    """
    ids, feats = [], []
    for lineno, s in _data_lines(content_path):
        parts = s.split()
        if len(parts) < 2:
            raise GraphFormatError(f"{content_path}:{lineno}: too few fields")
        ids.append(parts[0])
        try:
            feats.append([float(t) for t in parts[1:-1]])
        except ValueError:
            raise GraphFormatError(f"{content_path}:{lineno}: bad feature value") from None
    index = {p: i for i, p in enumerate(ids)}
    if len(index) != len(ids):
        raise GraphFormatError(f"{content_path}: duplicate paper ids")
    pairs = []
    for lineno, s in _data_lines(cites_path):
        parts = s.split()
        if len(parts) != 2:
            raise GraphFormatError(f"{cites_path}:{lineno}: expected 2 fields")
        if parts[0] in index and parts[1] in index:
            pairs.append((index[parts[0]], index[parts[1]]))
    g = from_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2), len(ids),
                   np.array(feats, dtype=np.float64))
    return DatasetBundle(graph=g, name=name, id_map=ids)


def normalize_adjacency(g: AttributedGraph) -> sp.csr_matrix:
    """Symmetric normalization ``D^-1/2 (A + I) D^-1/2`` of the self-looped adjacency."""
    a = g.adjacency + sp.identity(g.n, format="csr")
    deg = np.asarray(a.sum(axis=1)).ravel()
    coo = a.tocoo()
    vals = 1.0 / np.sqrt(deg[coo.row] * deg[coo.col])
    out = sp.csr_matrix((vals, (coo.row, coo.col)), shape=a.shape)
    out.sort_indices()
    return out


def degree(g: AttributedGraph, i: int) -> int:
    if not 0 <= i < g.n:
        raise IndexError(f"node {i} out of range for n={g.n}")
    return int(g.adjacency.indptr[i + 1] - g.adjacency.indptr[i])
