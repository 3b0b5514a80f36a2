"""Node motif degrees over 3- and 4-node induced subgraphs.

A motif instance is an unordered node set whose induced subgraph is
isomorphic to the template. The node motif degree of ``i`` counts the
instances that contain ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .graph import AttributedGraph


def _canonical(k, edges):
    best = None
    for perm in itertools.permutations(range(k)):
        form = tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in edges))
        if best is None or form < best:
            best = form
    return best


def _connected(k, edges):
    adj = {i: set() for i in range(k)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == k


@dataclass(frozen=True)
class MotifTemplate:
    name: str
    k: int
    edges: tuple = field(compare=False)

    def __post_init__(self):
        if self.k not in (3, 4):
            raise ValueError(f"motif templates must have 3 or 4 vertices, got {self.k}")
        es = tuple(sorted(tuple(sorted(e)) for e in self.edges))
        if any(u == v or not (0 <= u < self.k and 0 <= v < self.k) for u, v in es):
            raise ValueError(f"bad template edge set {self.edges}")
        if len(set(es)) != len(es) or not _connected(self.k, es):
            raise ValueError(f"template {self.name} must be a connected simple graph")
        object.__setattr__(self, "edges", _canonical(self.k, es))

    @property
    def key(self):
        return (self.k, self.edges)


TRIANGLE = MotifTemplate("triangle", 3, ((0, 1), (0, 2), (1, 2)))
WEDGE = MotifTemplate("wedge", 3, ((0, 1), (1, 2)))
CLIQUE4 = MotifTemplate("4-clique", 4, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)))
DIAMOND = MotifTemplate("diamond", 4, ((0, 1), (0, 2), (0, 3), (1, 2), (2, 3)))
CYCLE4 = MotifTemplate("4-cycle", 4, ((0, 1), (1, 2), (2, 3), (0, 3)))
TAILED_TRIANGLE = MotifTemplate("tailed-triangle", 4, ((0, 1), (0, 2), (1, 2), (2, 3)))
STAR4 = MotifTemplate("3-star", 4, ((0, 1), (0, 2), (0, 3)))
PATH4 = MotifTemplate("4-path", 4, ((0, 1), (1, 2), (2, 3)))

FOUR_NODE_GRAPHLETS = (CLIQUE4, DIAMOND, CYCLE4, TAILED_TRIANGLE, STAR4, PATH4)

# Confirmed on raw Cora: the 4-node totals {220, 2468, 1536} are produced by
# exactly this assignment (see resolve_motif_assignment).
DEFAULT_ASSIGNMENT = {
    "M31": TRIANGLE,
    "M32": WEDGE,
    "M41": CLIQUE4,
    "M42": DIAMOND,
    "M43": CYCLE4,
}
COLUMNS = ("degree", "M31", "M32", "M41", "M42", "M43")


class _Adj:
    """Sorted neighbor arrays plus hash sets for O(1) adjacency tests."""

    def __init__(self, g: AttributedGraph):
        a = g.adjacency
        self.n = g.n
        self.nbrs = [a.indices[a.indptr[i]:a.indptr[i + 1]].tolist() for i in range(g.n)]
        self.sets = [set(nb) for nb in self.nbrs]

    def common(self, u, v):
        su, sv = self.sets[u], self.sets[v]
        if len(su) > len(sv):
            su, sv = sv, su
        return sorted(w for w in su if w in sv)


def _triangles(adj):
    out = np.zeros(adj.n, dtype=np.int64)
    for u in range(adj.n):
        for v in adj.nbrs[u]:
            if v <= u:
                continue
            for w in adj.common(u, v):
                if w > v:
                    out[u] += 1
                    out[v] += 1
                    out[w] += 1
    return out


def _wedges(adj, tri):
    # induced open 2-paths: as center C(d,2) - t, as endpoint sum_j (d_j - 1) - 2t
    deg = np.array([len(nb) for nb in adj.nbrs], dtype=np.int64)
    endpoint = np.array([sum(deg[j] - 1 for j in nb) for nb in adj.nbrs], dtype=np.int64)
    return deg * (deg - 1) // 2 + endpoint - 3 * tri


def _cliques_and_diamonds(adj):
    clique = np.zeros(adj.n, dtype=np.int64)
    diamond = np.zeros(adj.n, dtype=np.int64)
    for u in range(adj.n):
        for v in adj.nbrs[u]:
            if v <= u:
                continue
            cn = adj.common(u, v)
            for a_idx, w in enumerate(cn):
                sw = adj.sets[w]
                for x in cn[a_idx + 1:]:
                    if x in sw:
                        # seen once per clique edge; count only when u < v < w < x
                        if w > v:
                            for node in (u, v, w, x):
                                clique[node] += 1
                    else:
                        # a diamond's unique chord is (u, v)
                        for node in (u, v, w, x):
                            diamond[node] += 1
    return clique, diamond


def _cycles4(adj):
    out = np.zeros(adj.n, dtype=np.int64)
    for u in range(adj.n):
        su = adj.sets[u]
        via = {}
        for w in adj.nbrs[u]:
            if w <= u:
                continue
            for v in adj.nbrs[w]:
                if v > u and v not in su:
                    via.setdefault(v, []).append(w)
        # u is the smallest node of the cycle; (u, v) and (w, x) are its diagonals
        for v, mids in via.items():
            for a_idx, w in enumerate(mids):
                sw = adj.sets[w]
                for x in mids[a_idx + 1:]:
                    if x not in sw:
                        out[u] += 1
                        out[v] += 1
                        out[w] += 1
                        out[x] += 1
    return out


def _enumerate_connected(adj, k):
    """Yield every connected induced ``k``-node set exactly once (ESU)."""

    def extend(sub, ext, root):
        if len(sub) == k:
            yield tuple(sub)
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            excl = set(sub)
            for s in sub:
                excl |= adj.sets[s]
            new = ext + [x for x in adj.nbrs[w] if x > root and x not in excl and x not in ext]
            yield from extend(sub + [w], new, root)

    for root in range(adj.n):
        yield from extend([root], [x for x in adj.nbrs[root] if x > root], root)


def _induced_key(adj, nodes):
    k = len(nodes)
    es = [(a, b) for a, b in itertools.combinations(range(k), 2) if nodes[b] in adj.sets[nodes[a]]]
    return (k, _canonical(k, es))


def _generic_nmd(adj, t):
    out = np.zeros(adj.n, dtype=np.int64)
    for nodes in _enumerate_connected(adj, t.k):
        if _induced_key(adj, nodes) == t.key:
            for x in nodes:
                out[x] += 1
    return out


def count_nmd(g: AttributedGraph, t: MotifTemplate) -> np.ndarray:
    """Per-node motif degree vector for template ``t`` (induced semantics)."""
    adj = _Adj(g)
    if t.key == TRIANGLE.key:
        return _triangles(adj)
    if t.key == WEDGE.key:
        return _wedges(adj, _triangles(adj))
    if t.key == CLIQUE4.key:
        return _cliques_and_diamonds(adj)[0]
    if t.key == DIAMOND.key:
        return _cliques_and_diamonds(adj)[1]
    if t.key == CYCLE4.key:
        return _cycles4(adj)
    return _generic_nmd(adj, t)


def total_motif_count(g: AttributedGraph, t: MotifTemplate) -> int:
    total = int(count_nmd(g, t).sum())
    assert total % t.k == 0
    return total // t.k


BRUTE_FORCE_MAX_N = 64


def brute_force_nmd(g: AttributedGraph, t: MotifTemplate) -> np.ndarray:
    """Exhaustive oracle: test every ``k``-subset for induced isomorphism with ``t``."""
    if g.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {g.n}")
    dense = g.adjacency.toarray() > 0
    target = {frozenset(e) for e in t.edges}
    perms = list(itertools.permutations(range(t.k)))
    out = np.zeros(g.n, dtype=np.int64)
    for nodes in itertools.combinations(range(g.n), t.k):
        sub = {frozenset((a, b)) for a, b in itertools.combinations(range(t.k), 2)
               if dense[nodes[a], nodes[b]]}
        if len(sub) != len(target):
            continue
        if any({frozenset((p[a], p[b])) for a, b in (tuple(e) for e in sub)} == target
               for p in perms):
            for x in nodes:
                out[x] += 1
    return out


def graphlet_totals(g: AttributedGraph) -> dict[str, int]:
    """Totals of all six connected 4-node induced graphlets.

    The three dense shapes are enumerated; the sparse ones (tailed triangle,
    star, path) follow from non-induced counts by inclusion-exclusion.
    """
    adj = _Adj(g)
    tri = _triangles(adj)
    deg = np.array([len(nb) for nb in adj.nbrs], dtype=np.int64)
    clique_n, diamond_n = _cliques_and_diamonds(adj)
    k4, dia, c4 = int(clique_n.sum()) // 4, int(diamond_n.sum()) // 4, int(_cycles4(adj).sum()) // 4
    t_total = int(tri.sum()) // 3
    # t_i counts triangles at i; each can take a tail at i in d_i - 2 ways
    tailed = int((tri * (deg - 2)).sum()) - 4 * dia - 12 * k4
    star = int((deg * (deg - 1) * (deg - 2) // 6).sum()) - tailed - 2 * dia - 4 * k4
    e = g.edges()
    paths_noninduced = int(((deg[e[:, 0]] - 1) * (deg[e[:, 1]] - 1)).sum()) - 3 * t_total
    path = paths_noninduced - 2 * tailed - 4 * c4 - 6 * dia - 12 * k4
    return {CLIQUE4.name: k4, DIAMOND.name: dia, CYCLE4.name: c4,
            TAILED_TRIANGLE.name: tailed, STAR4.name: star, PATH4.name: path}


def resolve_motif_assignment(g: AttributedGraph, targets: dict[str, int]):
    """Match named 4-node totals (e.g. ``{"M41": 220, ...}``) to graphlet shapes.

    Returns ``(assignment, exact)``. Each target name maps to a distinct
    graphlet; the assignment minimising total absolute error is chosen, and
    ``exact`` tells whether every total matched.
    """
    totals = graphlet_totals(g)
    by_name = {t.name: t for t in FOUR_NODE_GRAPHLETS}
    names = sorted(targets)
    best, best_err = None, None
    for combo in itertools.permutations(by_name, len(names)):
        err = sum(abs(totals[c] - targets[nm]) for nm, c in zip(names, combo))
        if best_err is None or err < best_err:
            best, best_err = combo, err
    return {nm: by_name[c] for nm, c in zip(names, best)}, best_err == 0


@dataclass(frozen=True)
class StructureMatrix:
    values: np.ndarray
    columns: tuple = COLUMNS
    transform: str = "raw"

    @property
    def shape(self):
        return self.values.shape


TRANSFORMS = ("raw", "log1p")


def raw_structure_counts(g: AttributedGraph, assignment=None) -> np.ndarray:
    assignment = assignment or DEFAULT_ASSIGNMENT
    adj = _Adj(g)
    deg = np.array([len(nb) for nb in adj.nbrs], dtype=np.int64)
    cache = {}

    def nmd(t):
        if t.key in cache:
            return cache[t.key]
        if t.key == TRIANGLE.key:
            r = _triangles(adj)
        elif t.key == WEDGE.key:
            r = _wedges(adj, nmd(TRIANGLE))
        elif t.key in (CLIQUE4.key, DIAMOND.key):
            c, dmd = _cliques_and_diamonds(adj)
            cache[DIAMOND.key] = dmd
            cache[CLIQUE4.key] = c
            return cache[t.key]
        elif t.key == CYCLE4.key:
            r = _cycles4(adj)
        else:
            r = _generic_nmd(adj, t)
        cache[t.key] = r
        return r

    cols = [deg] + [nmd(assignment[c]) for c in COLUMNS[1:]]
    return np.stack(cols, axis=1)


def build_structure_matrix(g: AttributedGraph, transform: str = "raw",
                           assignment=None) -> StructureMatrix:
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    raw = raw_structure_counts(g, assignment).astype(np.float64)
    vals = np.log1p(raw) if transform == "log1p" else raw
    return StructureMatrix(values=vals, transform=transform)


def motif_totals(s_raw: np.ndarray) -> dict[str, int]:
    """Per-motif instance totals from a raw structure matrix."""
    sizes = {"M31": 3, "M32": 3, "M41": 4, "M42": 4, "M43": 4}
    out = {"edges": int(s_raw[:, 0].sum()) // 2}
    for idx, name in enumerate(COLUMNS[1:], start=1):
        out[name] = int(s_raw[:, idx].sum()) // sizes[name]
    return out


def save_structure_matrix(s: StructureMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write("node\t" + "\t".join(s.columns) + "\n")
        for i, row in enumerate(s.values):
            if s.transform == "raw":
                cells = [str(int(v)) for v in row]
            else:
                cells = [repr(float(v)) for v in row]
            fh.write(f"{i}\t" + "\t".join(cells) + "\n")


def load_structure_matrix(path, transform: str = "raw") -> StructureMatrix:
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = [[float(c) for c in line.rstrip("\n").split("\t")[1:]] for line in fh if line.strip()]
    return StructureMatrix(values=np.array(rows).reshape(-1, len(header) - 1),
                           columns=tuple(header[1:]), transform=transform)
