"""Synthetic anomaly injection: planted cliques and far-attribute copies."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import AttributedGraph


class InjectionError(ValueError):
    pass


def auto_clique_count(n: int, p: int) -> int:
    """Clique count giving roughly 5% anomalous nodes overall (half per type)."""
    return max(1, int(round(0.025 * n / p)))


@dataclass(frozen=True)
class InjectionSpec:
    p: int = 15
    q: int | None = None     # None -> auto_clique_count
    k: int = 50
    seed: int = 0
    mode: str = "copy"       # "copy" or "swap"

    def resolve(self, n: int) -> "InjectionSpec":
        q = auto_clique_count(n, self.p) if self.q is None else self.q
        spec = InjectionSpec(self.p, q, self.k, self.seed, self.mode)
        spec.validate(n)
        return spec

    def validate(self, n: int):
        if self.p < 2:
            raise InjectionError(f"clique size p must be >= 2, got {self.p}")
        if self.q is not None and self.q < 1:
            raise InjectionError(f"clique count q must be >= 1, got {self.q}")
        if self.k < 1:
            raise InjectionError(f"candidate pool k must be >= 1, got {self.k}")
        if self.mode not in ("copy", "swap"):
            raise InjectionError(f"mode must be 'copy' or 'swap', got {self.mode!r}")
        if self.q is not None and 2 * self.p * self.q > n:
            raise InjectionError(f"2*p*q = {2 * self.p * self.q} exceeds node count {n}")


@dataclass(frozen=True)
class InjectionResult:
    graph: AttributedGraph
    labels: np.ndarray
    structural_ids: np.ndarray
    attribute_ids: np.ndarray
    cliques: tuple = ()


def inject_structural(g: AttributedGraph, p: int, q: int, rng: np.random.Generator):
    """Connect ``q`` disjoint random ``p``-node sets into cliques."""
    if p * q > g.n:
        raise InjectionError(f"cannot draw {q} cliques of size {p} from {g.n} nodes")
    chosen = rng.choice(g.n, size=p * q, replace=False)
    cliques = tuple(np.sort(chosen[c * p:(c + 1) * p]) for c in range(q))
    rows, cols = [], []
    for members in cliques:
        for u, v in itertools.combinations(members.tolist(), 2):
            rows += [u, v]
            cols += [v, u]
    extra = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))
    adj = (g.adjacency + extra).tocsr()
    adj.data[:] = 1.0
    adj.sort_indices()
    return AttributedGraph(adj, g.attributes.copy()), np.sort(chosen), cliques


def inject_attribute(g: AttributedGraph, count: int, k: int, rng: np.random.Generator,
                     excluded=(), mode: str = "copy"):
    """Overwrite ``count`` target rows with the farthest of ``k`` random candidates.

    Candidates exclude the target, ``excluded`` and every chosen target.
    Distances use the attributes as they were before injection; among tied
    maxima the smallest node id wins. ``mode="swap"`` also writes the
    target's row into the chosen candidate.
    """
    excluded = np.asarray(sorted(set(int(i) for i in excluded)), dtype=np.int64)
    free = np.setdiff1d(np.arange(g.n), excluded)
    if count > free.size:
        raise InjectionError(f"cannot pick {count} attribute targets from {free.size} free nodes")
    targets = np.sort(rng.choice(free, size=count, replace=False))
    pool_base = np.setdiff1d(free, targets)
    if k > pool_base.size:
        raise InjectionError(f"candidate pool k={k} exceeds {pool_base.size} eligible nodes")
    x0 = g.attributes
    x = x0.copy()
    for i in targets:
        cand = np.sort(rng.choice(pool_base, size=k, replace=False))
        dist = np.linalg.norm(x0[cand] - x0[i], axis=1)
        j = cand[int(np.argmax(dist))]
        x[i] = x0[j]
        if mode == "swap":
            x[j] = x0[i]
    return g.with_attributes(x), targets


def inject(g: AttributedGraph, spec: InjectionSpec) -> InjectionResult:
    """Structural anomalies first, then attribute anomalies on the remaining nodes."""
    spec = spec.resolve(g.n)
    rng = np.random.default_rng(spec.seed)
    g1, s_ids, cliques = inject_structural(g, spec.p, spec.q, rng)
    g2, a_ids = inject_attribute(g1, spec.p * spec.q, spec.k, rng, excluded=s_ids, mode=spec.mode)
    labels = np.zeros(g.n, dtype=np.int64)
    labels[s_ids] = 1
    labels[a_ids] = 1
    return InjectionResult(g2, labels, s_ids, a_ids, cliques)
