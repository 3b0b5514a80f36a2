import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guide.graph import from_edges
from guide.inject import (InjectionError, InjectionSpec, auto_clique_count, inject,
                          inject_attribute, inject_structural)

from conftest import random_graph


def rng(seed=0):
    return np.random.default_rng(seed)


def test_structural_two_isolated_nodes():
    g2, ids, cliques = inject_structural(from_edges([], 2), 2, 1, rng())
    assert g2.num_edges == 1
    assert ids.tolist() == [0, 1]


def test_structural_on_existing_clique():
    k3 = from_edges([(0, 1), (1, 2), (0, 2)], 3)
    g2, ids, _ = inject_structural(k3, 3, 1, rng())
    assert (g2.adjacency != k3.adjacency).nnz == 0
    assert ids.tolist() == [0, 1, 2]


def test_structural_too_many_nodes():
    with pytest.raises(InjectionError):
        inject_structural(from_edges([], 5), 3, 2, rng())


def first_target(x, node, k):
    """Inject one attribute anomaly, retrying seeds until ``node`` is the target."""
    g = from_edges([], x.shape[0], x)
    for seed in range(100):
        g2, targets = inject_attribute(g, 1, k, rng(seed))
        if targets[0] == node:
            return g2
    raise AssertionError(f"node {node} never drawn as target")


def test_attribute_example_from_origin():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 4.0]])
    g2 = first_target(x, 0, 2)
    assert g2.attributes[0].tolist() == [3.0, 4.0]
    np.testing.assert_array_equal(g2.attributes[1:], x[1:])


def test_attribute_k1_copies_candidate():
    x = np.arange(12, dtype=float).reshape(6, 2)
    g2, targets = inject_attribute(from_edges([], 6, x), 1, 1, rng(3))
    i = int(targets[0])
    assert any(np.array_equal(g2.attributes[i], x[j]) for j in range(6) if j != i)


def test_attribute_identical_rows_unchanged():
    x = np.ones((8, 3))
    g2, _ = inject_attribute(from_edges([], 8, x), 3, 4, rng())
    np.testing.assert_array_equal(g2.attributes, x)


def test_attribute_tie_breaks_to_smallest_id():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
    g2 = first_target(x, 0, 4)
    assert g2.attributes[0].tolist() == [0.0, 1.0]


def test_attribute_excludes_structural_and_targets():
    g = random_graph(rng(1), 40, 0.1, d=3)
    excluded = np.arange(10)
    _, targets = inject_attribute(g, 10, 5, rng(2), excluded=excluded)
    assert not set(targets.tolist()) & set(excluded.tolist())
    with pytest.raises(InjectionError):
        inject_attribute(g, 31, 5, rng(), excluded=excluded)
    with pytest.raises(InjectionError):
        inject_attribute(g, 10, 25, rng(), excluded=excluded)


def test_swap_mode_writes_both_rows():
    x = np.diag(np.arange(1.0, 7.0))
    g2, targets = inject_attribute(from_edges([], 6, x), 1, 5, rng(0), mode="swap")
    i = int(targets[0])
    j = next(j for j in range(6) if j != i and np.array_equal(g2.attributes[i], x[j]))
    assert np.array_equal(g2.attributes[j], x[i])


def test_spec_validation():
    for bad in (dict(p=1), dict(q=0), dict(k=0), dict(mode="move")):
        with pytest.raises(InjectionError):
            InjectionSpec(**bad).resolve(100)
    with pytest.raises(InjectionError):
        InjectionSpec(p=10, q=6).resolve(100)
    assert InjectionSpec(p=10, q=5).resolve(100).q == 5


def test_auto_q():
    assert auto_clique_count(2708, 15) == 5
    assert auto_clique_count(19717, 15) == 33
    assert InjectionSpec().resolve(2708).q == 5


def test_cora_injection(cora):
    res = inject(cora, InjectionSpec(p=15, q=5, k=50, seed=0))
    assert res.labels.sum() == 150
    assert np.all(res.graph.degrees()[res.structural_ids] >= 14)


def check_invariants(g, spec, res):
    p, q = spec.p, spec.resolve(g.n).q
    s, a = set(res.structural_ids.tolist()), set(res.attribute_ids.tolist())
    assert len(s) == p * q and len(a) == p * q and not s & a
    assert int(res.labels.sum()) == 2 * p * q
    assert set(np.flatnonzero(res.labels).tolist()) == s | a
    dense = res.graph.adjacency.toarray()
    for members in res.cliques:
        for u, v in itertools.combinations(members.tolist(), 2):
            assert dense[u, v] == 1
    # edges are only ever added
    assert np.all(dense >= g.adjacency.toarray())
    # attribute rows are copies of pre-injection rows of some other node
    x0, x1 = g.attributes, res.graph.attributes
    changed = np.flatnonzero(np.any(x0 != x1, axis=1))
    assert set(changed.tolist()) <= a
    for i in a:
        assert any(np.array_equal(x1[i], x0[j]) for j in range(g.n) if j != i)


@settings(max_examples=30, deadline=None)
@given(st.integers(20, 60), st.integers(2, 5), st.integers(1, 3), st.integers(1, 8),
       st.integers(0, 2**32 - 1))
def test_injection_invariants(n, p, q, k, seed):
    g = random_graph(rng(seed), n, 0.1, d=4)
    spec = InjectionSpec(p=p, q=q, k=k, seed=seed)
    if 2 * p * q > n or k > n - 2 * p * q:
        return
    res = inject(g, spec)
    check_invariants(g, spec, res)
    again = inject(g, spec)
    assert again.labels.tobytes() == res.labels.tobytes()
    assert (again.graph.adjacency != res.graph.adjacency).nnz == 0
    assert again.graph.attributes.tobytes() == res.graph.attributes.tobytes()
