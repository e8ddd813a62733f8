from __future__ import annotations

import numpy as np
import pytest

from dqaoa.ising import IsingModel, model_from_text
from dqaoa.partition import (
    Partition,
    greedy_modularity,
    louvain,
    louvain_levels,
    modularity,
    modularity_gain,
    random_partition,
    split_oversized,
)


def edges_model(n, edges) -> IsingModel:
    return IsingModel(n, {}, {(i, j): float(w) for i, j, w in edges})


def triangle_pair() -> IsingModel:
    # two triangles joined by one bridge edge
    edges = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 1)]
    return edges_model(6, edges)


def modularity_reference(model: IsingModel, part: Partition) -> float:
    """Direct ordered-pair sum, including the i == j null-model term."""
    w = {}
    k = np.zeros(model.n)
    for (i, j), c in model.quadratic.items():
        w[(i, j)] = w[(j, i)] = abs(c)
        k[i] += abs(c)
        k[j] += abs(c)
    two_m = k.sum()
    if two_m == 0.0:
        return 0.0
    q = 0.0
    for i in range(model.n):
        for j in range(model.n):
            if part.of(i) == part.of(j):
                q += w.get((i, j), 0.0) - k[i] * k[j] / two_m
    return q / two_m


def set_partitions(items):
    if not items:
        yield []
        return
    head, *rest = items
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [part[k] + [head]] + part[k + 1:]
        yield [[head]] + part


def random_model(rng, n, p=0.4) -> IsingModel:
    quad = {
        (i, j): float(rng.integers(-3, 4))
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    }
    return IsingModel(n, {}, {k: v for k, v in quad.items() if v})


# ---------------------------------------------------------------------------
# Partition container

def test_partition_normalizes_order():
    p = Partition(4, [[3, 1], [2, 0]])
    assert p.communities == [[0, 2], [1, 3]]
    assert p.of(3) == 1 and p.of(0) == 0
    assert p.sizes() == [2, 2]
    assert len(p) == 2


def test_partition_rejects_overlap_and_gaps():
    with pytest.raises(ValueError, match="two communities"):
        Partition(3, [[0, 1], [1, 2]])
    with pytest.raises(ValueError, match="cover"):
        Partition(3, [[0, 1]])
    with pytest.raises(ValueError, match="cover"):
        Partition(2, [[0, 1, 2]])


# ---------------------------------------------------------------------------
# modularity values

def test_modularity_triangle_hand_values():
    tri = edges_model(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    assert modularity(tri, Partition(3, [[0, 1, 2]])) == pytest.approx(0.0)
    assert modularity(tri, Partition(3, [[0], [1], [2]])) == pytest.approx(-1.0 / 3.0)
    assert modularity(tri, Partition(3, [[0, 1], [2]])) == pytest.approx(-2.0 / 9.0)


def test_modularity_no_edges_is_zero():
    model = IsingModel(4, {0: 1.0})
    assert modularity(model, Partition(4, [[0, 1], [2, 3]])) == 0.0


def test_modularity_single_edge_values():
    model = edges_model(2, [(0, 1, 1)])
    assert modularity(model, Partition(2, [[0, 1]])) == pytest.approx(0.0)
    assert modularity(model, Partition(2, [[0], [1]])) == pytest.approx(-0.5)


def test_modularity_disjoint_triangles():
    edges = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)]
    model = edges_model(6, edges)
    by_triangle = Partition(6, [[0, 1, 2], [3, 4, 5]])
    assert modularity(model, by_triangle) == pytest.approx(0.5)


def test_gain_single_edge_insert():
    model = edges_model(2, [(0, 1, 1)])
    part = Partition(2, [[0], [1]])
    assert modularity_gain(model, part, 0, 1) == pytest.approx(0.5)


def test_modularity_uses_absolute_weights():
    pos = edges_model(3, [(0, 1, 2), (1, 2, 1)])
    neg = edges_model(3, [(0, 1, -2), (1, 2, 1)])
    part = Partition(3, [[0, 1], [2]])
    assert modularity(pos, part) == modularity(neg, part)


def test_modularity_matches_reference_on_random_instances():
    rng = np.random.default_rng(10)
    for _ in range(30):
        n = int(rng.integers(3, 9))
        model = random_model(rng, n)
        part = random_partition(model, q_cap=int(rng.integers(2, 5)), seed=int(rng.integers(1000)))
        assert modularity(model, part) == pytest.approx(
            modularity_reference(model, part), abs=1e-12
        )


def test_modularity_size_mismatch():
    with pytest.raises(ValueError):
        modularity(IsingModel(3), Partition(2, [[0], [1]]))


# ---------------------------------------------------------------------------
# move gains

def test_gain_matches_recomputed_delta():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 200:
        n = int(rng.integers(4, 10))
        model = random_model(rng, n)
        node = int(rng.integers(n))
        others = [v for v in range(n) if v != node]
        rng.shuffle(others)
        cut = max(1, int(rng.integers(1, len(others) + 1)))
        comms = [others[i:i + cut] for i in range(0, len(others), cut)]
        part = Partition(n, comms + [[node]])
        target = int(rng.integers(len(part)))
        if part.communities[target] == [node]:
            continue
        gain = modularity_gain(model, part, node, target)
        moved = [list(c) for c in part.communities]
        moved[target].append(node)
        moved[part.of(node)].remove(node)
        after = Partition(n, [c for c in moved if c])
        delta = modularity(model, after) - modularity(model, part)
        assert gain == pytest.approx(delta, abs=1e-10)
        checked += 1


def test_gain_requires_singleton_source():
    model = triangle_pair()
    part = Partition(6, [[0, 1], [2], [3, 4, 5]])
    with pytest.raises(ValueError, match="singleton"):
        modularity_gain(model, part, 0, 2)
    with pytest.raises(ValueError, match="already contains"):
        modularity_gain(model, part, 2, 1)
    with pytest.raises(ValueError, match="no community"):
        modularity_gain(model, part, 2, 9)


def test_gain_zero_when_no_edges():
    model = IsingModel(3)
    part = Partition(3, [[0, 1], [2]])
    assert modularity_gain(model, part, 2, 0) == 0.0


# ---------------------------------------------------------------------------
# louvain

def test_louvain_recovers_triangles():
    model = triangle_pair()
    best = max(
        (louvain(model, q_cap=6, seed=s) for s in range(5)),
        key=lambda p: modularity(model, p),
    )
    assert best.communities == [[0, 1, 2], [3, 4, 5]]
    # exhaustive over all 203 partitions of 6 nodes confirms optimality
    q_star = max(
        modularity(model, Partition(6, p)) for p in set_partitions(list(range(6)))
    )
    assert modularity(model, best) == pytest.approx(q_star, abs=1e-12)
    assert q_star == pytest.approx(5.0 / 14.0)


def test_louvain_respects_cap():
    rng = np.random.default_rng(12)
    for trial in range(20):
        n = int(rng.integers(5, 25))
        model = random_model(rng, n, p=0.3)
        cap = int(rng.integers(1, 7))
        part = louvain(model, q_cap=cap, seed=trial)
        assert part.max_size() <= cap
        assert part.n == n


def test_louvain_cap_one_gives_singletons():
    model = triangle_pair()
    part = louvain(model, q_cap=1, seed=0)
    assert part.sizes() == [1] * 6


def test_louvain_levels_nondecreasing_modularity():
    rng = np.random.default_rng(13)
    for trial in range(10):
        n = int(rng.integers(8, 30))
        model = random_model(rng, n, p=0.25)
        levels = louvain_levels(model, q_cap=8, seed=trial)
        qs = [modularity(model, p) for p in levels]
        assert all(b >= a - 1e-12 for a, b in zip(qs, qs[1:]))


def test_louvain_deterministic_per_seed():
    model = random_model(np.random.default_rng(14), 20, p=0.3)
    assert louvain(model, 5, seed=7).communities == louvain(model, 5, seed=7).communities


def test_louvain_no_edges():
    part = louvain(IsingModel(4), q_cap=3, seed=0)
    assert part.sizes() == [1, 1, 1, 1]


def test_louvain_nine_node_instance(nine_graph_text):
    model = model_from_text(nine_graph_text)
    part = louvain(model, q_cap=4, seed=0)
    assert part.n == 9
    assert part.max_size() <= 4
    # both triangles stay together under any decent partition
    assert part.of(0) == part.of(1) == part.of(2)


# ---------------------------------------------------------------------------
# baselines

def test_random_partition_covers_and_caps():
    model = IsingModel(11)
    part = random_partition(model, q_cap=4, seed=3)
    assert part.n == 11
    assert part.max_size() <= 4
    assert sum(part.sizes()) == 11
    same = random_partition(model, q_cap=4, seed=3)
    assert part.communities == same.communities


def test_greedy_recovers_triangles():
    model = triangle_pair()
    part = greedy_modularity(model, q_cap=3)
    assert part.communities == [[0, 1, 2], [3, 4, 5]]


def test_greedy_respects_cap():
    rng = np.random.default_rng(15)
    for _ in range(15):
        n = int(rng.integers(5, 20))
        model = random_model(rng, n, p=0.35)
        cap = int(rng.integers(1, 6))
        part = greedy_modularity(model, q_cap=cap)
        assert part.max_size() <= cap


def test_greedy_never_merges_below_zero_gain():
    # disconnected edges with equal degree: every merge has negative gain
    model = edges_model(4, [(0, 1, 1), (2, 3, 1)])
    part = greedy_modularity(model, q_cap=4)
    assert part.communities == [[0, 1], [2, 3]]


def test_greedy_single_edge_merges_endpoints():
    model = edges_model(2, [(0, 1, 1)])
    part = greedy_modularity(model, q_cap=2)
    assert part.communities == [[0, 1]]


def test_random_partition_chunk_sizes():
    part = random_partition(IsingModel(7), q_cap=3, seed=0)
    assert sorted(part.sizes()) == [1, 3, 3]


# ---------------------------------------------------------------------------
# cap plumbing and repair

def test_partition_cap_validation():
    Partition(4, [[0, 1], [2, 3]], q_cap=2)
    with pytest.raises(ValueError, match="cap"):
        Partition(4, [[0, 1, 2], [3]], q_cap=2)


def test_partition_methods_carry_cap():
    for maker, kwargs in [
        (louvain, {"seed": 1}),
        (random_partition, {"seed": 1}),
        (greedy_modularity, {}),
    ]:
        part = maker(triangle_pair(), 3, **kwargs)
        assert part.q_cap == 3


def test_louvain_sweep_log_nondecreasing():
    rng = np.random.default_rng(21)
    for trial in range(10):
        n = int(rng.integers(8, 25))
        model = random_model(rng, n, p=0.3)
        log: list[float] = []
        louvain(model, q_cap=6, seed=trial, sweep_log=log)
        assert log, "at least one sweep must be recorded"
        assert all(b >= a - 1e-12 for a, b in zip(log, log[1:]))


def test_split_oversized_repairs_cap_breach():
    model = triangle_pair()
    # hand-built breach: everything in one community, cap 3
    breach = Partition(6, [[0, 1, 2, 3, 4, 5]])
    fixed = split_oversized(model, breach, q_cap=3, seed=0)
    assert fixed.max_size() <= 3
    assert fixed.n == 6
    assert fixed.q_cap == 3


def test_split_oversized_noop_when_within_cap():
    model = triangle_pair()
    part = Partition(6, [[0, 1, 2], [3, 4, 5]])
    fixed = split_oversized(model, part, q_cap=3, seed=0)
    assert fixed.communities == part.communities
