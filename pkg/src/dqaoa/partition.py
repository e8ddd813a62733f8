"""Qubit-capped community detection on coupling graphs.

Ising couplings enter by absolute value, so a strong ferro or antiferro
bond both count as a reason to co-locate two spins. Every routine keeps
community sizes at or below a cap, counted in original nodes even on
aggregated graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ising import IsingModel


@dataclass
class Partition:
    n: int
    communities: list[list[int]]
    q_cap: int | None = None
    membership: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        cleaned = [sorted(set(c)) for c in self.communities if c]
        cleaned.sort(key=lambda c: c[0])
        self.communities = cleaned
        self.membership = {}
        for cid, comm in enumerate(cleaned):
            for node in comm:
                if node in self.membership:
                    raise ValueError(f"node {node} appears in two communities")
                self.membership[node] = cid
        if set(self.membership) != set(range(self.n)):
            raise ValueError("communities must cover exactly the nodes 0..n-1")
        if self.q_cap is not None and self.max_size() > self.q_cap:
            raise ValueError(f"community exceeds the {self.q_cap}-node cap")

    def __len__(self) -> int:
        return len(self.communities)

    def of(self, node: int) -> int:
        return self.membership[node]

    def sizes(self) -> list[int]:
        return [len(c) for c in self.communities]

    def max_size(self) -> int:
        return max(self.sizes()) if self.communities else 0


def coupling_weights(model: IsingModel) -> dict[tuple[int, int], float]:
    return {pair: abs(w) for pair, w in model.quadratic.items() if w != 0.0}


def _degrees_and_m(model: IsingModel) -> tuple[np.ndarray, float]:
    k = np.zeros(model.n)
    for (i, j), w in model.quadratic.items():
        k[i] += abs(w)
        k[j] += abs(w)
    return k, float(k.sum() / 2.0)


def modularity(model: IsingModel, partition: Partition) -> float:
    """Newman modularity of the |coupling| graph; 0 when there are no edges.
    The null-model sum runs over ordered pairs including i == j."""
    if partition.n != model.n:
        raise ValueError("partition size does not match model")
    k, m = _degrees_and_m(model)
    if m == 0.0:
        return 0.0
    intra = np.zeros(len(partition))
    for (i, j), w in model.quadratic.items():
        ci, cj = partition.of(i), partition.of(j)
        if ci == cj:
            intra[ci] += abs(w)
    totals = np.zeros(len(partition))
    for node, cid in partition.membership.items():
        totals[cid] += k[node]
    return float(np.sum(intra / m - (totals / (2.0 * m)) ** 2))


def modularity_gain(
    model: IsingModel, partition: Partition, node: int, target: int
) -> float:
    """Exact Q change from moving `node`, currently in a singleton community,
    into community `target`."""
    cid = partition.of(node)
    if partition.communities[cid] != [node]:
        raise ValueError(f"node {node} must sit in a singleton community")
    if not 0 <= target < len(partition):
        raise ValueError(f"no community {target}")
    if target == cid:
        raise ValueError(f"community {target} already contains node {node}")
    k, m = _degrees_and_m(model)
    if m == 0.0:
        return 0.0
    members = set(partition.communities[target])
    w_to_target = 0.0
    for (i, j), w in model.quadratic.items():
        if i == node and j in members:
            w_to_target += abs(w)
        elif j == node and i in members:
            w_to_target += abs(w)
    k_target = sum(k[u] for u in members)
    return w_to_target / m - k[node] * k_target / (2.0 * m * m)


# ---------------------------------------------------------------------------
# Louvain, capped

class _Graph:
    """Aggregation-friendly weighted graph: adj holds off-diagonal weights,
    loops[i] carries twice the internal weight of the original community."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.loops = np.zeros(n)

    @classmethod
    def from_model(cls, model: IsingModel) -> "_Graph":
        g = cls(model.n)
        for (i, j), w in coupling_weights(model).items():
            g.adj[i][j] = g.adj[i].get(j, 0.0) + w
            g.adj[j][i] = g.adj[j].get(i, 0.0) + w
        return g

    def degrees(self) -> np.ndarray:
        return np.array([sum(a.values()) for a in self.adj]) + self.loops

    def two_m(self) -> float:
        return float(self.degrees().sum())

    def modularity_of(self, comm: list[int]) -> float:
        """Modularity of an assignment on this (possibly aggregated) graph.
        Self-loops already carry twice the folded intra weight, so this
        equals the original graph's modularity for the induced partition."""
        two_m = self.two_m()
        if two_m == 0.0:
            return 0.0
        k = self.degrees()
        ids = set(comm)
        intra = {c: 0.0 for c in ids}
        totals = {c: 0.0 for c in ids}
        for i in range(self.n):
            intra[comm[i]] += self.loops[i]
            totals[comm[i]] += k[i]
            for j, w in self.adj[i].items():
                if comm[j] == comm[i]:
                    intra[comm[i]] += w
        return sum(
            intra[c] / two_m - (totals[c] / two_m) ** 2 for c in ids
        )


def _one_level(
    graph: _Graph,
    node_weight: list[int],
    q_cap: int,
    rng,
    sweep_log: list[float] | None = None,
) -> list[int]:
    """Single Louvain sweep phase: greedy positive-gain moves until a full
    pass changes nothing. Moves respect the original-node cap."""
    n = graph.n
    comm = list(range(n))
    k = graph.degrees()
    two_m = graph.two_m()
    if two_m == 0.0:
        return comm
    comm_k = k.copy()
    comm_weight = list(node_weight)
    moved_any = True
    while moved_any:
        moved_any = False
        for i in rng.permutation(n):
            i = int(i)
            old = comm[i]
            # detach i before scoring candidate communities
            comm_k[old] -= k[i]
            comm_weight[old] -= node_weight[i]
            link: dict[int, float] = {}
            for j, w in graph.adj[i].items():
                link[comm[j]] = link.get(comm[j], 0.0) + w
            best, best_gain = old, link.get(old, 0.0) - k[i] * comm_k[old] / two_m
            for c, w_ic in sorted(link.items()):
                if c == old:
                    continue
                if comm_weight[c] + node_weight[i] > q_cap:
                    continue
                gain = w_ic - k[i] * comm_k[c] / two_m
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            comm[i] = best
            comm_k[best] += k[i]
            comm_weight[best] += node_weight[i]
            if best != old:
                moved_any = True
        if sweep_log is not None:
            sweep_log.append(graph.modularity_of(comm))
    return comm


def _aggregate(
    graph: _Graph, comm: list[int], node_weight: list[int]
) -> tuple[_Graph, list[int], dict[int, int]]:
    ids = sorted(set(comm))
    remap = {c: k for k, c in enumerate(ids)}
    agg = _Graph(len(ids))
    weights = [0] * len(ids)
    for i in range(graph.n):
        ci = remap[comm[i]]
        weights[ci] += node_weight[i]
        agg.loops[ci] += graph.loops[i]
        for j, w in graph.adj[i].items():
            cj = remap[comm[j]]
            if ci == cj:
                agg.loops[ci] += w  # each internal edge visited from both ends
            else:
                # symmetric adj entries land once per direction
                agg.adj[ci][cj] = agg.adj[ci].get(cj, 0.0) + w
    return agg, weights, remap


def louvain_levels(
    model: IsingModel,
    q_cap: int = 10,
    seed: int | None = None,
    sweep_log: list[float] | None = None,
) -> list[Partition]:
    """Capped Louvain; returns the partition after every aggregation round
    (modularity is non-decreasing along the list). When given, sweep_log
    collects the working-graph modularity after every phase-1 sweep."""
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    rng = np.random.default_rng(seed)
    graph = _Graph.from_model(model)
    node_weight = [1] * model.n
    node_of = {orig: orig for orig in range(model.n)}  # original -> supernode
    levels: list[Partition] = []
    while True:
        comm = _one_level(graph, node_weight, q_cap, rng, sweep_log)
        groups: dict[int, list[int]] = {}
        for orig, sn in node_of.items():
            groups.setdefault(comm[sn], []).append(orig)
        part = Partition(model.n, list(groups.values()), q_cap)
        if levels and part.communities == levels[-1].communities:
            break
        levels.append(part)
        if len(part) == graph.n:
            break
        graph, node_weight, remap = _aggregate(graph, comm, node_weight)
        node_of = {orig: remap[comm[sn]] for orig, sn in node_of.items()}
    return levels


def louvain(
    model: IsingModel,
    q_cap: int = 10,
    seed: int | None = None,
    sweep_log: list[float] | None = None,
) -> Partition:
    return louvain_levels(model, q_cap, seed, sweep_log)[-1]


# ---------------------------------------------------------------------------
# baselines

def split_oversized(
    model: IsingModel, partition: Partition, q_cap: int, seed: int | None = None
) -> Partition:
    """Break any over-cap community by re-running capped Louvain on its
    induced subgraph. Producers below never emit oversized communities, so
    this is defensive plumbing for externally supplied partitions."""
    out: list[list[int]] = []
    for comm in partition.communities:
        if len(comm) <= q_cap:
            out.append(comm)
            continue
        local = {g: l for l, g in enumerate(comm)}
        sub = IsingModel(len(comm))
        for (i, j), w in model.quadratic.items():
            if i in local and j in local:
                sub.quadratic[(local[i], local[j])] = w
        sub = IsingModel(sub.n, {}, sub.quadratic)
        for piece in louvain(sub, q_cap, seed).communities:
            out.append([comm[l] for l in piece])
    return Partition(partition.n, out, q_cap)


def random_partition(
    model: IsingModel, q_cap: int = 10, seed: int | None = None
) -> Partition:
    """Shuffle the nodes and slice into consecutive cap-sized chunks."""
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(model.n)]
    chunks = [order[i:i + q_cap] for i in range(0, model.n, q_cap)]
    return Partition(model.n, chunks, q_cap)


def greedy_modularity(model: IsingModel, q_cap: int = 10) -> Partition:
    """Agglomerative merging: repeatedly join the community pair with the
    largest positive modularity gain that fits under the cap."""
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    k, m = _degrees_and_m(model)
    comms: dict[int, set[int]] = {i: {i} for i in range(model.n)}
    if m == 0.0:
        return Partition(model.n, [sorted(c) for c in comms.values()], q_cap)
    comm_k = {i: float(k[i]) for i in range(model.n)}
    between: dict[tuple[int, int], float] = {}
    for (i, j), w in coupling_weights(model).items():
        a, b = min(i, j), max(i, j)
        between[(a, b)] = between.get((a, b), 0.0) + w
    while True:
        best_gain, best_pair = 0.0, None
        for (a, b), w_ab in sorted(between.items()):
            if len(comms[a]) + len(comms[b]) > q_cap:
                continue
            gain = w_ab / m - comm_k[a] * comm_k[b] / (2.0 * m * m)
            if gain > best_gain + 1e-12:
                best_gain, best_pair = gain, (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        comms[a] |= comms.pop(b)
        comm_k[a] += comm_k.pop(b)
        merged: dict[tuple[int, int], float] = {}
        for (x, y), w in between.items():
            if (x, y) == (a, b):
                continue
            x2 = a if x == b else x
            y2 = a if y == b else y
            if x2 == y2:
                continue
            key = (min(x2, y2), max(x2, y2))
            merged[key] = merged.get(key, 0.0) + w
        between = merged
    return Partition(model.n, [sorted(c) for c in comms.values()], q_cap)
