"""Cap-bounded divide-and-conquer solver for Ising models.

The device can only hold ``q_cap`` spins at a time, so the model is cut
into communities no larger than the cap, each community is solved on its
own, and interior spins (those with no edge leaving their community) are
contracted into a single representative spin whose orientation selects
between the local solution and its global flip.  Compressed communities
are then joined under the cap and the procedure repeats until one
subproblem remains.  A top-down sweep afterwards revisits every
contraction and keeps, flips, or re-solves the interior against the
now-fixed surroundings, which can only lower the energy.

The single-flip baseline (``naive_merge``) keeps every community intact
and only searches over one sign per community.  ``solve_distributed``
always evaluates that baseline on the same local solutions and returns
whichever assignment is lower, so the hierarchical result never falls
behind it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .ising import IsingModel, all_energies, brute_force_min, energy
from .partition import (
    Partition,
    greedy_modularity,
    louvain,
    modularity,
    random_partition,
    split_oversized,
)
from .qaoa import SIMULATOR_CAP, QaoaConfig, optimize

# interiors at most this large are re-solved exhaustively in the top-down sweep
EXHAUSTIVE_UPDATE_CAP = 12
# dense energy tables for the single-flip sign search stay below this size
SIGN_TABLE_CAP = 22

PARTITION_METHODS = ("louvain", "random", "greedy")


def derive_seed(base: int, *keys: int) -> int:
    """Stable per-subproblem seed so parallel or re-run solves agree."""
    seq = np.random.SeedSequence([int(base), *(int(k) for k in keys)])
    return int(seq.generate_state(1)[0])


# ---------------------------------------------------------------------------
# mutable work graph over global spin ids

class WorkGraph:
    """Adjacency view of the not-yet-solved part of the model.

    Node ids are global and survive across levels; representative spins get
    fresh ids above the original range.  ``offset`` absorbs every energy
    constant folded away by contractions and outright fixes.
    """

    __slots__ = ("adj", "linear", "offset")

    def __init__(self, adj=None, linear=None, offset: float = 0.0):
        self.adj: dict[int, dict[int, float]] = adj if adj is not None else {}
        self.linear: dict[int, float] = linear if linear is not None else {}
        self.offset = float(offset)

    @classmethod
    def from_model(cls, model: IsingModel) -> "WorkGraph":
        adj: dict[int, dict[int, float]] = {i: {} for i in range(model.n)}
        for (i, j), w in model.quadratic.items():
            if w != 0.0:
                adj[i][j] = w
                adj[j][i] = w
        linear = {i: h for i, h in model.linear.items() if h != 0.0}
        return cls(adj, linear, model.offset)

    def node_count(self) -> int:
        return len(self.adj)

    def nodes(self) -> list[int]:
        return sorted(self.adj)

    def add_node(self, i: int) -> None:
        self.adj.setdefault(i, {})

    def set_edge(self, i: int, j: int, w: float) -> None:
        self.adj[i][j] = w
        self.adj[j][i] = w

    def remove_node(self, i: int) -> None:
        for t in self.adj[i]:
            del self.adj[t][i]
        del self.adj[i]
        self.linear.pop(i, None)

    def value(self, values: dict[int, int]) -> float:
        """Energy of a full assignment of the current nodes, offset included."""
        total = self.offset
        for i, row in self.adj.items():
            zi = values[i]
            for j, w in row.items():
                if i < j:
                    total += w * zi * values[j]
        for i, h in self.linear.items():
            total += h * values[i]
        return total

    def submodel(self, members: list[int]) -> tuple[IsingModel, list[int]]:
        """Induced model on ``members``; edges leaving the set are dropped."""
        order = sorted(members)
        idx = {v: k for k, v in enumerate(order)}
        quad = {}
        for i in order:
            for j, w in self.adj[i].items():
                if j in idx and i < j:
                    quad[(idx[i], idx[j])] = w
        lin = {idx[i]: self.linear[i] for i in order if i in self.linear}
        return IsingModel(len(order), lin, quad), order


# ---------------------------------------------------------------------------
# contraction records

@dataclass
class MergeRecord:
    """One contraction: enough state to replay or improve it later.

    ``quad``/``linear`` snapshot the community-internal terms at contraction
    time.  ``rep`` is the representative spin id, or None when the interior
    was fixed outright (then ``rep_value`` is already set).  ``sealed``
    records contractions whose interior kept couplings to the outside
    (forced whole-community merges, conditioned spins); those must not be
    re-flipped from community-internal energy alone.
    """

    level: int
    members: list[int]
    interior: list[int]
    boundary: list[int]
    zhat: dict[int, int]
    quad: dict[tuple[int, int], float]
    linear: dict[int, float]
    rep: int | None
    rep_value: int | None
    carried: float
    sealed: bool = False


@dataclass
class DistributedResult:
    z: np.ndarray
    value: float
    naive_z: np.ndarray
    naive_value: float
    used_naive: bool
    tree_height: int
    level_values: list[float]
    partition: Partition
    modularity: float
    local_solutions: list[dict[int, int]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# forward pass pieces

def classify_nodes(work: WorkGraph, members: list[int]) -> tuple[list[int], list[int]]:
    """Split a community into interior spins (no edge leaves the set) and
    boundary spins."""
    inside = set(members)
    interior, boundary = [], []
    for i in sorted(members):
        if all(t in inside for t in work.adj[i]):
            interior.append(i)
        else:
            boundary.append(i)
    return interior, boundary


def solve_subgraph(
    work: WorkGraph, members: list[int], config: QaoaConfig, seed: int
) -> dict[int, int]:
    """Variational solve of the community-internal model; returns spin per id."""
    sub, order = work.submodel(members)
    res = optimize(sub, dataclasses.replace(config, seed=seed))
    return {order[k]: int(res.z[k]) for k in range(len(order))}


def compress(
    work: WorkGraph,
    members: list[int],
    zhat: dict[int, int],
    next_id: int,
    level: int = 0,
    force: bool = False,
) -> tuple[MergeRecord | None, list[int], int]:
    """Contract the interior of a community onto one representative spin.

    The representative at +1 reproduces the local solution, at -1 its flip;
    couplings from interior to boundary collapse onto it and the constant
    interior-interior energy moves to the work-graph offset.  Communities
    with an empty interior pass through unchanged (returns None).  With
    ``force`` the whole community is contracted, boundary included, and the
    record is sealed since the representative then carries outside edges.
    """
    if force:
        interior, boundary = sorted(members), []
    else:
        interior, boundary = classify_nodes(work, members)
    if not interior:
        return None, sorted(members), next_id

    quad = {}
    mset = set(members)
    for i in members:
        for j, w in work.adj[i].items():
            if j in mset and i < j:
                quad[(i, j)] = w
    lin = {i: work.linear[i] for i in members if i in work.linear}

    carried = 0.0
    inset = set(interior)
    for (i, j), w in quad.items():
        if i in inset and j in inset:
            carried += w * zhat[i] * zhat[j]

    if len(members) == 1 and not boundary and not work.adj[members[0]]:
        # isolated spin: fix it at the sign its field prefers
        i = members[0]
        h = work.linear.get(i, 0.0)
        v = -1 if h > 0.0 else 1
        work.offset += h * v
        work.remove_node(i)
        rec = MergeRecord(
            level, [i], [i], [], {i: v}, {}, lin, None, 1, h * v, sealed=True
        )
        return rec, [], next_id

    rep = next_id
    coupling: dict[int, float] = {}
    h_rep = 0.0
    for i in interior:
        h_rep += work.linear.get(i, 0.0) * zhat[i]
        for j, w in work.adj[i].items():
            if j not in inset:
                coupling[j] = coupling.get(j, 0.0) + w * zhat[i]
    for i in interior:
        work.remove_node(i)
    work.add_node(rep)
    for j, w in coupling.items():
        if w != 0.0:
            work.set_edge(rep, j, w)
    if h_rep != 0.0:
        work.linear[rep] = h_rep
    work.offset += carried

    rec = MergeRecord(
        level,
        sorted(members),
        interior,
        boundary,
        dict(zhat),
        quad,
        lin,
        rep,
        None,
        carried,
        sealed=force,
    )
    return rec, boundary + [rep], next_id + 1


def join(work: WorkGraph, clusters: list[list[int]], q_cap: int) -> list[list[int]]:
    """Merge compressed clusters into the next level's communities.

    Greedy phase: repeatedly merge the pair with the largest total absolute
    inter-cluster weight that still fits under the cap (ties toward the
    smallest node ids).  What remains is first-fit bin-packed under the cap
    regardless of adjacency, so disconnected pieces still coalesce.
    """
    clusters = [sorted(c) for c in clusters if c]
    if len(clusters) <= 1:
        return clusters
    owner = {}
    for k, cl in enumerate(clusters):
        for i in cl:
            owner[i] = k
    weights: dict[tuple[int, int], float] = {}
    for i, row in work.adj.items():
        for j, w in row.items():
            if i < j and owner[i] != owner[j]:
                a, b = sorted((owner[i], owner[j]))
                weights[(a, b)] = weights.get((a, b), 0.0) + abs(w)

    size = [len(c) for c in clusters]
    low = [c[0] for c in clusters]
    alive = [True] * len(clusters)
    groups = [[k] for k in range(len(clusters))]
    while True:
        best_key, best_pair = None, None
        for (a, b), w in weights.items():
            if w <= 0.0 or not (alive[a] and alive[b]):
                continue
            if size[a] + size[b] > q_cap:
                continue
            key = (-w, min(low[a], low[b]), max(low[a], low[b]))
            if best_key is None or key < best_key:
                best_key, best_pair = key, (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        alive[b] = False
        groups[a] += groups[b]
        size[a] += size[b]
        low[a] = min(low[a], low[b])
        for (x, y), w in list(weights.items()):
            if b in (x, y):
                other = y if x == b else x
                del weights[(x, y)]
                if other != a:
                    pair = tuple(sorted((a, other)))
                    weights[pair] = weights.get(pair, 0.0) + w

    remaining = sorted(
        (k for k in range(len(clusters)) if alive[k]),
        key=lambda k: (-size[k], low[k]),
    )
    bins: list[tuple[list[int], int]] = []
    for k in remaining:
        for slot, (members, used) in enumerate(bins):
            if used + size[k] <= q_cap:
                bins[slot] = (members + groups[k], used + size[k])
                break
        else:
            bins.append((list(groups[k]), size[k]))

    out = []
    for members, _ in bins:
        nodes: list[int] = []
        for k in members:
            nodes += clusters[k]
        out.append(sorted(nodes))
    return out


# ---------------------------------------------------------------------------
# backward pass pieces

def _record_energy(rec: MergeRecord, vals: dict[int, int]) -> float:
    total = 0.0
    for (i, j), w in rec.quad.items():
        total += w * vals[i] * vals[j]
    for i, h in rec.linear.items():
        total += h * vals[i]
    return total


def _resolve_interior(
    rec: MergeRecord, z_out: dict[int, int], config: QaoaConfig, base_seed: int
) -> dict[int, int]:
    order = sorted(rec.interior)
    idx = {v: k for k, v in enumerate(order)}
    quad = {}
    lin = {idx[i]: rec.linear.get(i, 0.0) for i in order}
    for (i, j), w in rec.quad.items():
        if i in idx and j in idx:
            quad[(idx[i], idx[j])] = w
        elif i in idx:
            lin[idx[i]] += w * z_out[j]
        elif j in idx:
            lin[idx[j]] += w * z_out[i]
    sub = IsingModel(len(order), lin, quad)
    if sub.n <= EXHAUSTIVE_UPDATE_CAP:
        z, _ = brute_force_min(sub)
    else:
        seed = derive_seed(base_seed, rec.level, order[0], 1)
        z = optimize(sub, dataclasses.replace(config, seed=seed)).z
    return {order[k]: int(z[k]) for k in range(len(order))}


def local_update(
    rec: MergeRecord,
    values: dict[int, int],
    config: QaoaConfig,
    base_seed: int,
) -> dict[int, int]:
    """Choose the interior assignment given the finished surroundings.

    Candidates are the stored local solution oriented by the representative
    spin, its flip, and, when the boundary has moved away from the values
    the community was solved against, a fresh solve of the interior with
    the boundary folded in.  The lowest community-internal energy wins and
    ties keep the candidate, so the result never falls behind plain
    replay.
    """
    s = rec.rep_value if rec.rep is None else values[rec.rep]
    cand = {i: s * rec.zhat[i] for i in rec.interior}
    if rec.sealed:
        return cand
    z_out = {j: values[j] for j in rec.boundary}
    choices = [cand, {i: -v for i, v in cand.items()}]
    if rec.boundary:
        zhat_out = {j: rec.zhat[j] for j in rec.boundary}
        moved = z_out != zhat_out and z_out != {j: -v for j, v in zhat_out.items()}
        if moved:
            choices.append(_resolve_interior(rec, z_out, config, base_seed))
    best, best_val = None, None
    for z_in in choices:
        val = _record_energy(rec, {**z_out, **z_in})
        if best_val is None or val < best_val:
            best, best_val = z_in, val
    return best


def global_update(model: IsingModel, z: np.ndarray) -> np.ndarray:
    """Best of an assignment and its global flip; ties keep the original."""
    z = np.asarray(z, dtype=int)
    if model.n == 0:
        return z
    return z if energy(model, z) <= energy(model, -z) else -z


# ---------------------------------------------------------------------------
# single-flip baseline

def _sign_search(model: IsingModel, seed: int) -> np.ndarray:
    """Exact sign vector for small block models, identity-first on ties;
    larger ones are chunked and recursed."""
    if model.n <= SIGN_TABLE_CAP:
        idx = int(np.argmin(all_energies(model)))
        bits = (idx >> np.arange(model.n)) & 1
        return (1 - 2 * bits).astype(int)
    chunks = random_partition(model, q_cap=16, seed=seed).communities
    work = WorkGraph.from_model(model)
    locals_ = []
    for comm in chunks:
        sub, order = work.submodel(comm)
        z, _ = brute_force_min(sub)
        locals_.append({order[k]: int(z[k]) for k in range(len(order))})
    z, _ = naive_merge(model, chunks, locals_, seed=derive_seed(seed, 4))
    return z


def naive_merge(
    model: IsingModel,
    communities: Partition | list[list[int]],
    local_solutions: list[dict[int, int]],
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Single-flip merge: keep each community's local solution rigid and
    search only over one orientation per community, exactly.

    Returns the merged assignment and its energy under the full model.
    """
    comms = communities.communities if isinstance(communities, Partition) else communities
    if len(comms) != len(local_solutions):
        raise ValueError("one local solution per community is required")
    block = {}
    for k, comm in enumerate(comms):
        for i in comm:
            block[i] = k
    zhat = {}
    for sol in local_solutions:
        zhat.update(sol)

    m = len(comms)
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, h in model.linear.items():
        k = block[i]
        lin[k] = lin.get(k, 0.0) + h * zhat[i]
    for (i, j), w in model.quadratic.items():
        a, b = block[i], block[j]
        term = w * zhat[i] * zhat[j]
        if a == b:
            offset += term
        else:
            pair = (a, b) if a < b else (b, a)
            quad[pair] = quad.get(pair, 0.0) + term
    sign_model = IsingModel(m, lin, quad, offset)
    s = _sign_search(sign_model, seed)

    z = np.zeros(model.n, dtype=int)
    for i in range(model.n):
        z[i] = s[block[i]] * zhat[i]
    return z, energy(model, z)


def approximation_ratio(v_max: float, v_min: float, achieved: float) -> float:
    """Fraction of the value range covered: 1.0 at the optimum, 0.0 at the
    worst value. Cut problems report with v_max = 0."""
    if v_min >= v_max:
        raise ValueError("v_min must lie strictly below v_max")
    return (v_max - achieved) / (v_max - v_min)


# ---------------------------------------------------------------------------
# drivers

def _initial_partition(
    model: IsingModel, q_cap: int, method: str, seed: int
) -> Partition:
    if method == "louvain":
        part = louvain(model, q_cap, seed)
    elif method == "random":
        part = random_partition(model, q_cap, seed)
    elif method == "greedy":
        part = greedy_modularity(model, q_cap)
    else:
        raise ValueError(f"unknown partition method: {method!r}")
    return split_oversized(model, part, q_cap, seed)


def _check_args(model: IsingModel, q_cap: int) -> None:
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    if q_cap > SIMULATOR_CAP:
        raise ValueError(f"q_cap exceeds the {SIMULATOR_CAP}-qubit simulator cap")


def _solve_communities(
    work: WorkGraph,
    communities: list[list[int]],
    config: QaoaConfig,
    seed: int,
    level: int,
) -> list[dict[int, int]]:
    return [
        solve_subgraph(work, comm, config, derive_seed(seed, level, min(comm)))
        for comm in communities
    ]


def solve_naive(
    model: IsingModel,
    q_cap: int = 10,
    method: str = "louvain",
    seed: int = 0,
    qaoa: QaoaConfig | None = None,
) -> DistributedResult:
    """Partition, solve each community once, and merge with single flips.

    Shares the partition and the per-community seeds with
    ``solve_distributed`` so the two pipelines disagree only in how they
    stitch local solutions together.
    """
    _check_args(model, q_cap)
    cfg = qaoa or QaoaConfig()
    if model.n <= q_cap and model.n > 0:
        # mirrors the single-solve shortcut so both pipelines coincide here
        part = Partition(model.n, [list(range(model.n))], q_cap=q_cap)
    else:
        part = _initial_partition(model, q_cap, method, seed)
    work = WorkGraph.from_model(model)
    locals_ = _solve_communities(work, part.communities, cfg, seed, level=1)
    z, value = naive_merge(model, part, locals_, seed=seed)
    concat = {i: v for sol in locals_ for i, v in sol.items()}
    return DistributedResult(
        z=z,
        value=value,
        naive_z=z.copy(),
        naive_value=value,
        used_naive=True,
        tree_height=1,
        level_values=[work.value(concat)],
        partition=part,
        modularity=modularity(model, part),
        local_solutions=locals_,
    )


def _reshape(
    work: WorkGraph, communities: list[list[int]], q_cap: int, seed: int, level: int
) -> bool:
    """Stall fallback: merge the two smallest adjacent communities and split
    the union again along its own structure. Returns False when nothing is
    adjacent or the split comes back unchanged."""
    best_key, best_pair = None, None
    for a in range(len(communities)):
        sa = set(communities[a])
        for b in range(a + 1, len(communities)):
            adjacent = any(j in sa for i in communities[b] for j in work.adj[i])
            if not adjacent:
                continue
            key = (
                len(communities[a]) + len(communities[b]),
                communities[a][0],
                communities[b][0],
            )
            if best_key is None or key < best_key:
                best_key, best_pair = key, (a, b)
    if best_pair is None:
        return False
    a, b = best_pair
    union = sorted(communities[a] + communities[b])
    sub, order = work.submodel(union)
    pieces = louvain(sub, q_cap, derive_seed(seed, level, union[0], 3))
    parts = [sorted(order[k] for k in comm) for comm in pieces.communities]
    if len(parts) == 2 and sorted(map(tuple, parts)) == sorted(
        map(tuple, [tuple(communities[a]), tuple(communities[b])])
    ):
        return False
    for k in sorted((a, b), reverse=True):
        del communities[k]
    communities += parts
    return True


def _condition_singleton(
    work: WorkGraph, node: int, level: int
) -> MergeRecord:
    """Fix one spin at the sign its local field prefers and fold its row
    into the neighbours. Last-resort progress when nothing can merge."""
    h = work.linear.get(node, 0.0)
    v = -1 if h > 0.0 else 1
    for t, w in work.adj[node].items():
        folded = work.linear.get(t, 0.0) + w * v
        if folded == 0.0:
            work.linear.pop(t, None)
        else:
            work.linear[t] = folded
    work.offset += h * v
    row = {(min(node, t), max(node, t)): w for t, w in work.adj[node].items()}
    work.remove_node(node)
    return MergeRecord(
        level, [node], [node], [], {node: v}, row, {node: h}, None, 1, h * v,
        sealed=True,
    )


def solve_distributed(
    model: IsingModel,
    q_cap: int = 10,
    method: str = "louvain",
    seed: int = 0,
    qaoa: QaoaConfig | None = None,
) -> DistributedResult:
    """Hierarchical solve under a device cap.

    Forward: partition, solve communities, contract interiors, join under
    the cap, repeat until a single subproblem remains and solve it.
    Backward: walk the contractions in reverse, keeping, flipping, or
    re-solving each interior against the finished surroundings.  The
    single-flip baseline runs on the same level-one solutions and the
    better of the two assignments is returned.
    """
    _check_args(model, q_cap)
    cfg = qaoa or QaoaConfig()
    if model.n == 0:
        empty = Partition(0, [])
        return DistributedResult(
            np.zeros(0, dtype=int), model.offset, np.zeros(0, dtype=int),
            model.offset, False, 0, [model.offset], empty, 0.0,
        )

    if model.n <= q_cap:
        res = optimize(model, dataclasses.replace(cfg, seed=derive_seed(seed, 1, 0)))
        z = global_update(model, res.z)
        value = energy(model, z)
        part = Partition(model.n, [list(range(model.n))], q_cap=q_cap)
        local = {i: int(z[i]) for i in range(model.n)}
        return DistributedResult(
            z, value, z.copy(), value, False, 0, [value], part,
            modularity(model, part), [local],
        )

    part = _initial_partition(model, q_cap, method, seed)
    work = WorkGraph.from_model(model)
    communities = [list(c) for c in part.communities]
    records: list[MergeRecord] = []
    level_values: list[float] = []
    next_id = model.n
    level = 1
    level1_locals: list[dict[int, int]] = []
    root: dict[int, int] = {}
    # node count only ever shrinks, so rounds that fail to push (nodes, M)
    # below the best state seen so far are stagnating and must escalate
    best_state = (work.node_count(), len(communities))
    stagnant = 0

    while communities:
        locals_ = _solve_communities(work, communities, cfg, seed, level)
        if level == 1:
            level1_locals = [dict(sol) for sol in locals_]
        concat = {i: v for sol in locals_ for i, v in sol.items()}
        level_values.append(work.value(concat))
        if len(communities) == 1:
            root = locals_[0]
            break

        clusters = []
        for comm, zhat in zip(communities, locals_):
            rec, surviving, next_id = compress(work, comm, zhat, next_id, level)
            if rec is not None:
                records.append(rec)
            if surviving:
                clusters.append(surviving)
        communities = join(work, clusters, q_cap)

        state = (work.node_count(), len(communities))
        if state < best_state:
            best_state, stagnant = state, 0
        elif communities:
            stagnant += 1
            reshaped = stagnant == 1 and _reshape(
                work, communities, q_cap, seed, level
            )
            if not reshaped:
                # guaranteed shrink: contract a whole community, or when
                # only singletons remain, condition one spin away
                multi = [c for c in communities if len(c) > 1]
                if multi:
                    target = min(multi, key=lambda c: (len(c), c[0]))
                    zhat = solve_subgraph(
                        work, target, cfg, derive_seed(seed, level, min(target), 2)
                    )
                    communities.remove(target)
                    rec, surviving, next_id = compress(
                        work, target, zhat, next_id, level, force=True
                    )
                    records.append(rec)
                    if surviving:
                        communities.append(surviving)
                else:
                    node = min(c[0] for c in communities)
                    records.append(_condition_singleton(work, node, level))
                    communities = [c for c in communities if c[0] != node]
                communities = join(work, communities, q_cap)
                best_state = min(best_state, (work.node_count(), len(communities)))
                stagnant = 0
        level += 1

    z_work = dict(root)
    for rec in reversed(records):
        z_work.update(local_update(rec, z_work, cfg, seed))
    z = np.array([z_work[i] for i in range(model.n)], dtype=int)
    z = global_update(model, z)
    value = energy(model, z)

    naive_z, naive_value = naive_merge(model, part, level1_locals, seed=seed)
    if naive_value < value:
        final_z, final_value, used = naive_z, naive_value, True
    else:
        final_z, final_value, used = z, value, False

    return DistributedResult(
        z=final_z,
        value=final_value,
        naive_z=naive_z,
        naive_value=naive_value,
        used_naive=used,
        tree_height=len(level_values) - 1,
        level_values=level_values,
        partition=part,
        modularity=modularity(model, part),
        local_solutions=level1_locals,
    )
