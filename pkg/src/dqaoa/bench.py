"""Graph generators and the benchmark harness.

Four instance classes: regular graphs, unweighted (UR) or weighted (WR),
and Erdos-Renyi graphs, unweighted (UE) or weighted (WE).  Instances are
Max-Cut shaped: minimize the sum of w_ij * z_i * z_j over the edges, so
the cut value is (total weight - energy) / 2 and lower energy is better.

Each benchmark row solves one seeded graph with one method and reports
the value ratio r = achieved / reference, where the reference optimum is
exhaustive up to 26 spins and otherwise the best value any method found
on that graph (provenance is recorded in the summary).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .distributed import (
    DistributedResult,
    approximation_ratio,
    solve_distributed,
    solve_naive,
)
from .ising import IsingModel, brute_force_min, model_from_text
from .qaoa import QaoaConfig

GRAPH_CLASSES = ("UR", "WR", "UE", "WE")
METHODS = (
    "ours-louvain",
    "ours-random",
    "ours-greedy",
    "naive-louvain",
    "naive-random",
    "naive-greedy",
)
CSV_HEADER = "class,method,seed,n,q,r,value,Q_modularity,tree_height,runtime_ms"
EXHAUSTIVE_N = 26


# ---------------------------------------------------------------------------
# generators

def _draw_weight(rng, weighted: bool, weight_range: tuple[int, int]) -> float:
    if not weighted:
        return 1.0
    lo, hi = weight_range
    return float(rng.integers(lo, hi + 1))


def gen_regular(
    n: int,
    d: int,
    weighted: bool = False,
    weight_range: tuple[int, int] = (1, 6),
    seed: int | None = None,
) -> IsingModel:
    """Random d-regular simple graph by stub pairing; pairs that would make
    a self-loop or duplicate edge are rejected and on dead ends the whole
    matching restarts."""
    if d < 0 or d >= n:
        raise ValueError("degree must satisfy 0 <= d < n")
    if (n * d) % 2 != 0:
        raise ValueError("infeasible: n*d must be even")
    rng = np.random.default_rng(seed)
    edges: set[tuple[int, int]] = set()
    for _ in range(1000):
        stubs = np.repeat(np.arange(n), d).tolist()
        rng.shuffle(stubs)
        edges.clear()
        dead_end = False
        while stubs and not dead_end:
            a = stubs.pop()
            for _ in range(200):
                k = int(rng.integers(len(stubs)))
                b = stubs[k]
                pair = (a, b) if a < b else (b, a)
                if a != b and pair not in edges:
                    del stubs[k]
                    edges.add(pair)
                    break
            else:
                dead_end = True
        if not dead_end:
            break
    else:
        raise RuntimeError("regular graph sampling did not converge")
    quad = {e: _draw_weight(rng, weighted, weight_range) for e in sorted(edges)}
    return IsingModel(n, {}, quad)


def gen_er(
    n: int,
    avg_degree: float,
    weighted: bool = False,
    weight_range: tuple[int, int] = (1, 6),
    seed: int | None = None,
    p_override: float | None = None,
) -> IsingModel:
    """Erdos-Renyi graph with edge probability avg_degree/(n-1); the
    probability can be pinned directly with p_override (boundary tests)."""
    if p_override is None:
        if not 0 < avg_degree < n:
            raise ValueError("avg_degree must lie in (0, n)")
        p = avg_degree / (n - 1)
    else:
        p = p_override
    rng = np.random.default_rng(seed)
    quad = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                quad[(i, j)] = _draw_weight(rng, weighted, weight_range)
    return IsingModel(n, {}, quad)


# ---------------------------------------------------------------------------
# benchmark spec

@dataclass
class BenchSpec:
    """One benchmark cell: a graph class solved by one or more methods over
    a list of seeds. ``graph_file`` bypasses generation and loads a fixed
    instance instead; ``graph_class`` then only labels the rows."""

    graph_class: str
    n: int = 0
    degree: int | None = None
    avg_degree: float | None = None
    weight_range: tuple[int, int] = (1, 6)
    q_cap: int = 10
    methods: list[str] = field(default_factory=lambda: ["ours-louvain"])
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    graph_file: str | None = None

    def __post_init__(self):
        if self.graph_file is None:
            if self.graph_class not in GRAPH_CLASSES:
                raise ValueError(
                    f"graph_class must be one of {GRAPH_CLASSES}, got {self.graph_class!r}"
                )
            if self.n < 1:
                raise ValueError("n must be >= 1")
            # regular classes default to degree 9, ER classes to mean degree 5
            if self.graph_class in ("UR", "WR") and self.degree is None:
                self.degree = 9
            if self.graph_class in ("UE", "WE") and self.avg_degree is None:
                self.avg_degree = 5.0
        if not self.graph_class:
            raise ValueError("graph_class label is required")
        if isinstance(self.methods, str):
            self.methods = [self.methods]
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        self.weight_range = (int(self.weight_range[0]), int(self.weight_range[1]))
        if self.weight_range[0] > self.weight_range[1]:
            raise ValueError("weight_range must be ordered")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchSpec":
        d = dict(data)
        if "class" in d:
            d["graph_class"] = d.pop("class")
        if "q" in d:
            d["q_cap"] = d.pop("q")
        if "method" in d:
            d.setdefault("methods", d.pop("method"))
        seeds = d.get("seeds")
        if isinstance(seeds, int):
            d["seeds"] = list(range(seeds))
        if "weight_range" in d:
            d["weight_range"] = tuple(d["weight_range"])
        if isinstance(d.get("qaoa"), dict):
            d["qaoa"] = QaoaConfig(**d["qaoa"])
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown bench spec fields: {sorted(unknown)}")
        return cls(**d)


def parse_spec_file(text: str) -> list[BenchSpec]:
    """A spec file is a JSON object or a JSON array of objects."""
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ValueError("bench spec must be a JSON object or array")
    return [BenchSpec.from_dict(d) for d in data]


# ---------------------------------------------------------------------------
# harness

@dataclass
class BenchRow:
    graph_class: str
    method: str
    seed: int
    n: int
    q: int
    r: float
    value: float
    q_modularity: float
    tree_height: int
    runtime_ms: float

    def as_csv(self) -> str:
        return ",".join(
            [
                self.graph_class,
                self.method,
                str(self.seed),
                str(self.n),
                str(self.q),
                f"{self.r:.10g}",
                f"{self.value:.10g}",
                f"{self.q_modularity:.10g}",
                str(self.tree_height),
                f"{self.runtime_ms:.3f}",
            ]
        )

    def as_dict(self) -> dict:
        return {
            "class": self.graph_class,
            "method": self.method,
            "seed": self.seed,
            "n": self.n,
            "q": self.q,
            "r": self.r,
            "value": self.value,
            "Q_modularity": self.q_modularity,
            "tree_height": self.tree_height,
            "runtime_ms": self.runtime_ms,
        }


@dataclass
class BenchResult:
    rows: list[BenchRow]
    summary: list[dict]

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER, *(row.as_csv() for row in self.rows)]) + "\n"

    def to_json(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "summary": self.summary}


def _generate(spec: BenchSpec, seed: int) -> IsingModel:
    if spec.graph_file is not None:
        return model_from_text(Path(spec.graph_file).read_text())
    weighted = spec.graph_class in ("WR", "WE")
    if spec.graph_class in ("UR", "WR"):
        return gen_regular(spec.n, spec.degree, weighted, spec.weight_range, seed)
    return gen_er(spec.n, spec.avg_degree, weighted, spec.weight_range, seed)


def _run_method(
    model: IsingModel, method: str, q_cap: int, seed: int, qaoa: QaoaConfig
) -> DistributedResult:
    kind, _, pm = method.partition("-")
    solver = solve_distributed if kind == "ours" else solve_naive
    return solver(model, q_cap=q_cap, method=pm, seed=seed, qaoa=qaoa)


def _ratio(value: float, reference: float) -> float:
    # reference 0 means no edge ever contributes; everything ties at 0
    if reference == 0.0:
        return 1.0
    # a uniform random assignment has expected energy 0, so the exhaustive
    # minimum is <= 0 and 0 anchors the worst case of the ratio
    return approximation_ratio(0.0, reference, value)


def _box_stats(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    q1, q3 = np.percentile(arr, [25.0, 75.0])
    iqr = q3 - q1
    return {
        "mean_r": float(arr.mean()),
        "median_r": float(np.median(arr)),
        "q1_r": float(q1),
        "q3_r": float(q3),
        "fence_low": float(q1 - 1.5 * iqr),
        "fence_high": float(q3 + 1.5 * iqr),
    }


def run_benchmark(spec: BenchSpec | list[BenchSpec]) -> BenchResult:
    """Solve every (method, seed) cell of each spec and attach ratios.

    The reference value per graph is the exhaustive minimum when the graph
    fits the brute-force cap, otherwise the best value found by any method
    on that graph; the summary records which one was used.
    """
    specs = spec if isinstance(spec, list) else [spec]
    rows: list[BenchRow] = []
    summaries: list[dict] = []
    for sp in specs:
        raw: dict[int, list[tuple[str, DistributedResult, float]]] = {}
        references: dict[int, float] = {}
        exhaustive = True
        n_actual = sp.n
        for s in sp.seeds:
            model = _generate(sp, s)
            n_actual = model.n
            runs = []
            for method in sp.methods:
                t0 = time.perf_counter()
                res = _run_method(model, method, sp.q_cap, s, sp.qaoa)
                dt_ms = (time.perf_counter() - t0) * 1000.0
                runs.append((method, res, dt_ms))
            raw[s] = runs
            if model.n <= EXHAUSTIVE_N:
                _, references[s] = brute_force_min(model)
            else:
                references[s] = min(res.value for _, res, _ in runs)
                exhaustive = False
        per_method: dict[str, list[float]] = {m: [] for m in sp.methods}
        for s in sp.seeds:
            for method, res, dt_ms in raw[s]:
                r = _ratio(res.value, references[s])
                per_method[method].append(r)
                rows.append(
                    BenchRow(
                        sp.graph_class,
                        method,
                        s,
                        n_actual,
                        sp.q_cap,
                        r,
                        res.value,
                        res.modularity,
                        res.tree_height,
                        dt_ms,
                    )
                )
        provenance = "exhaustive" if exhaustive else "best-found"
        for method in sp.methods:
            summaries.append(
                {
                    "class": sp.graph_class,
                    "method": method,
                    "n": n_actual,
                    "q": sp.q_cap,
                    "rows": len(sp.seeds),
                    "reference": provenance,
                    **_box_stats(per_method[method]),
                }
            )
    rows.sort(key=lambda row: (row.graph_class, row.method, row.seed))
    return BenchResult(rows, summaries)
