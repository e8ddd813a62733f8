from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from dqaoa.pbf import ConstrainedProblem, parse_problem

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def ckp_problem() -> ConstrainedProblem:
    return parse_problem((DATA / "ckp.pbo").read_text())


@pytest.fixture(scope="session")
def nine_graph_text() -> str:
    return (DATA / "nine.graph").read_text()


def cube_optimum(problem: ConstrainedProblem):
    """Independent oracle: enumerate every feasible Boolean assignment."""
    n = problem.num_vars()
    best_val = None
    best_x = None
    sign = 1.0 if problem.sense == "min" else -1.0
    for bits in itertools.product((0, 1), repeat=n):
        x = {i + 1: bits[i] for i in range(n)}
        if not all(c.satisfied(x) for c in problem.constraints):
            continue
        v = problem.objective.evaluate(x)
        if best_val is None or sign * v < sign * best_val:
            best_val = v
            best_x = x
    return best_x, best_val
