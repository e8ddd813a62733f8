"""Distributed qubit-capped QAOA toolkit for pseudo-Boolean optimization."""

from .bench import BenchSpec, gen_er, gen_regular, run_benchmark
from .distributed import (
    DistributedResult,
    approximation_ratio,
    naive_merge,
    solve_distributed,
    solve_naive,
)
from .ising import IsingModel, brute_force_min, energy, model_from_text, model_to_text
from .partition import Partition, greedy_modularity, louvain, modularity, random_partition
from .pbf import ConstrainedProblem, ReductionConfig, parse_problem
from .qaoa import QaoaConfig, QaoaResult, optimize
from .reduction import reconstruct, reduce_full

__version__ = "0.1.0"

__all__ = [
    "BenchSpec",
    "ConstrainedProblem",
    "DistributedResult",
    "IsingModel",
    "Partition",
    "QaoaConfig",
    "QaoaResult",
    "ReductionConfig",
    "approximation_ratio",
    "brute_force_min",
    "energy",
    "gen_er",
    "gen_regular",
    "greedy_modularity",
    "louvain",
    "model_from_text",
    "model_to_text",
    "modularity",
    "naive_merge",
    "optimize",
    "parse_problem",
    "random_partition",
    "reconstruct",
    "reduce_full",
    "run_benchmark",
    "solve_distributed",
    "solve_naive",
]
