"""HTTP facade over the reduction, solver, generator, and benchmark layers.

Every endpoint is a thin adapter: parse the payload, call the library,
shape the result.  Domain validation failures surface as 400s with the
original message; everything else is a plain FastAPI app suitable for
uvicorn or an in-process ASGI transport.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from importlib import metadata

from fastapi import FastAPI, HTTPException

from ..bench import BenchSpec, gen_er, gen_regular, run_benchmark
from ..distributed import approximation_ratio, solve_distributed
from ..ising import IsingFormatError, brute_force_min, model_from_text, model_to_text
from ..pbf import (
    ProblemFormatError,
    ProblemSyntaxError,
    ReductionConfig,
    parse_problem,
)
from ..reduction import reconstruct, reduce_full
from . import schemas

ORACLE_CAP = 26

_INPUT_ERRORS = (ProblemSyntaxError, ProblemFormatError, IsingFormatError, ValueError)


def _version() -> str:
    try:
        return metadata.version("dqaoa")
    except metadata.PackageNotFoundError:
        return "0.0.0"


@contextmanager
def _input_errors():
    try:
        yield
    except _INPUT_ERRORS as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="dqaoa service", version=_version())

    @app.get("/health", response_model=schemas.Health)
    def health() -> schemas.Health:
        return schemas.Health(status="ok", version=_version())

    @app.post("/reduce", response_model=schemas.ReduceResponse)
    def reduce(req: schemas.ReduceRequest) -> schemas.ReduceResponse:
        with _input_errors():
            problem = parse_problem(req.problem)
            config = ReductionConfig(mu=req.mu, lam=req.lam, slack_bits=req.slack_bits)
            model, trace = reduce_full(problem, config)
        return schemas.ReduceResponse(
            n_spins=model.n,
            n_original=trace.original_var_count,
            mu=trace.mu,
            offset=model.offset,
            labels=[model.label(i) for i in range(model.n)],
            linear=[
                schemas.LinearTerm(i=model.label(i), weight=w)
                for i, w in sorted(model.linear.items())
            ],
            couplings=[
                schemas.Coupling(i=model.label(i), j=model.label(j), weight=w)
                for (i, j), w in sorted(model.quadratic.items())
            ],
            graph=model_to_text(model),
        )

    @app.post("/solve", response_model=schemas.SolveResponse)
    def solve(req: schemas.SolveRequest) -> schemas.SolveResponse:
        with _input_errors():
            if req.problem is not None:
                problem = parse_problem(req.problem)
                config = ReductionConfig(
                    mu=req.mu, lam=req.lam, slack_bits=req.slack_bits, q_cap=req.q_cap
                )
                model, trace = reduce_full(problem, config)
            else:
                problem, trace = None, None
                model = model_from_text(req.graph)
            t0 = time.perf_counter()
            result = solve_distributed(
                model,
                q_cap=req.q_cap,
                method=req.partition,
                seed=req.seed,
                qaoa=req.qaoa.to_config(),
            )
            runtime_ms = (time.perf_counter() - t0) * 1000.0

        # the energy-range ratio is anchored at 0, which is only meaningful
        # for graph inputs; exhaustive reference caps at ORACLE_CAP spins
        r = None
        if trace is None and model.n <= ORACLE_CAP:
            _, vmin = brute_force_min(model)
            if vmin < 0.0:
                r = approximation_ratio(0.0, vmin, result.value)
            elif result.value == vmin:
                r = 1.0

        extras: dict = {}
        if trace is not None:
            rec = reconstruct(trace, result.z)
            extras = {
                "objective": rec.objective,
                "bitstring": rec.bitstring(problem),
                "assignment": {
                    problem.name_of(i): v for i, v in sorted(rec.assignment.items())
                },
                "feasible": rec.feasible,
                "violations": rec.violations,
            }

        return schemas.SolveResponse(
            kind="problem" if trace is not None else "graph",
            n=model.n,
            global_value=result.value,
            r=r,
            tree_height=result.tree_height,
            per_level=list(result.level_values),
            baseline_value=result.naive_value if req.baseline == "naive" else None,
            used_naive=result.used_naive,
            modularity=result.modularity,
            communities=[list(c) for c in result.partition.communities],
            z=[int(v) for v in result.z],
            runtime_ms=runtime_ms,
            **extras,
        )

    @app.post("/oracle", response_model=schemas.OracleResponse)
    def oracle(req: schemas.OracleRequest) -> schemas.OracleResponse:
        with _input_errors():
            model = model_from_text(req.graph)
            if model.n > ORACLE_CAP:
                raise ValueError(f"brute force is capped at {ORACLE_CAP} spins")
            z, value = brute_force_min(model)
        return schemas.OracleResponse(value=value, z=[int(v) for v in z], n=model.n)

    @app.post("/gen", response_model=schemas.GenResponse)
    def gen(req: schemas.GenRequest) -> schemas.GenResponse:
        with _input_errors():
            if req.kind == "regular":
                if req.d is None:
                    raise ValueError("regular graphs require 'd'")
                model = gen_regular(req.n, req.d, req.weighted, req.weight_range, req.seed)
            else:
                if req.avg_degree is None:
                    raise ValueError("er graphs require 'avg_degree'")
                model = gen_er(req.n, req.avg_degree, req.weighted, req.weight_range, req.seed)
        return schemas.GenResponse(
            graph=model_to_text(model), n=model.n, edges=len(model.quadratic)
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
        with _input_errors():
            data = req.spec if isinstance(req.spec, list) else [req.spec]
            specs = [BenchSpec.from_dict(d) for d in data]
            result = run_benchmark(specs)
        return schemas.BenchResponse(
            rows=[row.as_dict() for row in result.rows],
            summary=result.summary,
            csv=result.to_csv(),
        )

    return app
