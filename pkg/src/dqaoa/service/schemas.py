"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from ..qaoa import QaoaConfig


class QaoaParams(BaseModel):
    p: int = Field(1, ge=1)
    iterations: int = Field(20, ge=1)
    restarts: int = Field(5, ge=0)
    shots: int = Field(1024, ge=1)
    decode: Literal["shots", "argmax"] = "shots"

    def to_config(self) -> QaoaConfig:
        return QaoaConfig(
            p=self.p,
            iterations=self.iterations,
            restarts=self.restarts,
            shots=self.shots,
            decode=self.decode,
        )


class ReduceRequest(BaseModel):
    problem: str
    mu: float | None = None
    lam: float | None = None
    slack_bits: int | None = Field(None, ge=0)


class LinearTerm(BaseModel):
    i: str
    weight: float


class Coupling(BaseModel):
    i: str
    j: str
    weight: float


class ReduceResponse(BaseModel):
    n_spins: int
    n_original: int
    mu: float
    offset: float
    labels: list[str]
    linear: list[LinearTerm]
    couplings: list[Coupling]
    graph: str


class SolveRequest(BaseModel):
    problem: str | None = None
    graph: str | None = None
    q_cap: int = Field(10, ge=1)
    partition: Literal["louvain", "random", "greedy"] = "louvain"
    baseline: Literal["naive", "none"] = "naive"
    seed: int = 0
    qaoa: QaoaParams = Field(default_factory=QaoaParams)
    mu: float | None = None
    lam: float | None = None
    slack_bits: int | None = Field(None, ge=0)

    @model_validator(mode="after")
    def _one_input(self):
        if (self.problem is None) == (self.graph is None):
            raise ValueError("provide exactly one of 'problem' or 'graph'")
        return self


class SolveResponse(BaseModel):
    kind: Literal["problem", "graph"]
    n: int
    global_value: float
    r: float | None
    tree_height: int
    per_level: list[float]
    baseline_value: float | None
    used_naive: bool
    modularity: float
    communities: list[list[int]]
    z: list[int]
    runtime_ms: float
    objective: float | None = None
    bitstring: str | None = None
    assignment: dict[str, int] | None = None
    feasible: bool | None = None
    violations: list[str] = []


class OracleRequest(BaseModel):
    graph: str


class OracleResponse(BaseModel):
    value: float
    z: list[int]
    n: int


class GenRequest(BaseModel):
    kind: Literal["regular", "er"]
    n: int = Field(..., ge=1)
    d: int | None = None
    avg_degree: float | None = None
    weighted: bool = False
    weight_range: tuple[int, int] = (1, 6)
    seed: int = 0


class GenResponse(BaseModel):
    graph: str
    n: int
    edges: int


class BenchRequest(BaseModel):
    spec: dict | list[dict]


class BenchResponse(BaseModel):
    rows: list[dict]
    summary: list[dict]
    csv: str


class Health(BaseModel):
    status: str
    version: str
