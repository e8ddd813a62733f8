"""Reduction pipeline from constrained pseudo-Boolean problems to Ising models.

Stages, in order: flip max to min, widen inequalities with binary slack bits,
fold equalities into a squared penalty, fix variables that occur in a single
term, quadratize with penalty gadgets, map Booleans to spins, and peel chain
spins (quadratic degree <= 1) with delayed decision rules. Every stage logs a
replayable step so `reconstruct` can map a ground state of the final model
back to the original variables and re-evaluate the original objective.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .ising import IsingModel
from .pbf import (
    ConstrainedProblem,
    MultilinearPolynomial,
    ReductionConfig,
    attach_slacks,
    auto_mu,
    penalize,
    to_minimization,
)


@dataclass
class FixedBoolean:
    index: int
    value: int  # 0 or 1
    coeff: float  # coefficient of the single term that decided the fix


@dataclass
class AuxDefinition:
    aux_index: int
    i: int
    j: int
    lam: float


@dataclass
class IsingMapMarker:
    var_to_spin: dict[int, int]


@dataclass
class ChainRule:
    spin: int
    neighbor: int | None
    quad_coeff: float
    linear_coeff: float


@dataclass
class Renaming:
    mapping: dict[int, int]  # old spin -> new dense spin


@dataclass
class ReductionTrace:
    problem: ConstrainedProblem
    sense_flip: bool = False
    mu: float = 0.0
    slack_groups: list[list[int]] = field(default_factory=list)
    steps: list = field(default_factory=list)
    original_var_count: int = 0
    final_var_count: int = 0
    offset: float = 0.0  # constant carried by the final model


@dataclass
class ReconstructionResult:
    assignment: dict[int, int]  # original problem variables only
    objective: float  # original objective at `assignment`, original sense
    feasible: bool
    violations: list[str] = field(default_factory=list)
    full_assignment: dict[int, int] = field(default_factory=dict)

    def bitstring(self, problem: ConstrainedProblem) -> str:
        order = sorted(self.assignment, key=lambda i: _natural_key(problem.name_of(i)))
        return "".join(str(self.assignment[i]) for i in order)


def _natural_key(name: str):
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name))


# ---------------------------------------------------------------------------
# stage: uncoupled-variable elimination

def eliminate_uncoupled(
    poly: MultilinearPolynomial,
) -> tuple[MultilinearPolynomial, list[FixedBoolean]]:
    """Fix every variable that appears in exactly one term: to 0 when that
    term's coefficient is positive, to 1 when negative. Fixing can merge
    terms and expose new single-occurrence variables, so sweeps repeat until
    none remain (running the stage twice changes nothing)."""
    poly = poly.copy()
    steps: list[FixedBoolean] = []
    while True:
        occurrence: dict[int, list[tuple[int, ...]]] = {}
        for key in poly.terms:
            for v in key:
                occurrence.setdefault(v, []).append(key)
        singles = sorted(v for v, keys in occurrence.items() if len(keys) == 1)
        if not singles:
            return poly, steps
        decided = {v: (0 if poly.terms[occurrence[v][0]] > 0 else 1) for v in singles}
        for v in singles:
            coeff = poly.terms.get(occurrence[v][0], 0.0)
            steps.append(FixedBoolean(v, decided[v], coeff))
            poly = _substitute_value(poly, v, decided[v])


def _substitute_value(poly: MultilinearPolynomial, var: int, value: int) -> MultilinearPolynomial:
    out = MultilinearPolynomial()
    for key, coeff in poly.terms.items():
        if var in key:
            if value == 0:
                continue
            out.add_term(tuple(v for v in key if v != var), coeff)
        else:
            out.add_term(key, coeff)
    return out


# ---------------------------------------------------------------------------
# stage: quadratization

def quadratize(
    poly: MultilinearPolynomial,
    config: ReductionConfig | None = None,
    next_index: int | None = None,
) -> tuple[MultilinearPolynomial, list[AuxDefinition]]:
    """Reduce to degree <= 2 by repeatedly substituting the variable pair that
    occurs in the most terms of degree >= 3 (ties toward the smallest pair)
    with a fresh auxiliary y, adding lam*(x_i x_j - 2 x_i y - 2 x_j y + 3 y)
    to pin y = x_i x_j at any minimum."""
    config = config or ReductionConfig()
    poly = poly.copy()
    steps: list[AuxDefinition] = []
    if next_index is None:
        vs = poly.variables()
        next_index = (vs[-1] + 1) if vs else 1
    while poly.degree() > 2:
        counts: dict[tuple[int, int], int] = {}
        for key in poly.terms:
            if len(key) < 3:
                continue
            for a in range(len(key)):
                for b in range(a + 1, len(key)):
                    pair = (key[a], key[b])
                    counts[pair] = counts.get(pair, 0) + 1
        best = min(counts, key=lambda p: (-counts[p], p))
        i, j = best
        lam = config.lam if config.lam is not None else (1.0 + sum(abs(c) for c in poly.terms.values()))
        y = next_index
        next_index += 1
        replaced = MultilinearPolynomial()
        for key, coeff in poly.terms.items():
            if len(key) >= 3 and i in key and j in key:
                replaced.add_term(tuple(v for v in key if v not in (i, j)) + (y,), coeff)
            else:
                replaced.add_term(key, coeff)
        replaced.add_term((i, j), lam)
        replaced.add_term((i, y), -2.0 * lam)
        replaced.add_term((j, y), -2.0 * lam)
        replaced.add_term((y,), 3.0 * lam)
        poly = replaced
        steps.append(AuxDefinition(y, i, j, lam))
    return poly, steps


# ---------------------------------------------------------------------------
# stage: Boolean -> spin map

def to_ising(
    poly: MultilinearPolynomial, variable_names: dict[int, str] | None = None
) -> tuple[IsingModel, IsingMapMarker]:
    """Map x = (1 - z)/2 termwise; requires degree <= 2. Spins are dense in
    ascending variable order; the marker records variable -> spin."""
    if poly.degree() > 2:
        raise ValueError("to_ising requires degree <= 2; quadratize first")
    vs = poly.variables()
    var_to_spin = {v: k for k, v in enumerate(vs)}
    model = IsingModel(len(vs))
    offset = 0.0
    for key, c in poly.terms.items():
        if len(key) == 0:
            offset += c
        elif len(key) == 1:
            s = var_to_spin[key[0]]
            offset += c / 2.0
            model.linear[s] = model.linear.get(s, 0.0) - c / 2.0
        else:
            si, sj = var_to_spin[key[0]], var_to_spin[key[1]]
            pair = (si, sj) if si < sj else (sj, si)
            offset += c / 4.0
            model.linear[si] = model.linear.get(si, 0.0) - c / 4.0
            model.linear[sj] = model.linear.get(sj, 0.0) - c / 4.0
            model.quadratic[pair] = model.quadratic.get(pair, 0.0) + c / 4.0
    model.offset = offset
    model.linear = {i: w for i, w in model.linear.items() if w != 0.0}
    model.quadratic = {k: w for k, w in model.quadratic.items() if w != 0.0}
    if variable_names:
        for v, s in var_to_spin.items():
            if v in variable_names:
                model.labels[s] = variable_names[v]
    return model, IsingMapMarker(var_to_spin)


# ---------------------------------------------------------------------------
# stage: chain elimination

def eliminate_chains(
    model: IsingModel,
) -> tuple[IsingModel, list[ChainRule], Renaming]:
    """Peel spins of quadratic degree <= 1, lowest index first, until none
    remain. A leaf j on neighbor i is decided later by
    z_j = -sign(w_ij z_i + w_j) with sign(0) -> +1. Removing j folds the
    exact envelope of its terms back into the model: constant
    -(|w_ij + w_j| + |w_ij - w_j|)/2 plus an induced linear
    (|w_ij - w_j| - |w_ij + w_j|)/2 on i, so the reduced minimum equals the
    original minimum. Survivors are renamed to dense indices."""
    work = model.copy()
    alive = set(range(work.n))
    rules: list[ChainRule] = []
    adjacency: dict[int, dict[int, float]] = {i: {} for i in alive}
    for (i, j), w in work.quadratic.items():
        adjacency[i][j] = w
        adjacency[j][i] = w
    linear = dict(work.linear)
    offset = work.offset
    while True:
        leaf = None
        for i in sorted(alive):
            if len(adjacency[i]) <= 1:
                leaf = i
                break
        if leaf is None:
            break
        wl = linear.pop(leaf, 0.0)
        if adjacency[leaf]:
            nb, wq = next(iter(adjacency[leaf].items()))
            del adjacency[nb][leaf]
            hi, lo = abs(wq + wl), abs(wq - wl)
            offset += -(hi + lo) / 2.0
            induced = (lo - hi) / 2.0
            if induced:
                linear[nb] = linear.get(nb, 0.0) + induced
                if linear[nb] == 0.0:
                    del linear[nb]
            rules.append(ChainRule(leaf, nb, wq, wl))
        else:
            offset += -abs(wl)
            rules.append(ChainRule(leaf, None, 0.0, wl))
        adjacency.pop(leaf)
        alive.discard(leaf)
    survivors = sorted(alive)
    mapping = {old: new for new, old in enumerate(survivors)}
    reduced = IsingModel(len(survivors))
    reduced.offset = offset
    reduced.linear = {mapping[i]: w for i, w in linear.items() if w != 0.0}
    for i in survivors:
        for j, w in adjacency[i].items():
            if i < j:
                reduced.quadratic[(mapping[i], mapping[j])] = w
    reduced.labels = {mapping[i]: model.label(i) for i in survivors}
    return reduced, rules, Renaming(mapping)


def replay_chain_rules(rules: list[ChainRule], values: dict[int, int]) -> dict[int, int]:
    """Fill peeled spins back in, in reverse elimination order."""
    values = dict(values)
    for rule in reversed(rules):
        arg = rule.linear_coeff
        if rule.neighbor is not None:
            arg += rule.quad_coeff * values[rule.neighbor]
        sign = 1 if arg >= 0 else -1  # sign(0) breaks to +1
        values[rule.spin] = -sign
    return values


# ---------------------------------------------------------------------------
# full pipeline

def reduce_full(
    problem: ConstrainedProblem, config: ReductionConfig | None = None
) -> tuple[IsingModel, ReductionTrace]:
    config = config or ReductionConfig()
    trace = ReductionTrace(problem=problem, original_var_count=problem.num_vars())

    minimized, trace.sense_flip = to_minimization(problem)
    slacked, trace.slack_groups = attach_slacks(minimized, config)
    trace.mu = config.mu if config.mu is not None else auto_mu(minimized.objective)
    cfg = ReductionConfig(mu=trace.mu, lam=config.lam, slack_bits=config.slack_bits, q_cap=config.q_cap)
    poly, penalty_offset = penalize(slacked, cfg)
    poly.add_term((), penalty_offset)

    poly, fixed_steps = eliminate_uncoupled(poly)
    trace.steps.extend(fixed_steps)

    names = dict(slacked.variable_names)
    next_index = max([slacked.num_vars()] + poly.variables()) + 1
    poly, aux_steps = quadratize(poly, cfg, next_index)
    for k, step in enumerate(aux_steps, start=1):
        name = f"y{k}"
        while name in names.values():
            name += "_"
        names[step.aux_index] = name
    trace.steps.extend(aux_steps)

    model, marker = to_ising(poly, names)
    trace.steps.append(marker)

    model, chain_rules, renaming = eliminate_chains(model)
    trace.steps.extend(chain_rules)
    trace.steps.append(renaming)

    trace.final_var_count = model.n
    trace.offset = model.offset
    return model, trace


def reconstruct(trace: ReductionTrace, final_values) -> ReconstructionResult:
    """Map a final-model spin assignment back to the original variables.

    Accepts a dense spin vector (length final_var_count) or a dict. Auxiliary
    variables are checked against their defining products and any mismatch is
    reported, never silently accepted. The objective is re-evaluated on the
    original problem in its original sense."""
    if isinstance(final_values, dict):
        spin_vals = {int(k): int(v) for k, v in final_values.items()}
    else:
        arr = np.asarray(final_values, dtype=int)
        if arr.shape != (trace.final_var_count,):
            raise ValueError(
                f"expected {trace.final_var_count} final spins, got shape {arr.shape}"
            )
        spin_vals = {i: int(arr[i]) for i in range(len(arr))}
    if any(v not in (-1, 1) for v in spin_vals.values()):
        raise ValueError("spins must be +1 or -1")

    bool_vals: dict[int, int] = {}
    violations: list[str] = []
    chain_buffer: list[ChainRule] = []

    def flush_chains():
        nonlocal spin_vals
        if chain_buffer:
            # the reversed step walk collected rules last-eliminated first;
            # replay_chain_rules expects elimination order
            chain_buffer.reverse()
            spin_vals = replay_chain_rules(chain_buffer, spin_vals)
            chain_buffer.clear()

    for step in reversed(trace.steps):
        if isinstance(step, Renaming):
            spin_vals = {old: spin_vals[new] for old, new in step.mapping.items()}
        elif isinstance(step, ChainRule):
            chain_buffer.append(step)
        elif isinstance(step, IsingMapMarker):
            flush_chains()
            for var, spin in step.var_to_spin.items():
                bool_vals[var] = (1 - spin_vals[spin]) // 2
        elif isinstance(step, AuxDefinition):
            y = bool_vals.pop(step.aux_index, None)
            prod = bool_vals.get(step.i, 0) * bool_vals.get(step.j, 0)
            if y is not None and y != prod:
                violations.append(
                    f"aux variable {step.aux_index} = {y} but "
                    f"x{step.i}*x{step.j} = {prod}"
                )
        elif isinstance(step, FixedBoolean):
            bool_vals[step.index] = step.value
        else:
            raise TypeError(f"unknown trace step {step!r}")
    flush_chains()

    slack_indices = {i for group in trace.slack_groups for i in group}
    original_vars = set(range(1, trace.original_var_count + 1))
    assignment = {v: bool_vals[v] for v in sorted(original_vars & set(bool_vals))}
    missing = original_vars - set(assignment)
    if missing:
        # variables absent from the objective and constraints default to 0
        for v in sorted(missing):
            assignment[v] = 0
    objective = trace.problem.objective.evaluate(assignment)
    feasible = all(c.satisfied(assignment) for c in trace.problem.constraints)
    full = {v: val for v, val in sorted(bool_vals.items())}
    for idx in sorted(slack_indices):
        full.setdefault(idx, 0)
    return ReconstructionResult(
        assignment=assignment,
        objective=float(objective),
        feasible=feasible,
        violations=violations,
        full_assignment=full,
    )
