"""Pseudo-Boolean problems: multilinear polynomials over {0,1} variables,
constraints, the text/JSON problem formats, and the penalty-method rewrite
(slack variables for inequalities, squared-penalty aggregation).

Variables are positive integer indices assigned densely in first-appearance
order by the parser; `variable_names` keeps the original tokens for display.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class ProblemSyntaxError(ValueError):
    """Problem-text parse failure with a line/column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class ProblemFormatError(ValueError):
    """Structurally invalid problem (bad sense, non-integer constraint, ...)."""


def _as_value(assignment, index: int) -> int:
    # dict keyed by variable index, or a sequence read 1-based
    if isinstance(assignment, Mapping):
        if index not in assignment:
            raise KeyError(f"assignment missing variable {index}")
        v = assignment[index]
    else:
        if index - 1 >= len(assignment):
            raise KeyError(f"assignment missing variable {index}")
        v = assignment[index - 1]
    v = int(v)
    if v not in (0, 1):
        raise ValueError(f"variable {index} must be 0 or 1, got {v}")
    return v


class MultilinearPolynomial:
    """Multilinear polynomial: sum of coeff * prod(x_i) terms.

    Terms are keyed by sorted tuples of variable indices; the empty tuple is
    the constant term. Zero coefficients are never stored. Powers collapse
    (x^k == x on Booleans), so keys never repeat a variable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Iterable[int], float] | None = None):
        self.terms: dict[tuple[int, ...], float] = {}
        if terms:
            for vars_, coeff in terms.items():
                self.add_term(vars_, coeff)

    def add_term(self, vars_: Iterable[int], coeff: float) -> None:
        key = tuple(sorted(set(int(v) for v in vars_)))
        if any(v <= 0 for v in key):
            raise ValueError("variable indices must be positive")
        new = self.terms.get(key, 0.0) + coeff
        if new == 0.0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def copy(self) -> "MultilinearPolynomial":
        p = MultilinearPolynomial()
        p.terms = dict(self.terms)
        return p

    def variables(self) -> list[int]:
        seen: set[int] = set()
        for key in self.terms:
            seen.update(key)
        return sorted(seen)

    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def constant(self) -> float:
        return self.terms.get((), 0.0)

    def coefficient(self, vars_: Iterable[int]) -> float:
        return self.terms.get(tuple(sorted(set(vars_))), 0.0)

    def coeff_abs_sum(self) -> float:
        return sum(abs(c) for k, c in self.terms.items() if k != ())

    def evaluate(self, assignment) -> float:
        total = 0.0
        for key, coeff in self.terms.items():
            prod = 1
            for v in key:
                prod *= _as_value(assignment, v)
                if prod == 0:
                    break
            total += coeff * prod
        return total

    def scaled(self, factor: float) -> "MultilinearPolynomial":
        p = MultilinearPolynomial()
        if factor != 0.0:
            p.terms = {k: c * factor for k, c in self.terms.items()}
        return p

    def __add__(self, other: "MultilinearPolynomial") -> "MultilinearPolynomial":
        p = self.copy()
        for k, c in other.terms.items():
            p.add_term(k, c)
        return p

    def __mul__(self, other: "MultilinearPolynomial") -> "MultilinearPolynomial":
        # product of multilinear polynomials, re-canonicalized with x^2 = x
        p = MultilinearPolynomial()
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                p.add_term(set(ka) | set(kb), ca * cb)
        return p

    def __eq__(self, other) -> bool:
        return isinstance(other, MultilinearPolynomial) and self.terms == other.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "MultilinearPolynomial(0)"
        bits = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[key]
            mono = "*".join(f"x{v}" for v in key) if key else "1"
            bits.append(f"{c:+g} {mono}")
        return f"MultilinearPolynomial({' '.join(bits)})"


@dataclass
class Constraint:
    """Normalized constraint: poly == 0 ('eq') or poly <= 0 ('leq')."""

    poly: MultilinearPolynomial
    kind: str  # "eq" | "leq"

    def __post_init__(self):
        if self.kind not in ("eq", "leq"):
            raise ProblemFormatError(f"unknown constraint kind {self.kind!r}")

    def satisfied(self, assignment, tol: float = 1e-9) -> bool:
        v = self.poly.evaluate(assignment)
        return abs(v) <= tol if self.kind == "eq" else v <= tol


@dataclass
class ConstrainedProblem:
    objective: MultilinearPolynomial
    sense: str  # "min" | "max"
    constraints: list[Constraint] = field(default_factory=list)
    variable_names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ProblemFormatError(f"sense must be 'min' or 'max', got {self.sense!r}")

    def num_vars(self) -> int:
        top = 0
        for poly in [self.objective] + [c.poly for c in self.constraints]:
            vs = poly.variables()
            if vs:
                top = max(top, vs[-1])
        return max(top, max(self.variable_names, default=0))

    def name_of(self, index: int) -> str:
        return self.variable_names.get(index, f"x{index}")


@dataclass
class ReductionConfig:
    """Knobs for the reduction pipeline.

    mu: penalty weight; None selects 1 + sum|objective coefficients|.
    lam: quadratization gadget weight; None recomputes 1 + sum|coefficients|
         of the current polynomial before each substitution.
    slack_bits: override for the slack register width (None = cover [0, R]).
    q_cap: qubit budget carried through to the solver stages.
    """

    mu: float | None = None
    lam: float | None = None
    slack_bits: int | None = None
    q_cap: int = 10

    def __post_init__(self):
        if self.mu is not None and self.mu <= 0:
            raise ProblemFormatError("mu must be positive")
        if self.lam is not None and self.lam <= 0:
            raise ProblemFormatError("lam must be positive")
        if self.slack_bits is not None and self.slack_bits < 0:
            raise ProblemFormatError("slack_bits must be >= 0")
        if self.q_cap < 1:
            raise ProblemFormatError("q_cap must be >= 1")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|[*+\-:^])|(?P<bad>\S))"
)


def _tokenize(text: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            break
        col = m.start(m.lastgroup) + 1
        if m.lastgroup == "bad":
            raise ProblemSyntaxError(f"unexpected character {m.group('bad')!r}", lineno, col)
        tokens.append((m.lastgroup, m.group(m.lastgroup), col))
        pos = m.end()
    return tokens


class _ExprParser:
    """Recursive-descent reader for signed term lists."""

    def __init__(self, tokens, lineno, names: dict[str, int], name_order: list[str]):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno
        self.names = names
        self.name_order = name_order

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, expected: str):
        tok = self.peek()
        col = tok[2] if tok else (self.tokens[-1][2] + len(self.tokens[-1][1]) if self.tokens else 1)
        found = repr(tok[1]) if tok else "end of line"
        raise ProblemSyntaxError(f"expected {expected}, found {found}", self.lineno, col)

    def var_index(self, name: str) -> int:
        if name not in self.names:
            self.names[name] = len(self.names) + 1
            self.name_order.append(name)
        return self.names[name]

    def parse_expr(self, stop_ops=()) -> MultilinearPolynomial:
        poly = MultilinearPolynomial()
        first = True
        while True:
            tok = self.peek()
            if tok is None or (tok[0] == "op" and tok[1] in stop_ops):
                if first:
                    self.error("a term")
                return poly
            sign = 1.0
            if tok[0] == "op" and tok[1] in "+-":
                sign = -1.0 if tok[1] == "-" else 1.0
                self.i += 1
            elif not first:
                self.error("'+' or '-'")
            coeff, vars_ = self.parse_term()
            poly.add_term(vars_, sign * coeff)
            first = False

    def parse_term(self) -> tuple[float, list[int]]:
        tok = self.peek()
        if tok is None:
            self.error("a coefficient or variable")
        coeff = 1.0
        vars_: list[int] = []
        if tok[0] == "num":
            coeff = float(tok[1])
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "*":
                self.i += 1
                nxt = self.peek()
                if nxt is None or nxt[0] != "ident":
                    self.error("a variable after '*'")
            tok = self.peek()
            if tok is None or tok[0] != "ident":
                return coeff, vars_  # bare constant
        while True:
            tok = self.peek()
            if tok is None or tok[0] != "ident":
                break
            vars_.append(self.var_index(tok[1]))
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "^":
                raise ProblemSyntaxError(
                    "exponent notation is not allowed: multilinear only", self.lineno, nxt[2]
                )
            if nxt is not None and nxt[0] == "op" and nxt[1] == "*":
                self.i += 1
                nxt = self.peek()
                if nxt is None or nxt[0] != "ident":
                    self.error("a variable after '*'")
                continue
            break
        if not vars_ and coeff == 1.0 and tok is not None:
            self.error("a coefficient or variable")
        return coeff, vars_


def parse_problem(text: str) -> ConstrainedProblem:
    """Parse the problem text format.

    First non-comment line must be 'min: <expr>' or 'max: <expr>'; each later
    line is '<expr> <= <int>' or '<expr> == <int>' ('>=' is normalized by
    negation). '#' starts a comment; blank lines are skipped.
    """
    names: dict[str, int] = {}
    name_order: list[str] = []
    objective: MultilinearPolynomial | None = None
    sense = "min"
    constraints: list[Constraint] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        if (
            tokens[0][0] == "ident"
            and tokens[0][1] in ("min", "max")
            and len(tokens) > 1
            and tokens[1][0] == "op"
            and tokens[1][1] == ":"
        ):
            if objective is not None:
                raise ProblemSyntaxError("duplicate objective line", lineno, tokens[0][2])
            sense = tokens[0][1]
            parser = _ExprParser(tokens[2:], lineno, names, name_order)
            objective = parser.parse_expr()
            if parser.peek() is not None:
                parser.error("end of line")
            continue
        if objective is None:
            raise ProblemSyntaxError("expected 'min:' or 'max:' objective first", lineno, tokens[0][2])
        parser = _ExprParser(tokens, lineno, names, name_order)
        lhs = parser.parse_expr(stop_ops=("<=", ">=", "=="))
        op = parser.peek()
        if op is None or op[0] != "op" or op[1] not in ("<=", ">=", "=="):
            parser.error("'<=', '>=' or '=='")
        parser.i += 1
        rhs_tok = parser.peek()
        rhs_sign = 1.0
        if rhs_tok is not None and rhs_tok[0] == "op" and rhs_tok[1] in "+-":
            rhs_sign = -1.0 if rhs_tok[1] == "-" else 1.0
            parser.i += 1
            rhs_tok = parser.peek()
        if rhs_tok is None or rhs_tok[0] != "num":
            parser.error("an integer right-hand side")
        rhs = rhs_sign * float(rhs_tok[1])
        if rhs != int(rhs):
            raise ProblemSyntaxError("right-hand side must be an integer", lineno, rhs_tok[2])
        parser.i += 1
        if parser.peek() is not None:
            parser.error("end of line")
        poly = lhs.copy()
        poly.add_term((), -rhs)
        if op[1] == ">=":
            poly = poly.scaled(-1.0)  # -expr <= -rhs
        kind = "eq" if op[1] == "==" else "leq"
        constraints.append(Constraint(poly, kind))

    if objective is None:
        raise ProblemSyntaxError("no objective line found", 1, 1)
    variable_names = {idx: name for name, idx in names.items()}
    return ConstrainedProblem(objective, sense, constraints, variable_names)


# ---------------------------------------------------------------------------
# JSON mirror

def problem_to_json(problem: ConstrainedProblem) -> dict:
    def poly_terms(poly: MultilinearPolynomial) -> list[dict]:
        out = []
        for key in sorted(poly.terms, key=lambda k: (len(k), k)):
            out.append({"vars": list(key), "coeff": poly.terms[key]})
        return out

    return {
        "sense": problem.sense,
        "terms": poly_terms(problem.objective),
        "constraints": [
            {"terms": poly_terms(c.poly), "kind": c.kind, "rhs": 0}
            for c in problem.constraints
        ],
        "variable_names": {str(i): n for i, n in sorted(problem.variable_names.items())},
    }


def problem_from_json(data: dict | str) -> ConstrainedProblem:
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise ProblemFormatError("problem JSON must be an object")

    def read_poly(terms) -> MultilinearPolynomial:
        poly = MultilinearPolynomial()
        for t in terms:
            poly.add_term(t.get("vars", []), float(t["coeff"]))
        return poly

    sense = data.get("sense", "min")
    objective = read_poly(data.get("terms", []))
    constraints = []
    for c in data.get("constraints", []):
        kind = c.get("kind", "leq")
        poly = read_poly(c.get("terms", []))
        rhs = float(c.get("rhs", 0))
        if rhs != int(rhs):
            raise ProblemFormatError("constraint rhs must be an integer")
        if rhs:
            poly.add_term((), -rhs)
        constraints.append(Constraint(poly, kind))
    names = {int(i): str(n) for i, n in data.get("variable_names", {}).items()}
    return ConstrainedProblem(objective, sense, constraints, names)


# ---------------------------------------------------------------------------
# pipeline-facing operations

def evaluate(poly: MultilinearPolynomial, assignment) -> float:
    """Objective value of `poly` at a Boolean assignment (dict or 1-based seq)."""
    return poly.evaluate(assignment)


def to_minimization(problem: ConstrainedProblem) -> tuple[ConstrainedProblem, bool]:
    """Return an equivalent 'min' problem and whether the sense was flipped."""
    if problem.sense == "min":
        return problem, False
    flipped = ConstrainedProblem(
        problem.objective.scaled(-1.0),
        "min",
        [Constraint(c.poly.copy(), c.kind) for c in problem.constraints],
        dict(problem.variable_names),
    )
    return flipped, True


def _poly_min_over_cube(poly: MultilinearPolynomial, enum_cap: int = 16) -> float:
    """Exact minimum over the cube when few variables, else a safe lower bound."""
    vs = poly.variables()
    if len(vs) <= enum_cap:
        best = math.inf
        for mask in range(1 << len(vs)):
            assignment = {v: (mask >> k) & 1 for k, v in enumerate(vs)}
            best = min(best, poly.evaluate(assignment))
        return best
    # termwise bound: each monomial contributes min(coeff, 0), constant exactly
    return poly.constant() + sum(min(c, 0.0) for k, c in poly.terms.items() if k != ())


def slack_range(constraint: Constraint) -> int:
    """R = max of -g over the cube (clamped at 0): the slack values needed."""
    if constraint.kind != "leq":
        raise ProblemFormatError("slack_range applies to leq constraints")
    for key, c in constraint.poly.terms.items():
        if c != int(c):
            raise ProblemFormatError("constraint coefficients must be integers")
    low = _poly_min_over_cube(constraint.poly)
    r = int(round(-low))
    return max(r, 0)


def add_slack(
    constraint: Constraint,
    next_index: int,
    bits_override: int | None = None,
) -> tuple[Constraint, list[int]]:
    """Rewrite g <= 0 as g + sum 2^b s_b == 0 with binary-weighted slack bits.

    Default bit count ceil(log2(R+1)) covers every slack value in [0, R];
    an override reproduces narrower registers. If the constraint can never
    hold (min g > 0) this raises, since no slack can repair it.
    """
    r = slack_range(constraint)
    lowest = _poly_min_over_cube(constraint.poly)
    if lowest > 0:
        raise ProblemFormatError("constraint is infeasible: min over cube exceeds 0")
    bits = bits_override if bits_override is not None else (r.bit_length() if r > 0 else 0)
    poly = constraint.poly.copy()
    indices = []
    for b in range(bits):
        idx = next_index + b
        poly.add_term((idx,), float(1 << b))
        indices.append(idx)
    return Constraint(poly, "eq"), indices


def attach_slacks(
    problem: ConstrainedProblem, config: ReductionConfig
) -> tuple[ConstrainedProblem, list[list[int]]]:
    """Convert every leq constraint to an equality with fresh slack variables."""
    next_index = problem.num_vars() + 1
    new_constraints: list[Constraint] = []
    slack_groups: list[list[int]] = []
    names = dict(problem.variable_names)
    for ci, c in enumerate(problem.constraints):
        if c.kind == "eq":
            new_constraints.append(Constraint(c.poly.copy(), "eq"))
            slack_groups.append([])
            continue
        eq, indices = add_slack(c, next_index, config.slack_bits)
        for b, idx in enumerate(indices):
            name = f"s{ci + 1}_{b}"
            while name in names.values():
                name += "_"
            names[idx] = name
        next_index += len(indices)
        new_constraints.append(eq)
        slack_groups.append(indices)
    return (
        ConstrainedProblem(problem.objective.copy(), problem.sense, new_constraints, names),
        slack_groups,
    )


def auto_mu(objective: MultilinearPolynomial) -> float:
    return 1.0 + sum(abs(c) for k, c in objective.terms.items() if k != ())


def penalize(
    problem: ConstrainedProblem, config: ReductionConfig | None = None
) -> tuple[MultilinearPolynomial, float]:
    """f = objective + mu * sum of squared equality polynomials.

    Requires a 'min' problem whose constraints are all equalities (run
    to_minimization and attach_slacks first). Returns the multilinear result
    with its constant split out as an offset.
    """
    config = config or ReductionConfig()
    if problem.sense != "min":
        raise ProblemFormatError("penalize expects a minimization problem")
    for c in problem.constraints:
        if c.kind != "eq":
            raise ProblemFormatError("penalize expects equality constraints only")
    mu = config.mu if config.mu is not None else auto_mu(problem.objective)
    total = problem.objective.copy()
    for c in problem.constraints:
        total = total + (c.poly * c.poly).scaled(mu)
    offset = total.constant()
    if offset:
        total.add_term((), -offset)
    return total, offset
