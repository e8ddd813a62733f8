"""Ising models over spins z in {-1,+1}: energy, exhaustive minimization,
induced submodels with fixed boundaries, and the edge-list text format.

Energy convention: E(z) = sum_{i<j} w_ij z_i z_j + sum_k w_k z_k + offset.
Spin indices are dense 0..n-1; labels keep where each spin came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BRUTE_FORCE_CAP = 26


class IsingFormatError(ValueError):
    """Malformed graph text input."""


def _pair(i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise ValueError("self-coupling is not allowed")
    return (i, j) if i < j else (j, i)


@dataclass
class IsingModel:
    n: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    labels: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        lin = {}
        for i, w in self.linear.items():
            self._check_index(i)
            if w != 0.0:
                lin[int(i)] = float(w)
        quad = {}
        for (i, j), w in self.quadratic.items():
            self._check_index(i)
            self._check_index(j)
            if w != 0.0:
                quad[_pair(int(i), int(j))] = quad.get(_pair(int(i), int(j)), 0.0) + float(w)
        self.linear = lin
        self.quadratic = {k: w for k, w in quad.items() if w != 0.0}

    def _check_index(self, i) -> None:
        if not (0 <= int(i) < self.n):
            raise ValueError(f"spin index {i} out of range for n={self.n}")

    def label(self, i: int) -> str:
        return self.labels.get(i, f"z{i}")

    def degree(self, i: int) -> int:
        return sum(1 for (a, b) in self.quadratic if a == i or b == i)

    def neighbors(self, i: int) -> list[int]:
        out = []
        for (a, b) in self.quadratic:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def copy(self) -> "IsingModel":
        return IsingModel(self.n, dict(self.linear), dict(self.quadratic), self.offset, dict(self.labels))


def energy(model: IsingModel, z) -> float:
    z = np.asarray(z)
    if z.shape != (model.n,):
        raise ValueError(f"expected {model.n} spins, got shape {z.shape}")
    if not np.all(np.abs(z) == 1):
        raise ValueError("spins must be +1 or -1")
    total = model.offset
    for (i, j), w in model.quadratic.items():
        total += w * z[i] * z[j]
    for i, w in model.linear.items():
        total += w * z[i]
    return float(total)


def _energies_for_block(model: IsingModel, codes: np.ndarray) -> np.ndarray:
    """Energies for basis codes; bit k of a code is spin k, 0 -> z=+1."""
    total = np.full(codes.shape, model.offset, dtype=float)
    spin = {}

    def spins(i: int) -> np.ndarray:
        if i not in spin:
            spin[i] = 1.0 - 2.0 * ((codes >> i) & 1)
        return spin[i]

    for (i, j), w in model.quadratic.items():
        total += w * spins(i) * spins(j)
    for i, w in model.linear.items():
        total += w * spins(i)
    return total


def brute_force_min(model: IsingModel) -> tuple[np.ndarray, float]:
    """Exhaustive ground state; ties broken toward the lexicographically
    smallest spin vector with -1 ordered before +1."""
    if model.n > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force capped at {BRUTE_FORCE_CAP} spins, got {model.n}")
    if model.n == 0:
        return np.zeros(0, dtype=int), float(model.offset)
    best_val = np.inf
    best_code = None
    block = 1 << 20
    for start in range(0, 1 << model.n, block):
        codes = np.arange(start, min(start + block, 1 << model.n), dtype=np.int64)
        vals = _energies_for_block(model, codes)
        lo = float(vals.min())
        if lo < best_val - 1e-15 or best_code is None:
            best_val = lo
            best_code = None
        if lo <= best_val + 1e-15:
            # lexicographically smallest z has bit pattern maximal in
            # reversed-bit order (bit set means z=-1 which sorts first)
            ties = codes[np.nonzero(vals <= best_val + 1e-15)[0]]
            for code in ties:
                if best_code is None or _lex_key(int(code), model.n) < _lex_key(best_code, model.n):
                    best_code = int(code)
    z = np.array([1 - 2 * ((best_code >> k) & 1) for k in range(model.n)], dtype=int)
    return z, float(energy(model, z))


def _lex_key(code: int, n: int) -> tuple:
    # z_k = 1 - 2*bit_k; compare spin vectors entry by entry, -1 < +1
    return tuple(1 - 2 * ((code >> k) & 1) for k in range(n))


def all_energies(model: IsingModel) -> np.ndarray:
    """Dense energy table indexed by basis code (bit k = spin k, 0 -> +1)."""
    if model.n > BRUTE_FORCE_CAP:
        raise ValueError(f"energy table capped at {BRUTE_FORCE_CAP} spins")
    codes = np.arange(1 << model.n, dtype=np.int64)
    return _energies_for_block(model, codes)


@dataclass
class SubModel:
    """Induced model on an interior set with the exterior frozen.

    boundary_linear[i] collects sum over fixed exterior neighbors j of
    w_ij * z_j, so interior energies line up with the full model:
    SubModel energy + exterior-only energy == full energy.
    """

    model: IsingModel
    boundary_linear: dict[int, float]
    index_map: dict[int, int]  # global spin -> local spin

    def as_model(self) -> IsingModel:
        merged = self.model.copy()
        for i, w in self.boundary_linear.items():
            merged.linear[i] = merged.linear.get(i, 0.0) + w
            if merged.linear[i] == 0.0:
                del merged.linear[i]
        return merged

    def energy(self, z_local) -> float:
        return energy(self.as_model(), z_local)


def induced_submodel(
    model: IsingModel, interior: list[int], exterior_fix: dict[int, int] | None = None
) -> SubModel:
    """Restrict to `interior`; cross edges fold into boundary_linear using the
    fixed exterior values. A cross edge to an unfixed exterior spin errors."""
    exterior_fix = exterior_fix or {}
    interior_sorted = sorted(set(interior))
    for i in interior_sorted:
        model._check_index(i)
    inside = set(interior_sorted)
    if inside & set(exterior_fix):
        raise ValueError("exterior_fix overlaps the interior")
    index_map = {g: k for k, g in enumerate(interior_sorted)}
    sub = IsingModel(len(interior_sorted))
    boundary: dict[int, float] = {}
    for (i, j), w in model.quadratic.items():
        ii, jj = i in inside, j in inside
        if ii and jj:
            sub.quadratic[(index_map[i], index_map[j])] = w
        elif ii or jj:
            inner, outer = (i, j) if ii else (j, i)
            if outer not in exterior_fix:
                raise ValueError(f"cross edge ({i},{j}) reaches unfixed exterior spin {outer}")
            zv = int(exterior_fix[outer])
            if zv not in (-1, 1):
                raise ValueError("exterior fixes must be +1 or -1")
            li = index_map[inner]
            boundary[li] = boundary.get(li, 0.0) + w * zv
    for i, w in model.linear.items():
        if i in inside:
            sub.linear[index_map[i]] = w
    for g, l in index_map.items():
        sub.labels[l] = model.label(g)
    boundary = {i: w for i, w in boundary.items() if w != 0.0}
    return SubModel(sub, boundary, index_map)


# ---------------------------------------------------------------------------
# text format: "q i j w" couplings, "l i w" fields, "c offset", '#' comments

def model_to_text(model: IsingModel) -> str:
    lines = [f"# ising model: {model.n} spins"]
    for (i, j) in sorted(model.quadratic):
        lines.append(f"q {i} {j} {model.quadratic[(i, j)]:g}")
    for i in sorted(model.linear):
        lines.append(f"l {i} {model.linear[i]:g}")
    if model.offset:
        lines.append(f"c {model.offset:g}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> IsingModel:
    quadratic: dict[tuple[int, int], float] = {}
    linear: dict[int, float] = {}
    offset = 0.0
    top = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "q":
                if len(parts) != 4:
                    raise ValueError
                i, j, w = int(parts[1]), int(parts[2]), float(parts[3])
                if i < 0 or j < 0:
                    raise ValueError
                quadratic[_pair(i, j)] = quadratic.get(_pair(i, j), 0.0) + w
                top = max(top, i, j)
            elif kind == "l":
                if len(parts) != 3:
                    raise ValueError
                i, w = int(parts[1]), float(parts[2])
                if i < 0:
                    raise ValueError
                linear[i] = linear.get(i, 0.0) + w
                top = max(top, i)
            elif kind == "c":
                if len(parts) != 2:
                    raise ValueError
                offset += float(parts[1])
            else:
                raise ValueError
        except ValueError:
            raise IsingFormatError(f"line {lineno}: cannot parse {raw!r}") from None
    return IsingModel(top + 1, linear, quadratic, offset)
