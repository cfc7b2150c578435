"""Ising and QUBO problem types, energies, and exact Boltzmann tables.

States are arrays of +1/-1 spins. Whenever a state has to be used as a key
it is packed into an integer code: spin 0 is the most significant bit and a
set bit means +1. The same ordering is the computational-basis order used by
:func:`diagonal_energies`, so ``code == x`` read as a binary counter.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = [
    "IsingModel",
    "QuboModel",
    "DistributionTable",
    "EnumerationLimitError",
    "ENUMERATION_LIMIT",
    "DIAGONAL_LIMIT",
    "energy",
    "exact_distribution",
    "diagonal_energies",
    "qubo_ising_convert",
    "ising_to_qubo",
    "qubo_to_ising",
    "random_model",
    "all_states",
    "states_to_codes",
    "codes_to_states",
    "spin_string",
    "parse_spin_string",
    "load_problem",
    "save_problem",
    "problem_to_json",
    "problem_from_json",
]

ENUMERATION_LIMIT = 24
DIAGONAL_LIMIT = 12
MAX_CODE_SPINS = 62


class EnumerationLimitError(ValueError):
    """Raised when a brute-force enumeration would exceed its size guard."""


def _normalize_couplings(J, num_spins: int) -> dict[tuple[int, int], float]:
    if isinstance(J, np.ndarray):
        return _couplings_from_matrix(J, num_spins)
    if isinstance(J, Mapping):
        items = J.items()
    else:
        items = (((i, j), v) for i, j, v in J)

    out: dict[tuple[int, int], float] = {}
    for (i, j), v in items:
        i, j, v = int(i), int(j), float(v)
        if i == j:
            raise ValueError(f"self-coupling J[{i},{i}] is not allowed")
        if not (0 <= i < num_spins and 0 <= j < num_spins):
            raise ValueError(f"coupling ({i}, {j}) out of range for {num_spins} spins")
        if not math.isfinite(v):
            raise ValueError(f"coupling ({i}, {j}) is not finite")
        key = (i, j) if i < j else (j, i)
        if key in out:
            # symmetric input lists the same coupling twice
            if out[key] != v:
                raise ValueError(f"conflicting values for coupling {key}: {out[key]} vs {v}")
            continue
        out[key] = v
    return {k: out[k] for k in sorted(out) if out[k] != 0.0}


def _couplings_from_matrix(M: np.ndarray, num_spins: int) -> dict[tuple[int, int], float]:
    M = np.asarray(M, dtype=float)
    if M.shape != (num_spins, num_spins):
        raise ValueError(f"coupling matrix must be {num_spins}x{num_spins}, got {M.shape}")
    if np.any(np.diag(M) != 0):
        raise ValueError("coupling matrix must have a zero diagonal")
    if not np.all(np.isfinite(M)):
        raise ValueError("coupling matrix has non-finite entries")
    upper, lower = np.triu(M, 1), np.tril(M, -1)
    if np.array_equal(M, M.T) or not lower.any():
        U = upper
    elif not upper.any():
        U = lower.T
    else:
        raise ValueError("coupling matrix must be symmetric or triangular")
    rows, cols = np.nonzero(U)
    return {(int(i), int(j)): float(U[i, j]) for i, j in zip(rows, cols)}


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Ising energy ``sum_i h_i S_i + sum_{i<j} J_ij S_i S_j + offset``.

    ``J`` accepts a mapping ``(i, j) -> value``, an iterable of ``(i, j, value)``
    triples, or a dense matrix. Lower-triangular keys are flipped to ``i < j``
    and a symmetric matrix contributes each pair once. Zero couplings are
    dropped.
    """

    num_spins: int
    h: np.ndarray
    J: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.num_spins)
        if n < 1:
            raise ValueError("num_spins must be a positive integer")
        h = np.array(self.h, dtype=float).reshape(-1)
        if h.shape != (n,):
            raise ValueError(f"h must have {n} entries, got {h.size}")
        if not np.all(np.isfinite(h)):
            raise ValueError("h has non-finite entries")
        if not math.isfinite(float(self.offset)):
            raise ValueError("offset is not finite")
        h.setflags(write=False)
        object.__setattr__(self, "num_spins", n)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", _normalize_couplings(self.J, n))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def zeros(cls, num_spins: int) -> "IsingModel":
        return cls(num_spins, np.zeros(num_spins))

    def __eq__(self, other):
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (
            self.num_spins == other.num_spins
            and np.array_equal(self.h, other.h)
            and self.J == other.J
            and self.offset == other.offset
        )

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"IsingModel(num_spins={self.num_spins}, |J|={len(self.J)}, offset={self.offset})"

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(self.J)

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric matrix with ``J_ij`` in both triangles."""
        M = np.zeros((self.num_spins, self.num_spins))
        for (i, j), v in self.J.items():
            M[i, j] = M[j, i] = v
        return M

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR neighbour lists ``(indptr, indices, weights)`` of the coupling graph.

        Neighbours of each spin are listed in increasing index order.
        """
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.num_spins)]
        for (i, j), v in self.J.items():
            nbrs[i].append((j, v))
            nbrs[j].append((i, v))
        indptr = np.zeros(self.num_spins + 1, dtype=np.int64)
        indices, weights = [], []
        for i, lst in enumerate(nbrs):
            lst.sort()
            indices.extend(k for k, _ in lst)
            weights.extend(w for _, w in lst)
            indptr[i + 1] = len(indices)
        return indptr, np.asarray(indices, dtype=np.int64), np.asarray(weights, dtype=float)

    def energies(self, states) -> np.ndarray:
        """Vectorized energies for a ``(num_states, num_spins)`` array of spins."""
        S = np.asarray(states, dtype=float)
        if S.ndim != 2 or S.shape[1] != self.num_spins:
            raise ValueError(
                f"states must have shape (k, {self.num_spins}), got {np.shape(states)}"
            )
        E = S @ self.h
        if self.J:
            ij = np.array(list(self.J), dtype=np.int64)
            w = np.fromiter(self.J.values(), dtype=float, count=len(self.J))
            E = E + (S[:, ij[:, 0]] * S[:, ij[:, 1]]) @ w
        return E + self.offset

    def scaled(self, factor: float) -> "IsingModel":
        return IsingModel(
            self.num_spins,
            self.h * factor,
            {k: v * factor for k, v in self.J.items()},
            self.offset * factor,
        )

    def with_offset(self, offset: float) -> "IsingModel":
        return IsingModel(self.num_spins, self.h, self.J, offset)

    def max_abs_h(self) -> float:
        return float(np.max(np.abs(self.h))) if self.num_spins else 0.0

    def max_abs_J(self) -> float:
        return max((abs(v) for v in self.J.values()), default=0.0)

    def fingerprint(self) -> str:
        """Short content hash, stable across runs and platforms."""
        payload = problem_to_json(self).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class QuboModel:
    """QUBO energy ``sum_i a_i x_i + sum_{i<j} b_ij x_i x_j + offset`` over ``x in {0,1}``."""

    num_vars: int
    linear: np.ndarray
    quadratic: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.num_vars)
        if n < 1:
            raise ValueError("num_vars must be a positive integer")
        a = np.array(self.linear, dtype=float).reshape(-1)
        if a.shape != (n,) or not np.all(np.isfinite(a)):
            raise ValueError(f"linear must hold {n} finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "num_vars", n)
        object.__setattr__(self, "linear", a)
        object.__setattr__(self, "quadratic", _normalize_couplings(self.quadratic, n))
        object.__setattr__(self, "offset", float(self.offset))

    def energies(self, xs) -> np.ndarray:
        X = np.asarray(xs, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise ValueError(f"assignments must have shape (k, {self.num_vars})")
        E = X @ self.linear
        if self.quadratic:
            ij = np.array(list(self.quadratic), dtype=np.int64)
            w = np.fromiter(self.quadratic.values(), dtype=float, count=len(self.quadratic))
            E = E + (X[:, ij[:, 0]] * X[:, ij[:, 1]]) @ w
        return E + self.offset


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Rewrite an Ising model over ``x = (S + 1) / 2``."""
    a = 2.0 * np.array(model.h)
    b = {}
    offset = model.offset - float(np.sum(model.h))
    for (i, j), v in model.J.items():
        b[(i, j)] = 4.0 * v
        a[i] -= 2.0 * v
        a[j] -= 2.0 * v
        offset += v
    return QuboModel(model.num_spins, a, b, offset)


def qubo_to_ising(qubo: QuboModel) -> IsingModel:
    """Rewrite a QUBO over ``S = 2x - 1``."""
    h = 0.5 * np.array(qubo.linear)
    J = {}
    offset = qubo.offset + 0.5 * float(np.sum(qubo.linear))
    for (i, j), v in qubo.quadratic.items():
        J[(i, j)] = 0.25 * v
        h[i] += 0.25 * v
        h[j] += 0.25 * v
        offset += 0.25 * v
    return IsingModel(qubo.num_vars, h, J, offset)


def qubo_ising_convert(direction: str, model):
    """Convert between conventions; ``direction`` is ``"ising_to_qubo"`` or ``"qubo_to_ising"``."""
    if direction == "ising_to_qubo":
        if not isinstance(model, IsingModel):
            raise TypeError("ising_to_qubo expects an IsingModel")
        return ising_to_qubo(model)
    if direction == "qubo_to_ising":
        if not isinstance(model, QuboModel):
            raise TypeError("qubo_to_ising expects a QuboModel")
        return qubo_to_ising(model)
    raise ValueError(f"unknown direction {direction!r}")


def _as_spin_array(state, num_spins: int) -> np.ndarray:
    s = np.asarray(state)
    if s.ndim != 1 or s.shape[0] != num_spins:
        raise ValueError(f"state has length {s.size}, model has {num_spins} spins")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spin values must be +1 or -1")
    return s.astype(np.int8)


def energy(model: IsingModel, state) -> float:
    """Ising energy of a single state, offset included."""
    s = _as_spin_array(state, model.num_spins)
    return float(model.energies(s[None, :])[0])


def codes_to_states(codes, num_spins: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(num_spins - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def states_to_codes(states) -> np.ndarray:
    S = np.asarray(states)
    if S.ndim != 2:
        raise ValueError("states must be a 2-D array")
    n = S.shape[1]
    if n > MAX_CODE_SPINS:
        raise ValueError(f"integer state codes support at most {MAX_CODE_SPINS} spins, got {n}")
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return ((S > 0).astype(np.int64) * weights).sum(axis=1)


def all_states(num_spins: int) -> np.ndarray:
    """All ``2**num_spins`` states in basis order (spin 0 most significant)."""
    return codes_to_states(np.arange(2**num_spins, dtype=np.int64), num_spins)


def spin_string(state) -> str:
    return "".join("+" if s > 0 else "-" for s in state)


def parse_spin_string(text: str) -> np.ndarray:
    if not text or any(c not in "+-" for c in text):
        raise ValueError(f"invalid spin string {text!r}")
    return np.array([1 if c == "+" else -1 for c in text], dtype=np.int8)


def _enumerated_energies(model: IsingModel, chunk: int = 1 << 16) -> np.ndarray:
    n = model.num_spins
    total = 1 << n
    out = np.empty(total)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        out[start : start + codes.size] = model.energies(codes_to_states(codes, n))
    return out


def diagonal_energies(model: IsingModel) -> np.ndarray:
    """Diagonal of the problem Hamiltonian in the computational basis.

    Entry ``x`` (read as an ``N``-bit counter, spin 0 most significant) is the
    Ising energy of the state ``2x - 1``.
    """
    if model.num_spins > DIAGONAL_LIMIT:
        raise EnumerationLimitError(
            f"enumeration limit exceeded: {model.num_spins} > {DIAGONAL_LIMIT} spins"
        )
    return _enumerated_energies(model)


@dataclass(frozen=True, eq=False)
class DistributionTable:
    """Probability mass over explicitly listed states.

    States are stored as integer codes in a fixed order; ``probs`` sums to one.
    ``energies`` and ``log_z`` are kept when the table came from an energy
    model. ``beta`` is ``None`` for purely empirical tables.
    """

    num_spins: int
    codes: np.ndarray
    probs: np.ndarray
    beta: float | None = None
    log_z: float | None = None
    energies: np.ndarray | None = None
    fingerprint: str | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if codes.shape != probs.shape:
            raise ValueError("codes and probs must have equal length")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if codes.size and abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        if np.unique(codes).size != codes.size:
            raise ValueError("duplicate states in table")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be >= 0")
        codes.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "probs", probs)
        if self.energies is not None:
            e = np.asarray(self.energies, dtype=float).reshape(-1)
            if e.shape != codes.shape:
                raise ValueError("energies must align with codes")
            e.setflags(write=False)
            object.__setattr__(self, "energies", e)

    def __len__(self):
        return self.codes.size

    @property
    def partition_function(self) -> float | None:
        return None if self.log_z is None else math.exp(self.log_z)

    @property
    def states(self) -> np.ndarray:
        return codes_to_states(self.codes, self.num_spins)

    def prob(self, state) -> float:
        code = int(states_to_codes(np.asarray(state)[None, :])[0])
        hit = np.nonzero(self.codes == code)[0]
        return float(self.probs[hit[0]]) if hit.size else 0.0

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in s): float(p) for s, p in zip(self.states, self.probs)}


def boltzmann_probs(energies: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Normalized ``exp(-beta E)`` and ``log Z``, computed stably."""
    logw = -beta * np.asarray(energies, dtype=float)
    shift = float(np.max(logw))
    w = np.exp(logw - shift)
    total = float(w.sum())
    probs = w / total
    # renormalize once more so the sum is 1 to the last ulp or two
    probs = probs / probs.sum()
    return probs, shift + math.log(total)


def exact_distribution(model: IsingModel, beta: float = 1.0) -> DistributionTable:
    """Boltzmann law ``exp(-beta E) / Z`` over all ``2**N`` states by enumeration."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if model.num_spins > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"enumeration limit exceeded: {model.num_spins} > {ENUMERATION_LIMIT} spins"
        )
    E = _enumerated_energies(model)
    probs, log_z = boltzmann_probs(E, beta)
    return DistributionTable(
        model.num_spins,
        np.arange(E.size, dtype=np.int64),
        probs,
        beta=float(beta),
        log_z=log_z,
        energies=E,
        fingerprint=model.fingerprint(),
    )


def random_model(
    num_spins: int,
    density: float = 1.0,
    h_range: tuple[float, float] = (-1.0, 1.0),
    j_range: tuple[float, float] = (-1.0, 1.0),
    rng: np.random.Generator | None = None,
) -> IsingModel:
    """Random problem: uniform fields, each pair coupled with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must be in [0, 1]")
    if h_range[0] > h_range[1] or j_range[0] > j_range[1]:
        raise ValueError("ranges must satisfy lo <= hi")
    rng = np.random.default_rng() if rng is None else rng
    h = rng.uniform(h_range[0], h_range[1], size=num_spins)
    J = {}
    for i in range(num_spins):
        for j in range(i + 1, num_spins):
            keep = rng.random() < density
            value = rng.uniform(j_range[0], j_range[1])
            if keep and value != 0.0:
                J[(i, j)] = value
    return IsingModel(num_spins, h, J)


def problem_to_json(model: IsingModel) -> str:
    doc = {
        "num_spins": model.num_spins,
        "h": [float(v) for v in model.h],
        "J": [[i, j, v] for (i, j), v in model.J.items()],
        "offset": model.offset,
    }
    return json.dumps(doc, indent=1)


def problem_from_json(text: str) -> IsingModel:
    doc = json.loads(text)
    try:
        n = doc["num_spins"]
        h = doc["h"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"problem file missing field {exc}") from None
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError("num_spins must be an integer")
    if not isinstance(h, list) or len(h) != n:
        raise ValueError(f"h must be an array of {n} numbers")
    seen: set[tuple[int, int]] = set()
    J = {}
    for entry in doc.get("J", []):
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ValueError(f"J entries must be [i, j, value] triples, got {entry!r}")
        i, j, v = entry
        if not (isinstance(i, int) and isinstance(j, int)):
            raise ValueError(f"J indices must be integers, got {entry!r}")
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"J index out of range: {entry!r}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate coupling {key}")
        seen.add(key)
        J[key] = v
    return IsingModel(n, h, J, doc.get("offset", 0.0))


def load_problem(path) -> IsingModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read problem file {path}: {exc.strerror}") from exc
    try:
        return problem_from_json(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_problem(model: IsingModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(problem_to_json(model) + "\n")

