"""Samplesets and the classical reference samplers.

Two samplers produce :class:`Sampleset` objects directly comparable with the
device emulator's output:

* :func:`gibbs_sample` -- sequential-scan single-site Gibbs (heat bath) MCMC.
  Sequential and random-site scans share the same stationary law; the
  sequential scan is used for reproducibility.
* :func:`exact_sample` -- i.i.d. inverse-CDF draws from an explicit table.

Sampleset text format::

    # total_reads=<int> fingerprint=<hex> num_spins=<int>
    +-+,-1.5,3
    ...

one row per ``state_string,energy,occurrences``; energies are written with
``repr`` so a write/read round trip is bit exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .ising import DistributionTable, IsingModel, codes_to_states, parse_spin_string, spin_string
from .rng import make_rng

__all__ = [
    "Sampleset",
    "SamplerConfig",
    "gibbs_sample",
    "run_gibbs_chain",
    "exact_sample",
    "save_sampleset",
    "load_sampleset",
    "format_sampleset",
    "parse_sampleset",
]

# uniforms generated per kernel call; bounds memory, not results
_CHUNK_DOUBLES = 1 << 20


@dataclass(frozen=True, eq=False)
class Sampleset:
    """Ordered rows of ``(state, energy, occurrences)``.

    Samplers emit one row per read in the order the reads were taken, which
    keeps read-to-read correlations visible; :meth:`aggregate` merges repeats.
    """

    states: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray
    model_fingerprint: str = ""

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int8)
        if states.ndim != 2:
            raise ValueError("states must be a 2-D array")
        energies = np.asarray(self.energies, dtype=float).reshape(-1)
        occ = np.asarray(self.occurrences, dtype=np.int64).reshape(-1)
        if not (states.shape[0] == energies.size == occ.size):
            raise ValueError("states, energies and occurrences must have equal length")
        if np.any(occ < 1):
            raise ValueError("occurrences must be positive")
        if states.size and not np.all((states == 1) | (states == -1)):
            raise ValueError("spin values must be +1 or -1")
        for arr in (states, energies, occ):
            arr.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "occurrences", occ)

    @classmethod
    def from_reads(cls, states, energies, model_fingerprint: str = "") -> "Sampleset":
        states = np.asarray(states, dtype=np.int8)
        return cls(states, energies, np.ones(states.shape[0], dtype=np.int64), model_fingerprint)

    @property
    def num_spins(self) -> int:
        return self.states.shape[1]

    @property
    def total_reads(self) -> int:
        return int(self.occurrences.sum())

    def __len__(self):
        return self.states.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Sampleset):
            return NotImplemented
        return (
            self.model_fingerprint == other.model_fingerprint
            and self.states.shape == other.states.shape
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.energies, other.energies, equal_nan=True)
            and np.array_equal(self.occurrences, other.occurrences)
        )

    def rows(self):
        for s, e, k in zip(self.states, self.energies, self.occurrences):
            yield s, float(e), int(k)

    def expanded_states(self) -> np.ndarray:
        """One row per read, repeating states by their occurrence counts."""
        return np.repeat(self.states, self.occurrences, axis=0)

    def aggregate(self) -> "Sampleset":
        """Merge identical states, keeping first-seen order and first energy."""
        if len(self) == 0:
            return self
        _, first, inverse = np.unique(self.states, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        counts = np.bincount(inverse, weights=self.occurrences).astype(np.int64)
        order = np.argsort(first, kind="stable")
        idx = first[order]
        return Sampleset(self.states[idx], self.energies[idx], counts[order], self.model_fingerprint)


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    num_reads: int = 1000
    sweeps_per_read: int = 10
    burn_in_sweeps: int = 1000

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_read < 1:
            raise ValueError("sweeps_per_read must be >= 1")
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")


def run_gibbs_chain(
    model: IsingModel,
    beta: float,
    num_reads: int,
    rng: np.random.Generator,
    sweeps_per_read: int = 10,
    burn_in_sweeps: int = 1000,
    backend=None,
) -> np.ndarray:
    """Run one Gibbs chain and return its ``(num_reads, N)`` recorded states.

    The chain starts from a uniformly random state drawn from ``rng`` and
    consumes one uniform per site update, in sweep order.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    k = kernels if backend is None else backend
    n = model.num_spins
    indptr, indices, weights = model.adjacency()
    h = np.ascontiguousarray(model.h, dtype=float)
    state = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
    out = np.empty((num_reads, n), dtype=np.int8)
    if num_reads == 0:
        return out

    sink = np.empty((0, n), dtype=np.int8)
    remaining = burn_in_sweeps
    sweeps_per_chunk = max(1, _CHUNK_DOUBLES // n)
    while remaining > 0:
        m = min(remaining, sweeps_per_chunk)
        k.gibbs_sweeps(state, h, indptr, indices, weights, float(beta), rng.random((m, n)), 0, sink)
        remaining -= m

    reads_per_chunk = max(1, _CHUNK_DOUBLES // (n * sweeps_per_read))
    done = 0
    while done < num_reads:
        m = min(num_reads - done, reads_per_chunk)
        u = rng.random((m * sweeps_per_read, n))
        written = k.gibbs_sweeps(
            state, h, indptr, indices, weights, float(beta), u, sweeps_per_read, out[done : done + m]
        )
        assert written == m
        done += m
    return out


def gibbs_sample(model: IsingModel, beta: float, config: SamplerConfig | None = None, backend=None) -> Sampleset:
    """Draw ``config.num_reads`` thinned reads from one seeded Gibbs chain.

    Identical seeds and configs give bit-identical samplesets.
    """
    config = SamplerConfig() if config is None else config
    rng = make_rng(config.seed)
    states = run_gibbs_chain(
        model, beta, config.num_reads, rng, config.sweeps_per_read, config.burn_in_sweeps, backend
    )
    return Sampleset.from_reads(states, model.energies(states), model.fingerprint())


def exact_sample(table: DistributionTable, num_reads: int, seed: int = 0) -> Sampleset:
    """I.i.d. inverse-CDF draws over the table's stored state order."""
    if len(table) == 0:
        raise ValueError("cannot sample from an empty table")
    if num_reads < 1:
        raise ValueError("num_reads must be >= 1")
    rng = make_rng(seed)
    cdf = np.cumsum(table.probs)
    u = rng.random(num_reads) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(table) - 1)
    states = codes_to_states(table.codes[idx], table.num_spins)
    if table.energies is not None:
        energies = table.energies[idx]
    else:
        energies = np.full(num_reads, np.nan)
    return Sampleset.from_reads(states, energies, table.fingerprint or "")


def format_sampleset(ss: Sampleset) -> str:
    lines = [f"# total_reads={ss.total_reads} fingerprint={ss.model_fingerprint or '-'} num_spins={ss.num_spins}"]
    for s, e, k in ss.rows():
        lines.append(f"{spin_string(s)},{e!r},{k}")
    return "\n".join(lines) + "\n"


def parse_sampleset(text: str) -> Sampleset:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("sampleset file must start with a '#' header line")
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    try:
        total = int(header["total_reads"])
        n = int(header["num_spins"])
        fp = header["fingerprint"]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad sampleset header: {lines[0]!r}") from exc
    fp = "" if fp == "-" else fp
    states, energies, occ = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected state,energy,occurrences")
        s = parse_spin_string(parts[0])
        if s.size != n:
            raise ValueError(f"line {lineno}: state has {s.size} spins, header says {n}")
        states.append(s)
        energies.append(float(parts[1]))
        occ.append(int(parts[2]))
    arr = np.array(states, dtype=np.int8).reshape(len(states), n)
    ss = Sampleset(arr, energies, np.array(occ, dtype=np.int64), fp)
    if ss.total_reads != total:
        raise ValueError(f"header total_reads={total} but rows sum to {ss.total_reads}")
    return ss


def save_sampleset(ss: Sampleset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_sampleset(ss))


def load_sampleset(path) -> Sampleset:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read sampleset {path}: {exc.strerror}") from exc
    try:
        return parse_sampleset(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
