"""Distances, coverage, alpha retrofit and energy-based reconstruction."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ising import (
    MAX_CODE_SPINS,
    DistributionTable,
    IsingModel,
    boltzmann_probs,
    exact_distribution,
    parse_spin_string,
    spin_string,
    states_to_codes,
)
from .samplers import Sampleset

__all__ = [
    "SupportError",
    "CoverageReport",
    "RetrofitResult",
    "empirical_distribution",
    "energy_reconstruction",
    "energy_conflicts",
    "distribution_distance",
    "retrofit_alpha",
    "coverage_report",
    "format_report",
    "parse_report",
    "save_report",
    "load_report",
    "format_scan",
    "parse_scan",
    "save_scan",
    "load_scan",
    "format_table",
    "parse_table",
]

GRID_POINTS = 32
ALPHA_TOL = 1e-4
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class SupportError(ValueError):
    """KL divergence requested where p has mass outside the support of q."""


def _codes_and_weights(ss: Sampleset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct codes (ascending), their total occurrences and inverse index."""
    if len(ss) == 0:
        raise ValueError("empty sampleset")
    if ss.num_spins > MAX_CODE_SPINS:
        raise ValueError(f"tables support at most {MAX_CODE_SPINS} spins")
    codes = states_to_codes(ss.states)
    uniq, inverse = np.unique(codes, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse, weights=ss.occurrences, minlength=uniq.size)
    return uniq, counts, inverse


def empirical_distribution(ss: Sampleset) -> DistributionTable:
    """Population estimate: occurrences / total reads over observed states."""
    codes, counts, _ = _codes_and_weights(ss)
    probs = counts / counts.sum()
    return DistributionTable(ss.num_spins, codes, probs / probs.sum(), fingerprint=ss.model_fingerprint or None)


def _mean_energies(ss: Sampleset):
    codes, counts, inverse = _codes_and_weights(ss)
    if np.any(np.isnan(ss.energies)):
        raise ValueError("sampleset rows lack energies")
    w = ss.occurrences.astype(float)
    mean = np.bincount(inverse, weights=w * ss.energies, minlength=codes.size) / counts
    lo = np.full(codes.size, np.inf)
    hi = np.full(codes.size, -np.inf)
    np.minimum.at(lo, inverse, ss.energies)
    np.maximum.at(hi, inverse, ss.energies)
    return codes, mean, hi - lo


def energy_conflicts(ss: Sampleset) -> float:
    """Largest energy spread reported for one state (0 when consistent)."""
    return float(np.max(_mean_energies(ss)[2]))


def energy_reconstruction(ss: Sampleset, beta: float) -> DistributionTable:
    """Boltzmann law restricted to the discovered states.

    Uses the reported energies only; occurrence counts matter solely for
    averaging conflicting energies of a repeated state.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    codes, E, _ = _mean_energies(ss)
    probs, log_z = boltzmann_probs(E, beta)
    return DistributionTable(
        ss.num_spins, codes, probs, beta=float(beta), log_z=log_z, energies=E, fingerprint=ss.model_fingerprint or None
    )


def distribution_distance(p: DistributionTable, q: DistributionTable, metric: str = "tv") -> float:
    """Total variation or KL(p || q); states missing from a table have mass 0."""
    if p.num_spins != q.num_spins:
        raise ValueError(f"tables cover {p.num_spins} and {q.num_spins} spins")
    if metric == "tv":
        union = np.union1d(p.codes, q.codes)
        a = np.zeros(union.size)
        b = np.zeros(union.size)
        a[np.searchsorted(union, p.codes)] = p.probs
        b[np.searchsorted(union, q.codes)] = q.probs
        return min(1.0, 0.5 * float(np.abs(a - b).sum()))
    if metric == "kl":
        mask = p.probs > 0
        pc, pp = p.codes[mask], p.probs[mask]
        order = np.argsort(q.codes)
        qc, qp = q.codes[order], q.probs[order]
        if qc.size == 0:
            raise SupportError("support of p is not contained in support of q")
        pos = np.minimum(np.searchsorted(qc, pc), qc.size - 1)
        qq = np.where(qc[pos] == pc, qp[pos], 0.0)
        if np.any(qq <= 0):
            raise SupportError("support of p is not contained in support of q")
        return max(0.0, float(np.sum(pp * np.log(pp / qq))))
    raise ValueError(f"unknown metric {metric!r}; expected 'tv' or 'kl'")


@dataclass(frozen=True)
class RetrofitResult:
    alpha: float
    distance: float
    scan: tuple  # (a, distance) pairs in evaluation order
    metric: str = "tv"


def retrofit_alpha(
    samples,
    model: IsingModel,
    metric: str = "tv",
    search_interval: tuple[float, float] = (0.0, 4.0),
    tol: float = ALPHA_TOL,
) -> RetrofitResult:
    """Best-fitting Boltzmann scaling ``argmin_a dist(samples, P_a)``.

    ``samples`` is a :class:`Sampleset` or an already weighted
    :class:`DistributionTable`. A 32-point grid locates the basin, then
    golden-section search narrows the neighbouring bracket to ``tol``.
    """
    lo, hi = (float(v) for v in search_interval)
    if not (0.0 <= lo < hi and math.isfinite(hi)):
        raise ValueError(f"degenerate search interval {search_interval!r}")
    emp = samples if isinstance(samples, DistributionTable) else empirical_distribution(samples)
    if emp.num_spins != model.num_spins:
        raise ValueError("samples and model disagree on the number of spins")
    exact_distribution(model, 0.0)  # raises early when the model is too large

    scan: list[tuple[float, float]] = []

    def dist(a: float) -> float:
        d = distribution_distance(emp, exact_distribution(model, a), metric)
        scan.append((a, d))
        return d

    grid = np.linspace(lo, hi, GRID_POINTS)
    values = [dist(float(a)) for a in grid]
    k = int(np.argmin(values))
    a, b = float(grid[max(k - 1, 0)]), float(grid[min(k + 1, GRID_POINTS - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = dist(c), dist(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = dist(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = dist(d)
    dist(0.5 * (a + b))
    best_a, best_d = min(scan, key=lambda t: (t[1], t[0]))
    return RetrofitResult(best_a, best_d, tuple(scan), metric)


@dataclass(frozen=True)
class CoverageReport:
    states_discovered: int
    total_reads: int
    states_total: int | None = None
    discovered_mass: float | None = None

    def as_dict(self) -> dict:
        return {
            "states_discovered": self.states_discovered,
            "total_reads": self.total_reads,
            "states_total": self.states_total,
            "discovered_mass": self.discovered_mass,
        }


def coverage_report(ss: Sampleset, model: IsingModel | None = None, beta: float = 1.0) -> CoverageReport:
    codes, _, _ = _codes_and_weights(ss)
    n = ss.num_spins
    mass = None
    if model is not None:
        if model.num_spins != n:
            raise ValueError("sampleset and model disagree on the number of spins")
        table = exact_distribution(model, beta)
        mass = min(1.0, float(table.probs[codes].sum()))
    return CoverageReport(int(codes.size), ss.total_reads, 2**n, mass)


def format_report(values: dict) -> str:
    """``key=value`` lines; floats use ``repr`` and missing values ``-``."""
    lines = []
    for key, val in values.items():
        if val is None:
            text = "-"
        elif isinstance(val, float):
            text = repr(val)
        else:
            text = str(val)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def _parse_value(text: str):
    if text == "-":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_report(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, val = line.split("=", 1)
        out[key] = _parse_value(val)
    return out


def format_scan(result: RetrofitResult) -> str:
    buf = io.StringIO()
    buf.write("a,distance\n")
    for a, d in result.scan:
        buf.write(f"{a!r},{d!r}\n")
    return buf.getvalue()


def parse_scan(text: str) -> list[tuple[float, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["a", "distance"]:
        raise ValueError("scan CSV must start with the header 'a,distance'")
    return [(float(a), float(d)) for a, d in rows[1:]]


def format_table(table: DistributionTable) -> str:
    """CSV of ``state,probability[,energy]`` rows in the table's order."""
    with_e = table.energies is not None
    lines = ["state,probability,energy" if with_e else "state,probability"]
    for i, s in enumerate(table.states):
        row = f"{spin_string(s)},{float(table.probs[i])!r}"
        if with_e:
            row += f",{float(table.energies[i])!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def parse_table(text: str, beta: float | None = None) -> DistributionTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:2] != ["state", "probability"]:
        raise ValueError("table CSV must start with 'state,probability'")
    with_e = len(rows[0]) == 3
    states = np.array([parse_spin_string(r[0]) for r in rows[1:]], dtype=np.int8)
    probs = np.array([float(r[1]) for r in rows[1:]])
    energies = np.array([float(r[2]) for r in rows[1:]]) if with_e else None
    n = states.shape[1] if states.size else 0
    return DistributionTable(n, states_to_codes(states), probs, beta=beta, energies=energies)


def _write(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _read(path) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc


def save_report(values: dict, path) -> None:
    _write(path, format_report(values))


def load_report(path) -> dict:
    return parse_report(_read(path))


def save_scan(result: RetrofitResult, path) -> None:
    _write(path, format_scan(result))


def load_scan(path) -> list[tuple[float, float]]:
    return parse_scan(_read(path))
