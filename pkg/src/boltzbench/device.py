"""Phenomenological annealer emulator.

The quantum dynamics are replaced by an equilibrium law with an effective
scaling factor: reads are Gibbs samples of ``exp(-alpha * E_user)``, after the
problem has been embedded, autoscaled and perturbed the way a device would
perturb it. Imperfections layered on top:

* integrated control errors (per-call Gaussian offsets, per-qubit gain
  spread, background susceptibility, DAC quantization),
* photon excitation: a read is drawn at half the inverse temperature with
  probability ``1 - exp(-t_f / photon_tau)``,
* spin-bath memory: each spin copies its value from the previous read with
  probability ``rho * exp(-wait / tau_relax)``,
* readout bit flips with probability ``1 - readout_fidelity``,
* a hard cap on the number of reads per call.

Reported energies are always recomputed on the unperturbed, unscaled problem.

Time quantities (``t_f``, ``pause_duration``, ``photon_tau``, ``tau_relax``,
``depolarize_wait``) share one unit, microseconds by convention.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ._backend import kernels
from .embedding import Embedding, HardwareGraph, embed_model
from .ising import IsingModel
from .rng import stage_rng
from .samplers import Sampleset, run_gibbs_chain

__all__ = [
    "SamplesetCapError",
    "DeviceProfile",
    "AnnealSchedule",
    "DeviceEmulator",
    "autoscale",
    "apply_ice",
    "effective_alpha",
    "device_sample",
    "load_profile",
    "save_profile",
    "load_schedule",
    "save_schedule",
    "with_overrides",
    "NEUTRAL_KNOBS",
]

MAX_READS = 10_000


# imperfection knobs at values that switch them off; alpha is left alone
NEUTRAL_KNOBS = dict(
    ice_sigma_h=0.0,
    ice_sigma_J=0.0,
    background_chi=0.0,
    dac_step=0.0,
    h_scale_spread=0.0,
    readout_fidelity=1.0,
    photon_tau=math.inf,
    spinbath_rho=0.0,
    depolarize_wait=0.0,
)


class SamplesetCapError(ValueError):
    pass


def _interval(value, name: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in value)
    if not (lo < 0.0 < hi):
        raise ValueError(f"{name} must satisfy lo < 0 < hi, got {(lo, hi)}")
    return lo, hi


@dataclass(frozen=True)
class DeviceProfile:
    """Device knobs.

    ``readout_fidelity`` and ``max_reads`` follow published hardware figures;
    every other default is an invented placeholder chosen to be mild.
    """

    h_range: tuple[float, float] = (-2.0, 2.0)
    J_range: tuple[float, float] = (-1.0, 1.0)
    ice_sigma_h: float = 0.01
    ice_sigma_J: float = 0.01
    background_chi: float = 0.005
    dac_step: float = 1.0 / 256
    h_scale_spread: float = 0.02
    readout_fidelity: float = 0.99
    photon_tau: float = 1.0e4
    spinbath_rho: float = 0.05
    depolarize_wait: float = 0.0
    alpha_base: float = 1.0
    alpha_eq: float = 1.5
    tau_relax: float = 1.0
    max_reads: int = MAX_READS

    def __post_init__(self):
        object.__setattr__(self, "h_range", _interval(self.h_range, "h_range"))
        object.__setattr__(self, "J_range", _interval(self.J_range, "J_range"))
        for name in ("ice_sigma_h", "ice_sigma_J", "dac_step", "h_scale_spread", "depolarize_wait"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not math.isfinite(self.background_chi):
            raise ValueError("background_chi must be finite")
        # 0.5 itself is allowed: it is the fully randomizing limit
        if not 0.5 <= self.readout_fidelity <= 1.0:
            raise ValueError("readout_fidelity must be in [0.5, 1]")
        if not self.photon_tau > 0:
            raise ValueError("photon_tau must be > 0")
        if not 0.0 <= self.spinbath_rho < 1.0:
            raise ValueError("spinbath_rho must be in [0, 1)")
        for name in ("alpha_base", "alpha_eq", "tau_relax"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if int(self.max_reads) != self.max_reads or self.max_reads < 1:
            raise ValueError("max_reads must be a positive integer")
        object.__setattr__(self, "max_reads", int(self.max_reads))

    @classmethod
    def noiseless(cls, **overrides) -> "DeviceProfile":
        """Every imperfection at its neutral value and alpha fixed at 1."""
        base = dict(NEUTRAL_KNOBS, alpha_base=1.0, alpha_eq=1.0)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h_range"] = list(self.h_range)
        d["J_range"] = list(self.J_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceProfile":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        return cls(**d)


def _default_points():
    return ((0.0, 5.0, 0.05), (0.5, 1.0, 1.5), (1.0, 0.05, 5.0))


@dataclass(frozen=True)
class AnnealSchedule:
    """Anneal time, ``(s, A, B)`` control points and an optional pause."""

    t_f: float = 20.0
    points: tuple = field(default_factory=_default_points)
    pause_s: float | None = None
    pause_duration: float = 0.0

    def __post_init__(self):
        if not self.t_f > 0:
            raise ValueError("t_f must be > 0")
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        if len(pts) < 2 or any(len(p) != 3 for p in pts):
            raise ValueError("points must be at least two (s, A, B) triples")
        s = np.array([p[0] for p in pts])
        A = np.array([p[1] for p in pts])
        B = np.array([p[2] for p in pts])
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) < 0):
            raise ValueError("s must be nondecreasing from 0 to 1")
        if np.any(np.diff(A) > 0) or np.any(np.diff(B) < 0):
            raise ValueError("A must be nonincreasing and B nondecreasing in s")
        if A[0] < 10 * B[0] or B[-1] < 10 * A[-1]:
            raise ValueError("schedule must start with A >> B and end with B >> A (factor 10)")
        if self.pause_s is not None and not 0.0 < self.pause_s < 1.0:
            raise ValueError("pause_s must lie in (0, 1)")
        if not self.pause_duration >= 0:
            raise ValueError("pause_duration must be >= 0")
        if self.pause_duration > 0 and self.pause_s is None:
            raise ValueError("pause_duration given without pause_s")
        object.__setattr__(self, "points", pts)

    def to_dict(self) -> dict:
        return {
            "t_f": self.t_f,
            "points": [list(p) for p in self.points],
            "pause_s": self.pause_s,
            "pause_duration": self.pause_duration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnealSchedule":
        d = dict(d)
        if "points" in d:
            d["points"] = tuple(tuple(p) for p in d["points"])
        return cls(**d)


def autoscale(model: IsingModel, profile: DeviceProfile) -> tuple[IsingModel, float]:
    """Shrink the model so every weight fits the profile ranges.

    Positive and negative weights are checked against their own bound, so an
    asymmetric range is honoured.
    """
    ratios = [1.0]
    for values, (lo, hi) in ((model.h, profile.h_range), (np.fromiter(model.J.values(), float), profile.J_range)):
        pos = values[values > 0]
        neg = values[values < 0]
        if pos.size:
            ratios.append(hi / float(pos.max()))
        if neg.size:
            ratios.append(lo / float(neg.min()))
    scale = min(ratios)
    if scale == 1.0:
        return model, 1.0
    return model.scaled(scale), scale


def _quantize(x: np.ndarray, step: float) -> np.ndarray:
    if step == 0:
        return x
    return np.round(x / step) * step


def apply_ice(model: IsingModel, profile: DeviceProfile, rng: np.random.Generator) -> IsingModel:
    """One draw of the control errors the device would actually implement.

    Draw order is fixed (gain spread, field offsets, coupler offsets in sorted
    edge order) and every draw happens even when its sigma is zero, so turning
    one knob never shifts another's random numbers.
    """
    n = model.num_spins
    xi = rng.standard_normal(n) * profile.h_scale_spread
    dh = rng.standard_normal(n) * profile.ice_sigma_h
    dJ = rng.standard_normal(len(model.J)) * profile.ice_sigma_J
    h = model.h * (1.0 + xi) + dh
    if profile.background_chi != 0 and model.J:
        h = h + profile.background_chi * (model.coupling_matrix() @ model.h)
    h = _quantize(h, profile.dac_step)
    Jv = _quantize(np.fromiter(model.J.values(), float, len(model.J)) + dJ, profile.dac_step)
    J = {k: float(v) for k, v in zip(model.J, Jv)}
    return IsingModel(n, h, J, model.offset)


def effective_alpha(schedule: AnnealSchedule, profile: DeviceProfile, scale: float = 1.0) -> float:
    """Scaling factor between the user's energy and the sampled exponent.

    Relaxes from ``alpha_base`` toward ``alpha_eq`` exponentially in the pause
    duration. The exponential form is a modelling assumption.
    """
    a = profile.alpha_base
    if schedule.pause_s is not None and schedule.pause_duration > 0:
        relax = -math.expm1(-schedule.pause_duration / profile.tau_relax)
        a = a + (profile.alpha_eq - profile.alpha_base) * relax
    return scale * a


class DeviceEmulator:
    """A device instance.

    It remembers the last reported read between calls (spin-bath memory), so
    an instance must be driven serially. Separate instances are independent.
    """

    def __init__(
        self,
        profile: DeviceProfile | None = None,
        hardware: HardwareGraph | None = None,
        sweeps_per_read: int = 10,
        burn_in_sweeps: int = 1000,
        backend=None,
    ):
        self.profile = DeviceProfile() if profile is None else profile
        self.hardware = hardware
        self.sweeps_per_read = sweeps_per_read
        self.burn_in_sweeps = burn_in_sweeps
        self.backend = backend
        self._previous: np.ndarray | None = None
        self.last_raw: np.ndarray | None = None
        self.last_alpha: float | None = None
        self.last_scale: float | None = None

    def reset(self):
        self._previous = None

    def sample(
        self,
        model: IsingModel,
        schedule: AnnealSchedule | None = None,
        num_reads: int = 1000,
        seed: int = 0,
        embedding: Embedding | None = None,
    ) -> Sampleset:
        prof = self.profile
        schedule = AnnealSchedule() if schedule is None else schedule
        if num_reads > prof.max_reads:
            raise SamplesetCapError(f"sampleset cap exceeded: {num_reads} reads > max_reads={prof.max_reads}")
        if num_reads < 1:
            raise ValueError("num_reads must be >= 1")

        if embedding is not None:
            if self.hardware is None:
                raise ValueError("an embedding needs the emulator's hardware graph")
            target = embed_model(model, embedding, self.hardware)
        else:
            target = model
        scaled, scale = autoscale(target, prof)
        physical = apply_ice(scaled, prof, stage_rng(seed, "ice"))
        alpha = effective_alpha(schedule, prof, scale)
        # Gibbs runs on the scaled model, so alpha/scale there is alpha on the user's model
        beta = alpha / scale
        n = target.num_spins

        p_ex = -math.expm1(-schedule.t_f / prof.photon_tau)
        excited = stage_rng(seed, "photon").random(num_reads) < p_ex
        raw = np.empty((num_reads, n), dtype=np.int8)
        for flag, b in ((False, beta), (True, beta / 2)):
            rows = np.nonzero(excited == flag)[0]
            if rows.size:
                raw[rows] = run_gibbs_chain(
                    physical,
                    b,
                    rows.size,
                    stage_rng(seed, "sampling", int(flag)),
                    self.sweeps_per_read,
                    self.burn_in_sweeps,
                    self.backend,
                )

        k = kernels if self.backend is None else self.backend
        copy_prob = prof.spinbath_rho * math.exp(-prof.depolarize_wait / prof.tau_relax)
        u = stage_rng(seed, "spinbath").random((num_reads, n))
        prev = self._previous
        has_prev = prev is not None and prev.shape == (n,)
        k.spinbath_persist(raw, u, float(copy_prob), prev if has_prev else np.zeros(n, np.int8), bool(has_prev))

        self.last_raw = raw.copy()
        flips = stage_rng(seed, "readout").random((num_reads, n)) < (1.0 - prof.readout_fidelity)
        reported = np.where(flips, -raw, raw).astype(np.int8)
        self._previous = raw[-1].copy()
        self.last_alpha = alpha
        self.last_scale = scale
        return Sampleset.from_reads(reported, target.energies(reported), target.fingerprint())


def device_sample(
    model: IsingModel,
    schedule: AnnealSchedule | None = None,
    profile: DeviceProfile | None = None,
    emb: Embedding | None = None,
    num_reads: int = 1000,
    seed: int = 0,
    hardware: HardwareGraph | None = None,
) -> Sampleset:
    """Stateless convenience wrapper: a fresh emulator for a single call."""
    dev = DeviceEmulator(profile, hardware)
    return dev.sample(model, schedule, num_reads, seed, emb)


def _dump(obj: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc


def save_profile(profile: DeviceProfile, path) -> None:
    _dump(profile.to_dict(), path)


def load_profile(path) -> DeviceProfile:
    return DeviceProfile.from_dict(_read(path))


def save_schedule(schedule: AnnealSchedule, path) -> None:
    _dump(schedule.to_dict(), path)


def load_schedule(path) -> AnnealSchedule:
    return AnnealSchedule.from_dict(_read(path))


def with_overrides(profile: DeviceProfile, **knobs) -> DeviceProfile:
    """Copy of ``profile`` with the non-``None`` knobs replaced."""
    return replace(profile, **{k: v for k, v in knobs.items() if v is not None})
