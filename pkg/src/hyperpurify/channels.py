"""Noise and conversion channels acting on the 16-dim hyperentangled register.

A :class:`PauliMixture` is a probability distribution over the four operation
pairs ``(spatial op) ⊗ (polarization op)`` with each op either identity or the
flavor's flip (σx for bit flip, σz for phase flip). It is applied to one photon
(photon B by default, as in the loading setup) or independently to both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Literal, Mapping

import numpy as np

from .qmath import SYNTHETIC_TOL, as_matrix, dagger, require_physical

Flavor = Literal["BF", "PF"]
Photon = Literal["A", "B", "both"]

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

# register slot of (pol, spa) for each photon
_SLOTS = {"A": (0, 1), "B": (2, 3)}
_PAIRS = ((False, False), (True, False), (True, True), (False, True))


def _flip(flavor: str) -> np.ndarray:
    if flavor == "BF":
        return SX
    if flavor == "PF":
        return SZ
    raise ValueError(f"flavor must be 'BF' or 'PF', not {flavor!r}")


def _local(ops: Mapping[int, np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for slot in range(4):
        out = np.kron(out, ops.get(slot, I2))
    return out


@dataclass(frozen=True)
class LcSchedule:
    """Liquid-crystal activation cycle of period ``T``.

    ``t1``: flip on spatial only, ``t2``: flip on both, ``t3``: flip on
    polarization only; the rest of the period is identity.
    """

    T: float = 15.0
    t1: float = 0.0
    t2: float = 0.0
    t3: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"period T must be positive, got {self.T}")
        for name in ("t1", "t2", "t3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if Fraction(self.t1) + Fraction(self.t2) + Fraction(self.t3) > Fraction(self.T):
            raise ValueError("t1 + t2 + t3 exceeds the period T")


@dataclass(frozen=True)
class PauliMixture:
    """Weights keyed by ``(flip_spatial, flip_polarization)``."""

    flavor: Flavor
    weights: Mapping[tuple[bool, bool], Real]

    def __post_init__(self):
        _flip(self.flavor)
        w = {pair: self.weights.get(pair, 0) for pair in _PAIRS}
        extra = set(self.weights) - set(_PAIRS)
        if extra:
            raise ValueError(f"unknown operation pairs {extra}")
        for pair, p in w.items():
            if not 0 <= p <= 1:
                raise ValueError(f"weight {p} for {pair} outside [0, 1]")
        if abs(float(sum(w.values())) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {float(sum(w.values()))}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def pol_flip_probability(self) -> float:
        return float(self.weights[(False, True)] + self.weights[(True, True)])

    @property
    def spa_flip_probability(self) -> float:
        return float(self.weights[(True, False)] + self.weights[(True, True)])

    @classmethod
    def identity(cls, flavor: Flavor = "BF") -> "PauliMixture":
        return cls(flavor, {(False, False): 1})


def schedule_to_mixture(s: LcSchedule, flavor: Flavor) -> PauliMixture:
    """Weights are activation durations over the period, kept as exact fractions."""
    T = Fraction(s.T)
    w1, w2, w3 = Fraction(s.t1) / T, Fraction(s.t2) / T, Fraction(s.t3) / T
    return PauliMixture(
        flavor,
        {(True, False): w1, (True, True): w2, (False, True): w3, (False, False): 1 - w1 - w2 - w3},
    )


def independent_mixture(f_pol: float, f_spa: float, flavor: Flavor) -> PauliMixture:
    """Product-form noise: each degree of freedom flips independently."""
    for name, p in (("f_pol", f_pol), ("f_spa", f_spa)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return PauliMixture(
        flavor,
        {
            (True, True): f_pol * f_spa,
            (False, True): f_pol * (1 - f_spa),
            (True, False): (1 - f_pol) * f_spa,
            (False, False): (1 - f_pol) * (1 - f_spa),
        },
    )


def _apply_on_photon(rho: np.ndarray, m: PauliMixture, photon: str) -> np.ndarray:
    flip = _flip(m.flavor)
    pol, spa = _SLOTS[photon]
    out = np.zeros_like(rho)
    for (f_spa, f_pol), p in m.weights.items():
        if p == 0:
            continue
        if not (f_spa or f_pol):
            out += float(p) * rho
            continue
        ops = {}
        if f_pol:
            ops[pol] = flip
        if f_spa:
            ops[spa] = flip
        U = _local(ops)
        out += float(p) * (U @ rho @ dagger(U))
    return out


def apply_mixture(rho16, m: PauliMixture, photon: Photon = "B", *, check: bool = True) -> np.ndarray:
    """``sum_i p_i U_i rho U_i^H`` with ``U_i`` acting on the chosen photon.

    ``photon="both"`` applies the mixture to A and B independently; a shared
    flip on both photons would leave the Bell components invariant.
    """
    rho = require_physical(rho16, SYNTHETIC_TOL, "input state") if check else as_matrix(rho16)
    if m.weights[(False, False)] == 1:
        return rho
    if photon == "both":
        return _apply_on_photon(_apply_on_photon(rho, m, "A"), m, "B")
    if photon not in _SLOTS:
        raise ValueError(f"photon must be 'A', 'B' or 'both', not {photon!r}")
    return _apply_on_photon(rho, m, photon)


_H4 = _local({k: HADAMARD for k in range(4)})


def hadamard_convert(rho16, *, check: bool = True) -> np.ndarray:
    """Hadamard on all four qubits; swaps the bit-flip and phase-flip error families."""
    rho = require_physical(rho16, SYNTHETIC_TOL, "input state") if check else as_matrix(rho16)
    return _H4 @ rho @ _H4


@dataclass(frozen=True)
class FiberModel:
    """Fiber link: attenuation, length and the intrinsic flip probabilities per DOF on photon B."""

    alpha_db_per_km: float = 0.2
    length_km: float = 11.0
    bf: float = 0.011
    pf: float = 0.033

    def __post_init__(self):
        if self.alpha_db_per_km < 0 or self.length_km < 0:
            raise ValueError("attenuation and length must be nonnegative")
        for name in ("bf", "pf"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"intrinsic {name} probability outside [0, 1]")


def fiber_transmittance(fm: FiberModel, *, natural_exp: bool = False) -> float:
    """Survival probability ``10**(-alpha L / 10)``.

    ``natural_exp=True`` evaluates ``exp(-alpha L / 10)`` instead, which
    does not reproduce η≈0.602 at 11 km and is kept only for comparison.
    """
    x = fm.alpha_db_per_km * fm.length_km / 10.0
    return math.exp(-x) if natural_exp else 10.0 ** (-x)


def mcf_channel(rho16, fm: FiberModel, photon: Photon = "B", *, check: bool = True) -> np.ndarray:
    """Intrinsic multicore-fiber noise: independent BF then independent PF on both DOFs."""
    rho = require_physical(rho16, SYNTHETIC_TOL, "input state") if check else as_matrix(rho16)
    rho = apply_mixture(rho, independent_mixture(fm.bf, fm.bf, "BF"), photon, check=False)
    return apply_mixture(rho, independent_mixture(fm.pf, fm.pf, "PF"), photon, check=False)


@dataclass(frozen=True)
class NoiseSpec:
    """Declarative noise: a loaded mixture followed by the fiber's intrinsic noise."""

    flavor: Flavor = "BF"
    mode: Literal["independent", "schedule"] = "independent"
    f_pol: float = 0.0
    f_spa: float = 0.0
    schedule: LcSchedule | None = None
    fiber: FiberModel = field(default_factory=FiberModel)
    photon: Photon = "B"

    def __post_init__(self):
        _flip(self.flavor)
        if self.mode not in ("independent", "schedule"):
            raise ValueError(f"mode must be 'independent' or 'schedule', not {self.mode!r}")
        if self.mode == "schedule" and self.schedule is None:
            raise ValueError("schedule mode needs a schedule")
        if self.photon not in ("A", "B", "both"):
            raise ValueError(f"bad photon placement {self.photon!r}")
        for name in ("f_pol", "f_spa"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def loaded_mixture(self) -> PauliMixture:
        if self.mode == "schedule":
            return schedule_to_mixture(self.schedule, self.flavor)
        return independent_mixture(self.f_pol, self.f_spa, self.flavor)

    def apply(self, rho16, *, check: bool = True) -> np.ndarray:
        rho = apply_mixture(rho16, self.loaded_mixture(), self.photon, check=check)
        return mcf_channel(rho, self.fiber, self.photon, check=False)

    def to_dict(self) -> dict:
        d = {
            "flavor": self.flavor,
            "mode": self.mode,
            "f_pol": self.f_pol,
            "f_spa": self.f_spa,
            "intrinsic": {"bf": self.fiber.bf, "pf": self.fiber.pf},
            "fiber": {"alpha_db_per_km": self.fiber.alpha_db_per_km, "length_km": self.fiber.length_km},
            "photon": self.photon,
        }
        if self.schedule is not None:
            s = self.schedule
            d["schedule"] = {"T": s.T, "t1": s.t1, "t2": s.t2, "t3": s.t3}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "NoiseSpec":
        intrinsic = d.get("intrinsic", {})
        fiber = d.get("fiber", {})
        fm = FiberModel(
            alpha_db_per_km=fiber.get("alpha_db_per_km", 0.2),
            length_km=fiber.get("length_km", 11.0),
            bf=intrinsic.get("bf", 0.0),
            pf=intrinsic.get("pf", 0.0),
        )
        sched = d.get("schedule")
        return cls(
            flavor=d.get("flavor", "BF"),
            mode=d.get("mode", "independent"),
            f_pol=d.get("f_pol", 0.0),
            f_spa=d.get("f_spa", 0.0),
            schedule=LcSchedule(**sched) if sched is not None else None,
            fiber=fm,
            photon=d.get("photon", "B"),
        )
