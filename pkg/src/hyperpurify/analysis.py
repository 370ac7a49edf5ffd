"""Figures of merit: QBER and key rate, CHSH values, purification efficiency."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .channels import HADAMARD
from .qmath import as_matrix, eig_hermitian
from .tomography import pauli_expectations

#: QBER at or above which no secure key is credited
QBER_THRESHOLD = 0.11
# a QBER that is 0.11 in exact arithmetic may round to 0.10999999999999999
_QBER_ROUNDING = 1e-12

_HH = np.kron(HADAMARD, HADAMARD)


def qber(rho, basis: str = "Z") -> float:
    """Probability that the two photons give different results in a shared basis.

    ``Z`` is H/V; ``F`` (Fourier, ±45°) is Z after a Hadamard on both sides.
    """
    rho = as_matrix(rho)
    if basis == "F":
        rho = _HH @ rho @ _HH
    elif basis != "Z":
        raise ValueError(f"basis must be 'Z' or 'F', not {basis!r}")
    return float(np.clip(np.real(rho[1, 1] + rho[2, 2]), 0.0, 1.0))


def shannon_entropy(e: float) -> float:
    """Binary entropy in bits, 0 at both endpoints."""
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"probability {e} outside [0, 1]")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -(1 - e) * math.log2(1 - e) - e * math.log2(e)


@dataclass(frozen=True)
class KeyRateResult:
    qber_z: float
    qber_f: float
    qber: float
    raw_rate: float
    effective_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


def key_rate_from_qber(q: float, threshold: float = QBER_THRESHOLD) -> tuple[float, float]:
    """``(raw, effective)`` with raw ``1 - 2 H(q)``; effective is 0 at or above the threshold."""
    raw = 1.0 - 2.0 * shannon_entropy(q)
    eff = max(raw, 0.0) if q < threshold - _QBER_ROUNDING else 0.0
    return raw, eff


def key_rate(rho, threshold: float = QBER_THRESHOLD) -> KeyRateResult:
    qz = qber(rho, "Z")
    qf = qber(rho, "F")
    q = 0.5 * (qz + qf)
    raw, eff = key_rate_from_qber(q, threshold)
    return KeyRateResult(qz, qf, q, raw, eff)


@dataclass(frozen=True)
class ChshResult:
    s_fixed: float
    s_max: float
    settings: dict

    def to_dict(self) -> dict:
        return asdict(self)


_R2 = 1 / math.sqrt(2)
CANONICAL_SETTINGS = {
    "A1": (0.0, 0.0, 1.0),
    "A2": (1.0, 0.0, 0.0),
    "B1": (_R2, 0.0, _R2),
    "B2": (-_R2, 0.0, _R2),
}


def correlation_matrix(rho) -> np.ndarray:
    """``T[i, j] = <sigma_i ⊗ sigma_j>`` for i, j in x, y, z."""
    return pauli_expectations(rho)[1:, 1:]


def chsh(rho) -> ChshResult:
    """CHSH value at the canonical settings and the Horodecki maximum over all settings."""
    T = correlation_matrix(rho)
    a1, a2, b1, b2 = (np.array(CANONICAL_SETTINGS[k]) for k in ("A1", "A2", "B1", "B2"))

    def E(a, b):
        return float(a @ T @ b)

    s_fixed = E(a1, b1) + E(a1, b2) + E(a2, b1) - E(a2, b2)
    m = eig_hermitian(T.T @ T, vectors=False).eigenvalues
    s_max = 2.0 * math.sqrt(max(m[0] + m[1], 0.0))
    return ChshResult(s_fixed, s_max, {k: list(v) for k, v in CANONICAL_SETTINGS.items()})


@dataclass(frozen=True)
class EfficiencyModel:
    """Inputs of the one-copy vs two-copy efficiency comparison.

    ``C`` coincidences/s before the fiber, ``epsilon`` coupling efficiency,
    ``rep_rate`` pump repetition rate, ``p_protocol`` success probability of
    the protocol, ``eta`` channel transmittance.
    """

    C: float = 2400.0
    epsilon: float = 0.18
    rep_rate: float = 76e6
    p_protocol: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        for name in ("C", "rep_rate", "p_protocol", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def source_probability(self) -> float:
        """Pair-generation probability per pump pulse, ``C / (epsilon**2 * rep_rate)``."""
        return self.C / (self.epsilon**2 * self.rep_rate)


def efficiency_one(em: EfficiencyModel) -> float:
    return em.p_protocol * em.source_probability * em.eta


def efficiency_two(em: EfficiencyModel) -> float:
    """Two-copy scheme with a 1/4-efficient linear-optics CNOT and two pairs through the channel."""
    return 0.25 * em.p_protocol * em.source_probability**2 * em.eta**2


def efficiency_ratio(p_source: float, eta: float) -> float:
    return 4.0 / (p_source * eta)


def efficiency_block(em: EfficiencyModel) -> dict:
    one, two = efficiency_one(em), efficiency_two(em)
    return {
        "C": em.C,
        "epsilon": em.epsilon,
        "rep_rate": em.rep_rate,
        "p_protocol": em.p_protocol,
        "eta": em.eta,
        "p_source": em.source_probability,
        "efficiency_one": one,
        "efficiency_two": two,
        "ratio": one / two,
    }
