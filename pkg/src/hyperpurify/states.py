"""Bell states, rank-two Bell mixtures and the two-photon hyperentangled register.

Canonical 16-dim ordering groups qubits per photon::

    A-pol ⊗ A-spa ⊗ B-pol ⊗ B-spa        (0 = H or a1/b1, 1 = V or a2/b2)

so that the CNOT between a photon's own spatial and polarization qubits is
local. Two-qubit states (one degree of freedom, both photons) are ordered
photon A ⊗ photon B.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .qmath import (
    SYNTHETIC_TOL,
    Register,
    as_matrix,
    ket_to_dm,
    kron,
    partial_trace,
    permute_subsystems,
    require_physical,
)

HYPER_REGISTER = Register(("A_pol", "A_spa", "B_pol", "B_spa"), (2, 2, 2, 2))
PAIR_REGISTER = Register(("A", "B"), (2, 2))

POL = ("A_pol", "B_pol")
SPA = ("A_spa", "B_spa")

# (A-pol, B-pol, A-spa, B-spa) -> (A-pol, A-spa, B-pol, B-spa); the swap is its own inverse
_DOF_TO_PHOTON = (0, 2, 1, 3)


class BellKind(enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @classmethod
    def parse(cls, value: "BellKind | str") -> "BellKind":
        if isinstance(value, cls):
            return value
        for k in cls:
            if value in (k.value, k.name):
                return k
        raise ValueError(f"unknown Bell state {value!r}")


_S = 1 / np.sqrt(2)
_BELL = {
    BellKind.PHI_PLUS: np.array([_S, 0, 0, _S], dtype=complex),
    BellKind.PHI_MINUS: np.array([_S, 0, 0, -_S], dtype=complex),
    BellKind.PSI_PLUS: np.array([0, _S, _S, 0], dtype=complex),
    BellKind.PSI_MINUS: np.array([0, _S, -_S, 0], dtype=complex),
}


def bell_state(kind: BellKind | str, dof: str = "polarization") -> np.ndarray:
    """Bell vector in the photon-A ⊗ photon-B ordering.

    The polarization (Φ±, Ψ±) and spatial (φ±, ψ±) families have the same
    coordinates once H/V and a1,b1/a2,b2 are both mapped to 0/1; ``dof`` is
    checked but only selects the naming.
    """
    if dof not in ("polarization", "spatial"):
        raise ValueError(f"dof must be 'polarization' or 'spatial', not {dof!r}")
    return _BELL[BellKind.parse(kind)].copy()


def bell_projector(kind: BellKind | str) -> np.ndarray:
    return ket_to_dm(bell_state(kind))


@dataclass(frozen=True)
class RankTwoMixture:
    """``F |dominant><dominant| + (1 - F) |error><error|``."""

    fidelity: float
    dominant: BellKind = BellKind.PHI_PLUS
    error: BellKind = BellKind.PSI_PLUS

    def __post_init__(self):
        object.__setattr__(self, "dominant", BellKind.parse(self.dominant))
        object.__setattr__(self, "error", BellKind.parse(self.error))
        if self.dominant is self.error:
            raise ValueError("dominant and error Bell states must differ")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity must lie in [0, 1], got {self.fidelity}")


def mixture(spec: RankTwoMixture | float, *, dominant=BellKind.PHI_PLUS, error=BellKind.PSI_PLUS) -> np.ndarray:
    """4x4 density matrix of a rank-two Bell mixture.

    Accepts either a :class:`RankTwoMixture` or a bare fidelity, in which case
    the bit-flip family Φ+/Ψ+ is the default.
    """
    if not isinstance(spec, RankTwoMixture):
        spec = RankTwoMixture(float(spec), dominant, error)
    f = spec.fidelity
    return f * bell_projector(spec.dominant) + (1 - f) * bell_projector(spec.error)


def dof_to_photon_order(rho_dof) -> np.ndarray:
    """Re-permute a 16-dim matrix from (pol pair) ⊗ (spa pair) into the canonical order."""
    return permute_subsystems(rho_dof, (2, 2, 2, 2), _DOF_TO_PHOTON)


def photon_to_dof_order(rho16) -> np.ndarray:
    return permute_subsystems(rho16, (2, 2, 2, 2), _DOF_TO_PHOTON)


def hyper_state(pol, spa, tol: float = SYNTHETIC_TOL) -> np.ndarray:
    """``rho_pol ⊗ rho_spa`` laid out in the canonical per-photon register."""
    pol = require_physical(pol, tol, "polarization state")
    spa = require_physical(spa, tol, "spatial state")
    if pol.shape != (4, 4) or spa.shape != (4, 4):
        raise ValueError("hyper_state expects two 4x4 density matrices")
    return dof_to_photon_order(kron(pol, spa))


def hyper_ket(pol_ket, spa_ket) -> np.ndarray:
    """Pure-state counterpart of :func:`hyper_state`, as a 16-vector."""
    v = np.kron(np.asarray(pol_ket, dtype=complex), np.asarray(spa_ket, dtype=complex))
    return v.reshape(2, 2, 2, 2).transpose(_DOF_TO_PHOTON).reshape(16)


def ideal_hyper_state() -> np.ndarray:
    """|Φ+> ⊗ |φ+> as a 16x16 density matrix."""
    return ket_to_dm(hyper_ket(bell_state("PhiPlus"), bell_state("PhiPlus", "spatial")))


def polarization_marginal(rho16) -> np.ndarray:
    return partial_trace(as_matrix(rho16), HYPER_REGISTER, POL)


def spatial_marginal(rho16) -> np.ndarray:
    return partial_trace(as_matrix(rho16), HYPER_REGISTER, SPA)
