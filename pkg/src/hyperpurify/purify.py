"""Single-copy purification: intra-photon CNOT followed by polarization post-selection.

Each photon's spatial qubit controls its own polarization qubit. Keeping the
events where both photons leave with the same polarization (both H: D1D2,
both V: D3D4) and tracing out polarization leaves the purified spatial pair,
which the optics convert back to polarization. That conversion is a formal
relabeling here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import channels
from .qmath import (
    SYNTHETIC_TOL,
    dagger,
    fidelity_pure,
    kron,
    matrix_to_dict,
    partial_trace,
    require_physical,
)
from .states import HYPER_REGISTER, SPA, bell_state, polarization_marginal, spatial_marginal

ALWAYS_DISCARD_THRESHOLD = 1e-15


def cnot_intra_photon() -> np.ndarray:
    """Per-photon CNOT in the (pol, spa) ordering: ``|p, s> -> |p xor s, s>``."""
    u = np.zeros((4, 4), dtype=complex)
    for p in (0, 1):
        for s in (0, 1):
            u[2 * (p ^ s) + s, 2 * p + s] = 1.0
    return u


_CNOT2 = kron(cnot_intra_photon(), cnot_intra_photon())


def _pol_projector(a: int, b: int) -> np.ndarray:
    """Projector onto A-pol = a, B-pol = b in the 16-dim register."""
    pa = np.zeros((2, 2))
    pa[a, a] = 1
    pb = np.zeros((2, 2))
    pb[b, b] = 1
    i2 = np.eye(2)
    return kron(kron(kron(pa, i2), pb), i2)


_P_HH = _pol_projector(0, 0)
_P_VV = _pol_projector(1, 1)
_P_HV = _pol_projector(0, 1)
_P_VH = _pol_projector(1, 0)


def predict_fidelity(f1: float, f2: float) -> float:
    """Closed-form purified fidelity ``F1 F2 / (F1 F2 + (1-F1)(1-F2))``."""
    for f in (f1, f2):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fidelity {f} outside [0, 1]")
    num = f1 * f2
    den = num + (1 - f1) * (1 - f2)
    if den < ALWAYS_DISCARD_THRESHOLD:
        raise ZeroDivisionError(f"no surviving events for F1={f1}, F2={f2}")
    return num / den


def success_probability(f1: float, f2: float) -> float:
    for f in (f1, f2):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fidelity {f} outside [0, 1]")
    return f1 * f2 + (1 - f1) * (1 - f2)


@dataclass
class PurificationOutcome:
    """Result of one purification round.

    ``output`` is the purified pair (spatial modes relabeled as polarization)
    and is ``None`` for an always-discard input. ``discard_state`` is the
    normalized spatial state of the rejected D1D4/D2D3 events, kept for
    diagnostics.
    """

    output: np.ndarray | None
    success_probability: float
    branch_probabilities: dict[str, float]
    predicted_fidelity: float | None
    achieved_fidelity: float | None
    input_fidelities: tuple[float, float]
    discard_state: np.ndarray | None = None
    hadamard_converted: bool = False
    relabeling: str = "spatial->polarization"
    notes: list[str] = field(default_factory=list)

    @property
    def always_discard(self) -> bool:
        return self.output is None

    def to_dict(self) -> dict:
        return {
            "success_probability": self.success_probability,
            "branch_probabilities": dict(self.branch_probabilities),
            "predicted_fidelity": self.predicted_fidelity,
            "achieved_fidelity": self.achieved_fidelity,
            "input_fidelities": {"polarization": self.input_fidelities[0], "spatial": self.input_fidelities[1]},
            "always_discard": self.always_discard,
            "hadamard_converted": self.hadamard_converted,
            "relabeling": self.relabeling,
            "output_matrix": matrix_to_dict(self.output) if self.output is not None else None,
        }


def _trace(m: np.ndarray) -> float:
    return float(np.real(np.trace(m)))


def purify(rho16, *, check: bool = True, tol: float = SYNTHETIC_TOL) -> PurificationOutcome:
    """Apply the CNOT on both photons and post-select equal polarizations."""
    rho = require_physical(rho16, tol, "input state") if check else np.asarray(rho16, dtype=complex)
    if rho.shape != (16, 16):
        raise ValueError(f"purify expects a 16x16 state, got {rho.shape}")

    phi_plus = bell_state("PhiPlus")
    f1 = fidelity_pure(polarization_marginal(rho), phi_plus)
    f2 = fidelity_pure(spatial_marginal(rho), phi_plus)
    try:
        predicted = predict_fidelity(min(max(f1, 0.0), 1.0), min(max(f2, 0.0), 1.0))
    except ZeroDivisionError:
        predicted = None

    sigma = _CNOT2 @ rho @ dagger(_CNOT2)
    hh = _P_HH @ sigma @ _P_HH
    vv = _P_VV @ sigma @ _P_VV
    p_hh, p_vv = _trace(hh), _trace(vv)
    rejected = _P_HV @ sigma @ _P_HV + _P_VH @ sigma @ _P_VH
    p_discard = _trace(rejected)
    branches = {"D1D2": p_hh, "D3D4": p_vv, "discard": p_discard}
    p_success = p_hh + p_vv

    discard_state = None
    if p_discard > ALWAYS_DISCARD_THRESHOLD:
        discard_state = partial_trace(rejected, HYPER_REGISTER, SPA) / p_discard

    if p_success < ALWAYS_DISCARD_THRESHOLD:
        return PurificationOutcome(
            output=None,
            success_probability=p_success,
            branch_probabilities=branches,
            predicted_fidelity=predicted,
            achieved_fidelity=None,
            input_fidelities=(f1, f2),
            discard_state=discard_state,
            notes=["always-discard: no events reach D1D2 or D3D4"],
        )

    out = partial_trace(hh + vv, HYPER_REGISTER, SPA) / p_success
    return PurificationOutcome(
        output=out,
        success_probability=p_success,
        branch_probabilities=branches,
        predicted_fidelity=predicted,
        achieved_fidelity=fidelity_pure(out, phi_plus),
        input_fidelities=(f1, f2),
        discard_state=discard_state,
    )


def purify_with_conversion(
    rho16, flavor: Literal["BF", "PF"], *, check: bool = True, tol: float = SYNTHETIC_TOL
) -> PurificationOutcome:
    """Phase-flip noise is rotated into bit-flip noise by Hadamards before purifying."""
    if flavor not in ("BF", "PF"):
        raise ValueError(f"flavor must be 'BF' or 'PF', not {flavor!r}")
    rho = require_physical(rho16, tol, "input state") if check else rho16
    if flavor == "BF":
        return purify(rho, check=False)
    outcome = purify(channels.hadamard_convert(rho, check=False), check=False)
    outcome.hadamard_converted = True
    return outcome
