"""Simulated two-qubit tomography: local Pauli settings, photon counting, linear inversion."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace

import numpy as np

from .channels import SX, SZ, I2
from .qmath import SYNTHETIC_TOL, as_matrix, dagger, eig_hermitian, matrix_to_dict, require_physical

SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}
LABELS = "IXYZ"
SETTINGS: tuple[tuple[str, str], ...] = tuple(itertools.product("XYZ", repeat=2))
OUTCOMES: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))

_S = 1 / np.sqrt(2)
# row k is the eigenvector for outcome k (0 -> +1, 1 -> -1)
_BASES = {
    "Z": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "Y": np.array([[_S, 1j * _S], [_S, -1j * _S]], dtype=complex),
}


@dataclass(frozen=True)
class CountingModel:
    """Photon-counting parameters for one tomography run.

    ``pair_rate`` is the detected coincidence rate before detector
    inefficiency is applied; the mean number of events per setting is
    ``pair_rate * integration_time * detector_efficiency**2``. Dark counts add
    an accidental background of ``dark_rate**2 * coincidence_window`` per
    second to every outcome.
    """

    pair_rate: float = 600.0
    integration_time: float = 60.0
    detector_efficiency: float = 1.0
    dark_rate: float = 0.0
    coincidence_window: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        for name in ("pair_rate", "integration_time", "dark_rate", "coincidence_window"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in [0, 1]")

    @property
    def mean_events(self) -> float:
        return self.pair_rate * self.integration_time * self.detector_efficiency**2

    @property
    def background_per_outcome(self) -> float:
        return self.dark_rate**2 * self.coincidence_window * self.integration_time


@dataclass(frozen=True)
class TomographyRecord:
    settings: tuple[tuple[str, str], ...]
    counts: np.ndarray  # (len(settings), 4), outcome order OUTCOMES
    exact: bool = False
    reconstructed: np.ndarray | None = None
    physical: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "settings": ["".join(s) for s in self.settings],
            "outcomes": ["".join(map(str, o)) for o in OUTCOMES],
            "counts": self.counts.tolist(),
            "exact": self.exact,
            "reconstructed": matrix_to_dict(self.reconstructed) if self.reconstructed is not None else None,
            "physical": matrix_to_dict(self.physical) if self.physical is not None else None,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "outcome", "count"])
        for s, row in zip(self.settings, self.counts):
            for o, c in zip(OUTCOMES, row):
                w.writerow(["".join(s), "".join(map(str, o)), repr(c.item())])
        return buf.getvalue()


def pauli_operator(i: str, j: str) -> np.ndarray:
    return np.kron(PAULIS[i], PAULIS[j])


def pauli_expectations(rho) -> np.ndarray:
    """4x4 real table ``E[i, j] = <sigma_i ⊗ sigma_j>`` with i, j over I, X, Y, Z."""
    rho = as_matrix(rho)
    out = np.empty((4, 4))
    for a, i in enumerate(LABELS):
        for b, j in enumerate(LABELS):
            out[a, b] = np.real(np.trace(rho @ pauli_operator(i, j)))
    return out


def born_probabilities(rho, setting: tuple[str, str]) -> np.ndarray:
    rho = as_matrix(rho)
    ba, bb = _BASES[setting[0]], _BASES[setting[1]]
    probs = np.empty(4)
    for k, (oa, ob) in enumerate(OUTCOMES):
        v = np.kron(ba[oa], bb[ob])
        probs[k] = np.real(np.vdot(v, rho @ v))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def simulate_counts(rho, cm: CountingModel, *, exact: bool = False, rng: np.random.Generator | None = None) -> TomographyRecord:
    """Counts for all nine local Pauli settings.

    The number of events per setting is Poisson distributed and split over
    the four outcomes multinomially. ``exact=True`` skips sampling and stores
    the expected counts (``mean_events`` times the Born probabilities, floats).
    """
    rho = require_physical(rho, SYNTHETIC_TOL)
    if rng is None:
        rng = np.random.default_rng(cm.seed)
    counts = []
    for setting in SETTINGS:
        p = born_probabilities(rho, setting)
        if exact:
            counts.append(p * cm.mean_events)
            continue
        n = rng.poisson(cm.mean_events)
        row = rng.multinomial(n, p)
        if cm.background_per_outcome > 0:
            row = row + rng.poisson(cm.background_per_outcome, size=4)
        counts.append(row)
    dtype = float if exact else np.int64
    return TomographyRecord(SETTINGS, np.asarray(counts, dtype=dtype), exact=exact)


def estimate_expectations(record: TomographyRecord) -> np.ndarray:
    """Pauli expectation estimates from relative frequencies.

    Single-qubit terms are averaged over every setting that measures that
    qubit in the required basis.
    """
    if set(record.settings) != set(SETTINGS):
        raise ValueError("record must contain all nine local Pauli settings")
    signs = np.array([[1 if o == 0 else -1 for o in oc] for oc in OUTCOMES])  # (4, 2)
    est = np.zeros((4, 4))
    n_a = np.zeros(4)
    n_b = np.zeros(4)
    for s, row in zip(record.settings, np.asarray(record.counts, dtype=float)):
        total = row.sum()
        if total <= 0:
            raise ValueError(f"setting {''.join(s)} has no counts")
        f = row / total
        a, b = LABELS.index(s[0]), LABELS.index(s[1])
        est[a, b] = f @ (signs[:, 0] * signs[:, 1])
        est[a, 0] += f @ signs[:, 0]
        est[0, b] += f @ signs[:, 1]
        n_a[a] += 1
        n_b[b] += 1
    est[1:, 0] /= n_a[1:]
    est[0, 1:] /= n_b[1:]
    est[0, 0] = 1.0
    return est


def linear_inversion(record: TomographyRecord) -> np.ndarray:
    """``rho = 1/4 sum_ij E_ij sigma_i ⊗ sigma_j``; Hermitian and unit trace, possibly not PSD."""
    est = estimate_expectations(record)
    rho = np.zeros((4, 4), dtype=complex)
    for a, i in enumerate(LABELS):
        for b, j in enumerate(LABELS):
            rho += est[a, b] * pauli_operator(i, j)
    rho /= 4
    return 0.5 * (rho + dagger(rho))


def project_physical(rho) -> np.ndarray:
    """Nearest density matrix in Frobenius norm.

    Keeps the eigenvectors and projects the eigenvalues onto the probability
    simplex (negative weight is clipped and the deficit spread evenly over
    the surviving eigenvalues).
    """
    spec = eig_hermitian(rho)
    lam = spec.eigenvalues  # descending
    cums = np.cumsum(lam)
    k = np.arange(1, lam.size + 1)
    shifts = (cums - 1.0) / k
    rho_idx = np.nonzero(lam - shifts > 0)[0][-1]
    new = np.clip(lam - shifts[rho_idx], 0.0, None)
    v = spec.eigenvectors
    out = (v * new) @ dagger(v)
    return 0.5 * (out + dagger(out))


def reconstruct(record: TomographyRecord) -> TomographyRecord:
    """Fill in the linear-inversion estimate and its physical projection."""
    est = linear_inversion(record)
    return replace(record, reconstructed=est, physical=project_physical(est))


def tomograph(rho, cm: CountingModel, *, exact: bool = False, rng: np.random.Generator | None = None) -> TomographyRecord:
    return reconstruct(simulate_counts(rho, cm, exact=exact, rng=rng))
