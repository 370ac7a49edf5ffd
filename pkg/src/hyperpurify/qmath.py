"""Small dense complex linear algebra for density matrices of up to 16 dimensions.

Matrices are plain ``numpy`` complex arrays. The only non-trivial routine is
:func:`eig_hermitian`, a cyclic Jacobi eigensolver for Hermitian matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

#: default physicality tolerance for synthetic states
SYNTHETIC_TOL = 1e-9
#: physicality tolerance for experimentally reconstructed matrices (3-decimal rounding)
EXPERIMENTAL_TOL = 0.02

_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


class DimensionError(ValueError):
    """Matrix shape does not match the declared layout."""


class NotHermitianError(ValueError):
    pass


class UnphysicalStateError(ValueError):
    """A density matrix failed the Hermitian / unit-trace / PSD check."""

    def __init__(self, verdict: "Verdict", what: str = "state"):
        self.verdict = verdict
        super().__init__(f"{what} is not physical: {'; '.join(verdict.violations)}")


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex array (copying); raise on empty or ragged input."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(a⊗b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l]``."""
    a = as_matrix(a)
    b = as_matrix(b)
    ra, ca = a.shape
    rb, cb = b.shape
    out = a[:, None, :, None] * b[None, :, None, :]
    return out.reshape(ra * rb, ca * cb)


def ket_to_dm(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


@dataclass(frozen=True)
class Register:
    """Ordered list of named subsystems; the first name is the most significant index."""

    names: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.dims):
            raise ValueError("names and dims differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate subsystem names in {self.names}")
        if any(d < 1 for d in self.dims):
            raise ValueError("subsystem dimensions must be positive")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < len(self.names):
                raise KeyError(name)
            return int(name)
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown subsystem {name!r}; have {self.names}") from None

    def sub(self, keep: Iterable[str | int]) -> "Register":
        idx = sorted({self.index(k) for k in keep})
        return Register(tuple(self.names[i] for i in idx), tuple(self.dims[i] for i in idx))


def partial_trace(rho, layout: Register, keep: Iterable[str | int]) -> np.ndarray:
    """Trace out every subsystem of ``layout`` not named in ``keep``.

    Kept subsystems appear in the result in layout order, regardless of the
    order they are listed in ``keep``.
    """
    rho = as_matrix(rho)
    n = layout.dim
    if rho.shape != (n, n):
        raise DimensionError(f"matrix shape {rho.shape} does not match layout dimension {n}")
    kept = sorted({layout.index(k) for k in keep})
    nsub = len(layout.dims)
    t = rho.reshape(layout.dims + layout.dims)

    # einsum labels: row index i, column index i+nsub; traced ones share a label
    row = list(range(nsub))
    col = [i if i not in kept else nsub + i for i in range(nsub)]
    out = [i for i in kept] + [nsub + i for i in kept]
    res = np.einsum(t, row + col, out)
    dk = int(np.prod([layout.dims[i] for i in kept])) if kept else 1
    return np.asarray(res).reshape(dk, dk)


def permute_subsystems(rho, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: result subsystem ``k`` is input subsystem ``order[k]``."""
    rho = as_matrix(rho)
    dims = tuple(dims)
    n = int(np.prod(dims))
    if rho.shape != (n, n) or sorted(order) != list(range(len(dims))):
        raise DimensionError("bad permutation for this matrix")
    k = len(dims)
    t = rho.reshape(dims + dims)
    t = t.transpose(list(order) + [k + o for o in order])
    return t.reshape(n, n)


@dataclass(frozen=True)
class HermitianSpectrum:
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray | None  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every index pair once per sweep, n/2 disjoint pairs per step."""
    m = n + (n % 2)
    players = list(range(m))
    steps = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        steps.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return steps


def eig_hermitian(a, herm_tol: float = 1e-9, vectors: bool = True) -> HermitianSpectrum:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary and then applies the real symmetric Jacobi rotation.
    Pivots are visited in round-robin order so that every step rotates n/2
    disjoint pairs at once; a sweep still touches each pair exactly once.
    Sweeps stop once the off-diagonal Frobenius norm drops below 1e-12
    (relative to the matrix norm when that exceeds one).

    With ``vectors=False`` the eigenvector matrix is not accumulated and the
    returned ``eigenvectors`` is ``None``.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"eig_hermitian needs a square matrix, got {a.shape}")
    err = hermiticity_error(a)
    if err > herm_tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {err:.3g})")

    A = 0.5 * (a + dagger(a))
    V = np.eye(n, dtype=complex) if vectors else None
    tol = _JACOBI_TOL * max(1.0, float(np.linalg.norm(A)))
    skip = tol / (4 * n)
    offdiag = ~np.eye(n, dtype=bool)
    steps = _round_robin(n) if n > 1 else []

    for _ in range(_JACOBI_MAX_SWEEPS):
        if float(np.linalg.norm(A[offdiag])) < tol:
            break
        for p, q in steps:
            b = A[p, q]
            mag = np.abs(b)
            live = mag >= skip
            if not live.any():
                continue
            p, q, b, mag = p[live], q[live], b[live], mag[live]
            phase = np.conj(b / mag)
            zeta = (A[q, q].real - A[p, p].real) / (2.0 * mag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(zeta * zeta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            G = np.eye(n, dtype=complex)
            G[p, p] = c
            G[p, q] = s
            G[q, p] = -s * phase
            G[q, q] = c * phase
            A = dagger(G) @ A @ G
            A[p, q] = 0.0
            A[q, p] = 0.0
            if V is not None:
                V = V @ G
    else:
        raise ArithmeticError("Jacobi eigensolver did not converge")

    w = np.real(np.diag(A)).copy()
    order = np.argsort(-w, kind="stable")
    return HermitianSpectrum(w[order], V[:, order] if V is not None else None)


def sqrtm_psd(a) -> np.ndarray:
    """Square root of a positive semidefinite matrix; tiny negative eigenvalues clip to zero."""
    spec = eig_hermitian(a)
    lam = np.sqrt(np.clip(spec.eigenvalues, 0.0, None))
    v = spec.eigenvectors
    return (v * lam) @ dagger(v)


def fidelity_pure(rho, target) -> float:
    """``<target|rho|target>`` for a normalized state vector ``target``."""
    rho = as_matrix(rho)
    v = np.asarray(target, dtype=complex).reshape(-1)
    if v.shape[0] != rho.shape[0]:
        raise DimensionError("target length does not match matrix dimension")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"target vector is not normalized (norm {norm:.12g})")
    return float(np.real(np.vdot(v, rho @ v)))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2`` between two density matrices."""
    r = sqrtm_psd(as_matrix(rho))
    inner = r @ as_matrix(sigma) @ r
    inner = 0.5 * (inner + dagger(inner))
    lam = np.clip(eig_hermitian(inner, vectors=False).eigenvalues, 0.0, None)
    return float(np.sum(np.sqrt(lam)) ** 2)


@dataclass
class Verdict:
    hermiticity_error: float
    trace_error: float
    min_eigenvalue: float
    tol: float
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid

    def as_dict(self) -> dict:
        return {
            "valid": self.valid,
            "hermiticity_error": self.hermiticity_error,
            "trace_error": self.trace_error,
            "min_eigenvalue": self.min_eigenvalue,
            "tol": self.tol,
            "violations": list(self.violations),
        }


def validate_state(rho, tol: float = SYNTHETIC_TOL) -> Verdict:
    """Check Hermiticity, unit trace and positivity; never raises on a square input."""
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    herr = hermiticity_error(rho)
    terr = abs(complex(np.trace(rho)) - 1.0)
    # spectrum of the Hermitian part so a slightly asymmetric input still gets a verdict
    lam_min = float(eig_hermitian(0.5 * (rho + dagger(rho)), herm_tol=np.inf, vectors=False).eigenvalues[-1])
    violations = []
    if herr > tol:
        violations.append(f"not Hermitian: max |rho - rho^H| = {herr:.3g}")
    if terr > tol:
        violations.append(f"trace differs from 1 by {terr:.3g}")
    if lam_min < -tol:
        violations.append(f"negative eigenvalue {lam_min:.3g}")
    return Verdict(herr, terr, lam_min, tol, violations)


def require_physical(rho, tol: float = SYNTHETIC_TOL, what: str = "state") -> np.ndarray:
    rho = as_matrix(rho)
    verdict = validate_state(rho, tol)
    if not verdict:
        raise UnphysicalStateError(verdict, what)
    return rho


def symmetrize(rho) -> np.ndarray:
    rho = as_matrix(rho)
    return 0.5 * (rho + dagger(rho))


# -- fixture file format: {"rows", "cols", "re": [...], "im": [...]} row-major


def matrix_to_dict(m) -> dict:
    m = as_matrix(m)
    return {
        "rows": m.shape[0],
        "cols": m.shape[1],
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        rows, cols = int(d["rows"]), int(d["cols"])
        re, im = d["re"], d["im"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix record: {exc}") from None
    if rows < 1 or cols < 1:
        raise DimensionError("rows and cols must be at least 1")
    if len(re) != rows * cols or len(im) != rows * cols:
        raise DimensionError(f"expected {rows * cols} entries, got re={len(re)} im={len(im)}")
    return (np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)).reshape(rows, cols)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_dict(json.load(fh))


def save_matrix(m, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(m), indent=2) + "\n")
