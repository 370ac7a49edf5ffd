import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperpurify.qmath import (
    DimensionError,
    NotHermitianError,
    Register,
    UnphysicalStateError,
    eig_hermitian,
    fidelity,
    fidelity_pure,
    ket_to_dm,
    kron,
    load_matrix,
    matrix_from_dict,
    matrix_to_dict,
    partial_trace,
    permute_subsystems,
    require_physical,
    save_matrix,
    sqrtm_psd,
    symmetrize,
    validate_state,
)

from conftest import random_density, random_hermitian

seeds = st.integers(0, 2**32 - 1)


def test_kron_matches_numpy(rng):
    a, b = random_hermitian(2, rng), random_hermitian(4, rng)
    np.testing.assert_allclose(kron(a, b), np.kron(a, b), atol=1e-15)


def test_kron_rejects_non_matrix():
    with pytest.raises(DimensionError):
        kron(np.zeros((2, 2, 2)), np.eye(2))


@given(seeds, st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_trace_of_kron_is_product(seed, m, n):
    r = np.random.default_rng(seed)
    a, b = random_density(m, r), random_density(n, r)
    assert np.trace(kron(a, b)) == pytest.approx(np.trace(a) * np.trace(b), abs=1e-12)


def test_register_lookup():
    reg = Register(("x", "y", "z"), (2, 3, 2))
    assert reg.dim == 12
    assert reg.index("y") == 1
    assert reg.index(2) == 2
    assert reg.sub(["z", "x"]).names == ("x", "z")
    with pytest.raises(KeyError):
        reg.index("w")


def test_partial_trace_of_product_recovers_factors(rng):
    a, b, c = random_density(2, rng), random_density(3, rng), random_density(2, rng)
    reg = Register(("a", "b", "c"), (2, 3, 2))
    rho = kron(kron(a, b), c)
    np.testing.assert_allclose(partial_trace(rho, reg, ["b"]), b, atol=1e-13)
    np.testing.assert_allclose(partial_trace(rho, reg, ["a", "c"]), kron(a, c), atol=1e-13)
    # kept subsystems come out in layout order regardless of request order
    np.testing.assert_allclose(partial_trace(rho, reg, ["c", "a"]), kron(a, c), atol=1e-13)
    assert partial_trace(rho, reg, []).shape == (1, 1)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(8), Register(("a", "b"), (2, 2)), ["a"])


def test_permute_subsystems_matches_swap(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    np.testing.assert_allclose(permute_subsystems(kron(a, b), (2, 3), (1, 0)), kron(b, a), atol=1e-14)


@given(seeds, st.integers(1, 16))
@settings(max_examples=60, deadline=None)
def test_eig_reconstructs(seed, n):
    a = random_hermitian(n, np.random.default_rng(seed))
    spec = eig_hermitian(a)
    assert np.all(np.diff(spec.eigenvalues) <= 1e-12)
    assert np.max(np.abs(spec.reconstruct() - a)) <= 1e-10
    v = spec.eigenvectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)


@given(seeds, st.integers(1, 16))
@settings(max_examples=30, deadline=None)
def test_eig_matches_lapack(seed, n):
    a = random_hermitian(n, np.random.default_rng(seed))
    ref = np.sort(np.linalg.eigvalsh(a))[::-1]
    np.testing.assert_allclose(eig_hermitian(a, vectors=False).eigenvalues, ref, atol=1e-10)


def test_eig_degenerate_spectrum():
    spec = eig_hermitian(np.diag([1.0, 1.0, 1.0, 0.0]).astype(complex))
    np.testing.assert_allclose(spec.eigenvalues, [1, 1, 1, 0], atol=1e-15)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_sqrtm_psd(rng):
    a = random_density(4, rng)
    s = sqrtm_psd(a)
    np.testing.assert_allclose(s @ s, a, atol=1e-10)


def test_fidelity_pure_rejects_unnormalized():
    with pytest.raises(ValueError):
        fidelity_pure(np.eye(2) / 2, np.array([1.0, 1.0]))


def test_fidelity_pure_agrees_with_uhlmann(rng):
    rho = random_density(4, rng)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    # sqrt of the rank-deficient inner matrix turns 1e-17 rounding into ~1e-9
    assert fidelity(rho, ket_to_dm(v)) == pytest.approx(fidelity_pure(rho, v), abs=1e-7)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_fidelity_bounds_and_symmetry(seed):
    r = np.random.default_rng(seed)
    a, b = random_density(4, r), random_density(4, r)
    f = fidelity(a, b)
    assert -1e-12 <= f <= 1 + 1e-12
    assert f == pytest.approx(fidelity(b, a), abs=1e-9)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-9)


def test_validate_state_reports_each_violation():
    bad = np.diag([1.1, -0.05, 0.0, 0.0]).astype(complex)
    bad[0, 1] = 0.01
    v = validate_state(bad, 1e-3)
    assert not v
    assert v.hermiticity_error == pytest.approx(0.01)
    assert v.trace_error == pytest.approx(0.05)
    assert v.min_eigenvalue < -0.04
    assert len(v.violations) == 3
    assert json.dumps(v.as_dict())


def test_validate_state_accepts_mixed(rng):
    assert validate_state(random_density(4, rng))
    assert validate_state(np.eye(4) / 4)


def test_require_physical_raises():
    with pytest.raises(UnphysicalStateError) as info:
        require_physical(np.diag([1.1, -0.1]))
    assert not info.value.verdict


def test_symmetrize_is_hermitian_part():
    m = np.array([[0.5, 0.1], [0.3, 0.5]])
    np.testing.assert_allclose(symmetrize(m), [[0.5, 0.2], [0.2, 0.5]])


def test_matrix_fixture_round_trip(tmp_path, rng):
    m = random_density(4, rng)
    np.testing.assert_array_equal(matrix_from_dict(matrix_to_dict(m)), m)
    path = tmp_path / "m.json"
    save_matrix(m, path)
    np.testing.assert_array_equal(load_matrix(path), m)


def test_matrix_from_dict_shape_checked():
    with pytest.raises(ValueError):
        matrix_from_dict({"rows": 2, "cols": 2, "re": [[1, 0]], "im": [[0, 0]]})

