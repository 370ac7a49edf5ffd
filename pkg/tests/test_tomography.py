import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperpurify.qmath import UnphysicalStateError, fidelity_pure, validate_state
from hyperpurify.states import bell_projector, bell_state, mixture
from hyperpurify.tomography import (
    LABELS,
    SETTINGS,
    CountingModel,
    TomographyRecord,
    born_probabilities,
    estimate_expectations,
    linear_inversion,
    pauli_expectations,
    project_physical,
    simulate_counts,
    tomograph,
)

from conftest import random_density, random_hermitian


def test_bell_state_expectations():
    e = pauli_expectations(bell_projector("PhiPlus"))
    expected = np.zeros((4, 4))
    expected[0, 0], expected[1, 1], expected[2, 2], expected[3, 3] = 1, 1, -1, 1
    np.testing.assert_allclose(e, expected, atol=1e-15)
    assert LABELS == "IXYZ"
    assert len(SETTINGS) == 9


def test_born_probabilities_in_z_basis():
    p = born_probabilities(mixture(0.7), ("Z", "Z"))
    np.testing.assert_allclose(p, [0.35, 0.15, 0.15, 0.35], atol=1e-15)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_exact_counts_round_trip(seed):
    rho = random_density(4, np.random.default_rng(seed))
    rec = tomograph(rho, CountingModel(), exact=True)
    assert rec.exact
    assert np.max(np.abs(rec.reconstructed - rho)) <= 1e-10
    assert np.max(np.abs(rec.physical - rho)) <= 1e-10


def test_doubling_counts_changes_nothing(rng):
    rec = simulate_counts(random_density(4, rng), CountingModel(), rng=rng)
    doubled = TomographyRecord(rec.settings, 2 * rec.counts)
    np.testing.assert_allclose(linear_inversion(doubled), linear_inversion(rec), atol=1e-15)


def test_projection_clips_negative_weight():
    np.testing.assert_allclose(project_physical(np.diag([1.1, -0.1])), np.diag([1.0, 0.0]), atol=1e-15)
    np.testing.assert_allclose(
        project_physical(np.diag([0.6, 0.5, -0.05, -0.05])), np.diag([0.55, 0.45, 0, 0]), atol=1e-14
    )


def test_projection_fixes_valid_states(rng):
    rho = random_density(4, rng)
    np.testing.assert_allclose(project_physical(rho), rho, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_projection_output_is_physical(seed):
    h = random_hermitian(4, np.random.default_rng(seed), scale=0.3)
    h = h - np.eye(4) * (np.trace(h).real - 1) / 4
    assert validate_state(project_physical(h), 1e-10)


def test_seeded_counts_are_reproducible():
    cm = CountingModel(seed=7)
    a = simulate_counts(mixture(0.8), cm)
    b = simulate_counts(mixture(0.8), cm)
    np.testing.assert_array_equal(a.counts, b.counts)
    c = simulate_counts(mixture(0.8), CountingModel(seed=8))
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.dtype == np.int64


def test_linear_inversion_is_unbiased():
    truth = mixture(0.771)
    cm = CountingModel(pair_rate=100, integration_time=10)
    rng = np.random.default_rng(3)
    mean = np.mean([linear_inversion(simulate_counts(truth, cm, rng=rng)) for _ in range(300)], axis=0)
    # per-entry sd is about 1/sqrt(1000 * 300)
    np.testing.assert_allclose(mean, truth, atol=0.01)


def test_projection_costs_little_fidelity():
    truth = bell_state("PhiPlus")
    cm = CountingModel()
    for seed in range(20):
        rec = tomograph(bell_projector("PhiPlus"), cm, rng=np.random.default_rng(seed))
        assert fidelity_pure(rec.physical, truth) >= fidelity_pure(rec.reconstructed, truth) - 0.02


def test_counting_model_rates():
    cm = CountingModel(pair_rate=600, integration_time=60, detector_efficiency=0.5, dark_rate=1000,
                       coincidence_window=2e-9)
    assert cm.mean_events == pytest.approx(9000)
    assert cm.background_per_outcome == pytest.approx(1000**2 * 2e-9 * 60)
    with pytest.raises(ValueError):
        CountingModel(detector_efficiency=1.5)
    with pytest.raises(ValueError):
        CountingModel(pair_rate=-1)


def test_dark_counts_raise_every_outcome():
    cm = CountingModel(pair_rate=0.001, integration_time=1000, dark_rate=1e5, coincidence_window=1e-8)
    rec = simulate_counts(bell_projector("PhiPlus"), cm)
    # 100 accidentals per outcome swamp the single expected pair
    assert np.all(rec.counts >= 50)


def test_record_needs_all_settings():
    rec = simulate_counts(mixture(0.9), CountingModel())
    partial = TomographyRecord(rec.settings[:-1], rec.counts[:-1])
    with pytest.raises(ValueError):
        estimate_expectations(partial)


def test_unphysical_truth_rejected():
    with pytest.raises(UnphysicalStateError):
        simulate_counts(np.diag([1.2, -0.2, 0, 0]), CountingModel())


def test_record_serialization():
    rec = tomograph(mixture(0.9), CountingModel(seed=1))
    rows = list(csv.reader(io.StringIO(rec.to_csv())))
    assert rows[0] == ["setting", "outcome", "count"]
    assert len(rows) == 1 + 9 * 4
    assert rows[1][:2] == ["".join(SETTINGS[0]), "00"]
    assert sum(int(r[2]) for r in rows[1:5]) == rec.counts[0].sum()
    d = rec.to_dict()
    assert d["settings"][0] == "".join(SETTINGS[0])
    assert d["physical"]["rows"] == 4
