import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ringcurrent import analytics
from ringcurrent.errors import DegeneratePairError, DomainError
from ringcurrent.evolve import evolve_bare
from ringcurrent.ring import (
    RingSpec,
    WindingTarget,
    bare_hamiltonian,
    current_operator,
    current_state,
    eigenenergy,
    superposition_state,
)


def expectation(op, psi):
    return np.vdot(psi, op @ psi).real


def test_current_closed_examples(ring8):
    assert analytics.current_closed(ring8, 1) == pytest.approx(0.25 * np.sin(np.pi / 4), abs=1e-15)
    assert analytics.current_closed(ring8, 4) == pytest.approx(0.0, abs=1e-15)
    assert analytics.current_closed(ring8, -3) == pytest.approx(-analytics.current_closed(ring8, 3), abs=1e-15)


@pytest.mark.parametrize("L", range(3, 13))
def test_contiguous_superposition_current_matches_expectation(L):
    ring = RingSpec.unit_hopping(L)
    I = current_operator(ring)
    for M in range(1, L + 1):
        target = WindingTarget(tuple(range(1, M + 1)))
        direct = expectation(I, superposition_state(ring, target))
        assert analytics.superposition_current_closed(ring, target) == pytest.approx(direct, abs=1e-12)
        weighted = sum(analytics.current_closed(ring, ell) for ell in range(1, M + 1)) / M
        assert analytics.contiguous_current_closed(ring, M) == pytest.approx(weighted, abs=1e-12)
    assert analytics.contiguous_current_closed(ring, L) == pytest.approx(0.0, abs=1e-12)
    assert analytics.contiguous_current_closed(ring, L - 1) == pytest.approx(0.0, abs=1e-12)
    assert analytics.contiguous_current_closed(ring, 1) == pytest.approx(analytics.current_closed(ring, 1), abs=1e-15)


@given(st.lists(st.integers(1, 10), min_size=1, max_size=5, unique=True), st.integers(0, 2**31))
def test_weighted_superposition_current(windings, seed):
    ring = RingSpec.unit_hopping(10)
    gen = np.random.default_rng(seed)
    weights = tuple(gen.normal(size=len(windings)) + 1j * gen.normal(size=len(windings)))
    target = WindingTarget(tuple(windings), weights)
    direct = expectation(current_operator(ring), superposition_state(ring, target))
    assert analytics.superposition_current_closed(ring, target) == pytest.approx(direct, abs=1e-12)


def test_population_profile_examples(ring8):
    assert [analytics.population_profile_closed(ring8, 1, j) for j in range(1, 9)] == pytest.approx([1 / 8] * 8)
    assert analytics.population_profile_closed(ring8, 2, 8) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(DomainError):
        analytics.population_profile_closed(ring8, 9, 1)


@pytest.mark.parametrize("L", range(3, 13))
def test_population_profile_sums_to_one_and_matches_state(L):
    ring = RingSpec.unit_hopping(L)
    for M in range(1, L + 1):
        profile = np.array([analytics.population_profile_closed(ring, M, j) for j in range(1, L + 1)])
        assert profile.sum() == pytest.approx(1.0, abs=1e-12)
        P = np.abs(superposition_state(ring, WindingTarget(tuple(range(1, M + 1))))) ** 2
        assert np.max(np.abs(P - profile)) < 1e-12


def test_beat_frequency_properties(ring8):
    assert analytics.beat_frequency(ring8, 1, 2) == -analytics.beat_frequency(ring8, 2, 1)
    for L in range(3, 13):
        assert analytics.beat_frequency(RingSpec.unit_hopping(L), 1, L - 1) == 0.0
    with pytest.raises(DegeneratePairError):
        analytics.beat_frequency(ring8, 1, 9)


def test_beat_frequency_matches_diagonalization(ring8):
    w, V = np.linalg.eigh(bare_hamiltonian(ring8))
    # pick the numerical eigenvalues closest to the plane waves of winding 1 and 2
    e1 = w[np.argmax(np.abs(V.conj().T @ current_state(ring8, 1)))]
    e2 = w[np.argmax(np.abs(V.conj().T @ current_state(ring8, 2)))]
    assert analytics.beat_frequency(ring8, 1, 2) == pytest.approx(e1 - e2, abs=1e-10)


def test_two_state_population_examples(ring8):
    j = np.arange(1, 9)
    P0 = analytics.two_state_population(ring8, 1, 2, j, 0.0)
    assert np.argmax(P0) == 7 and P0[7] == pytest.approx(2 / 8)
    omega = analytics.beat_frequency(ring8, 1, 2)
    for n in range(1, 8):
        tau = 2 * np.pi * n / (8 * abs(omega))
        P = analytics.two_state_population(ring8, 1, 2, j, tau)
        assert np.argmax(P) + 1 == 8 - n
        assert P.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("pair", [(1, 2), (2, 5), (3, 1), (-1, -2)])
def test_two_state_population_integrates_exact_evolution(pair):
    ring = RingSpec.unit_hopping(8)
    a, b = pair
    psi0 = superposition_state(ring, WindingTarget(pair))
    times = np.linspace(0, 5, 41)
    traj = evolve_bare(psi0, ring, times)
    j = np.arange(1, 9)
    closed = analytics.two_state_population(ring, a, b, j[None, :], times[:, None])
    assert np.max(np.abs(np.abs(traj.states) ** 2 - closed)) < 1e-10


def test_qsl_report(ring8):
    report = analytics.qsl(ring8, 1, 2)
    omega = analytics.beat_frequency(ring8, 1, 2)
    assert report.tau_mt * abs(omega) == pytest.approx(np.pi, rel=1e-14)
    assert report.tau_qsl == report.tau_mt
    assert report.mean_energy == pytest.approx(0.5 * (eigenenergy(ring8, 1) + eigenenergy(ring8, 2)))
    with pytest.raises(DegeneratePairError):
        analytics.qsl(ring8, 1, 7)


@pytest.mark.parametrize("L", range(3, 13))
def test_qsl_is_mandelstam_tamm_for_all_pairs(L):
    ring = RingSpec.unit_hopping(L)
    for a in range(1, L + 1):
        for b in range(a + 1, L + 1):
            if (a + b) % L == 0:
                continue
            r = analytics.qsl(ring, a, b)
            assert r.tau_qsl == r.tau_mt >= r.tau_ml > 0


def test_blob_velocity(ring8):
    v = analytics.blob_velocity(ring8, 1, 2)
    assert v * analytics.translation_time(ring8, 1, 2) == pytest.approx(ring8.spacing, rel=1e-14)
    assert analytics.blob_velocity(ring8, 1, 7) == 0.0
    with pytest.raises(DegeneratePairError):
        analytics.translation_time(ring8, 1, 7)


def test_population_peak_advances_one_site_per_translation_time(ring8):
    psi0 = superposition_state(ring8, WindingTarget((1, 2)))
    tau = analytics.translation_time(ring8, 1, 2)
    traj = evolve_bare(psi0, ring8, tau * np.arange(9))
    peaks = [int(np.argmax(np.abs(s) ** 2)) + 1 for s in traj.states]
    assert peaks == [8, 7, 6, 5, 4, 3, 2, 1, 8]
