import numpy as np
import pytest

from beamopt.irs import (IrsScenario, irs_alternating, irs_effective_channel, matched_filter, received_power)

from conftest import crandn


def brute_force(sc, step_deg=1.0):
    """Exhaustive phase grid for N_IRS = 2 with the optimal (matched) beamformer per grid point."""
    ph = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    P1, P2 = np.meshgrid(ph, ph, indexing="ij")
    E = np.stack([np.exp(1j * P1.ravel()), np.exp(1j * P2.ravel())], axis=1)
    C = (E * sc.h_irs.conj()) @ sc.H_bs + sc.h_d.conj()
    return sc.p_max * np.max(np.sum(np.abs(C) ** 2, axis=1))


def test_effective_channel_without_irs():
    hd = np.array([1 + 1j, 2.0])
    sc = IrsScenario(np.zeros(0), hd, np.zeros((0, 2)))
    assert np.array_equal(irs_effective_channel(sc, []), hd.conj())


def test_effective_channel_zero_reflection(rng):
    sc = IrsScenario(np.zeros(3), crandn(rng, 2), crandn(rng, 3, 2))
    assert np.allclose(irs_effective_channel(sc, rng.uniform(0, 6, 3)), sc.h_d.conj())


def test_effective_channel_single_element_hand_expansion(rng):
    sc = IrsScenario(crandn(rng, 1), crandn(rng, 3), crandn(rng, 1, 3))
    psi = 0.77
    ref = np.conj(sc.h_irs[0]) * np.exp(1j * psi) * sc.H_bs[0] + sc.h_d.conj()
    assert np.allclose(irs_effective_channel(sc, [psi]), ref, atol=1e-15)


def test_scalar_co_phasing():
    sc = IrsScenario([0.6 - 0.2j], [0.0], [[1.5j]], p_max=2.0)
    sol = irs_alternating(sc)
    assert sol.objective == pytest.approx(2.0 * abs(0.6 - 0.2j) ** 2 * 1.5**2, rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_matches_phase_grid_brute_force(seed):
    sc = IrsScenario.random(2, 2, np.random.default_rng(seed), p_max=1.5, direct_gain=0.3)
    sol = irs_alternating(sc, rng=np.random.default_rng(seed))
    assert sol.objective >= 0.98 * brute_force(sc)


def test_trace_monotone_and_constraints():
    rng = np.random.default_rng(3)
    for _ in range(30):
        sc = IrsScenario.random(4, 16, rng, p_max=rng.uniform(0.5, 3.0), direct_gain=0.1)
        sol = irs_alternating(sc, rng=rng)
        assert all(b >= a for a, b in zip(sol.trace, sol.trace[1:]))
        assert np.linalg.norm(sol.f) <= np.sqrt(sc.p_max) + 1e-10
        assert sol.objective == pytest.approx(received_power(sc, sol.phases, sol.f), rel=1e-10)
        assert sol.status == "ok"


def test_beats_random_phases_and_no_irs():
    rng = np.random.default_rng(4)
    for _ in range(30):
        sc = IrsScenario.random(4, 8, rng, direct_gain=rng.uniform(0.01, 2.0))
        sol = irs_alternating(sc, rng=rng)
        no_irs = sc.p_max * np.linalg.norm(sc.h_d) ** 2
        c = irs_effective_channel(sc, rng.uniform(0, 2 * np.pi, 8))
        random_phase = sc.p_max * np.linalg.norm(c) ** 2
        assert sol.objective >= no_irs
        assert sol.objective >= random_phase
        assert sol.objective >= max(sol.start_objectives)


def test_matched_filter_optimal_for_fixed_phases(rng):
    sc = IrsScenario.random(4, 6, rng, p_max=2.0)
    phases = rng.uniform(0, 2 * np.pi, 6)
    c = irs_effective_channel(sc, phases)
    f = matched_filter(c, np.sqrt(sc.p_max))
    F = crandn(rng, 100_000, 4)
    F *= np.sqrt(sc.p_max) * rng.uniform(0, 1, (100_000, 1)) ** 0.25 / np.linalg.norm(F, axis=1, keepdims=True)
    assert np.max(np.abs(F @ c) ** 2) <= received_power(sc, phases, f)


def test_zero_channels_degenerate_status():
    sc = IrsScenario(np.zeros(3), np.zeros(2), np.zeros((3, 2)))
    sol = irs_alternating(sc)
    assert sol.objective == 0.0
    assert sol.status.startswith("degenerate")


def test_literal_norm_budget(rng):
    sc = IrsScenario.random(3, 4, rng, p_max=4.0)
    power = irs_alternating(sc, rng=np.random.default_rng(0))
    literal = irs_alternating(sc, rng=np.random.default_rng(0), literal_norm=True)
    assert np.linalg.norm(power.f) == pytest.approx(2.0)
    assert np.linalg.norm(literal.f) == pytest.approx(4.0)
    assert literal.objective == pytest.approx(4.0 * power.objective, rel=1e-9)


def test_phases_unit_modulus_by_construction(rng):
    sol = irs_alternating(IrsScenario.random(2, 5, rng))
    assert sol.phases.dtype == float
    assert np.allclose(np.abs(np.exp(1j * sol.phases)), 1.0)


def test_from_dict_forms():
    d1 = {"h_irs": {"re": [1, 0], "im": [0, 1]}, "h_d": {"re": [1], "im": [0]},
          "H_bs": {"re": [[1], [2]], "im": [[0], [0]]}, "p_max": 2.0}
    d2 = {"h_irs": [1, 0, 0, 1], "h_d": [1, 0], "H_bs": [[1, 0], [2, 0]], "p_max": 2.0}
    a, b = IrsScenario.from_dict(d1), IrsScenario.from_dict(d2)
    assert np.array_equal(a.h_irs, b.h_irs)
    assert np.array_equal(a.H_bs, b.H_bs)
    assert a.n_irs == 2 and a.n_tx == 1
    with pytest.raises(ValueError):
        IrsScenario([1.0], [1.0], [[1.0]], p_max=0.0)
