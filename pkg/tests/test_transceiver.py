from __future__ import annotations

import math

import numpy as np
import pytest

from irssop.channel import sample_realization
from irssop.config import SystemParams
from irssop.errors import DegenerateChannelError
from irssop.transceiver import (
    SCENARIOS,
    IrsConfig,
    Scenario,
    coherent_sum,
    ess_select,
    full_selection,
    instant_snr_bob,
    instant_snr_eve,
    irs_optimal_phases,
    mrt_beamformer,
    random_select,
    scenario_from_id,
    secrecy_capacity,
    signal_chain_snr_bob,
    signal_chain_snr_eve,
)


def test_scenarios():
    assert scenario_from_id(3) == Scenario(bob_csi="outdated", eve_csi="perfect")
    assert [SCENARIOS[i].label for i in (1, 2, 3)] == ["1", "2", "3"]
    with pytest.raises(ValueError, match="Unknown scenario 4"):
        scenario_from_id(4)
    with pytest.raises(ValueError, match="`bob_csi` must be one of"):
        Scenario(bob_csi="stale", eve_csi="perfect")  # type: ignore[arg-type]


def test_optimal_phases_co_phase_every_path():
    rng = np.random.default_rng(0)
    h = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    b = np.exp(1j * rng.uniform(0, 2 * np.pi, 16))
    phases = irs_optimal_phases(h, b)
    s = coherent_sum(h, b, phases, full_selection(16))
    assert s.real == pytest.approx(np.abs(h).sum())
    assert s.imag == pytest.approx(0.0, abs=1e-12)


def test_optimal_phases_with_zero_channel():
    b = np.exp(1j * np.array([0.3, 1.2]))
    phases = irs_optimal_phases(np.zeros(2, dtype=complex), b)
    np.testing.assert_allclose(phases, [0.3, 1.2])


def test_ess_select_keeps_strongest_with_stable_ties():
    h = np.array([1.0, 3.0, -3.0, 2.0j])
    np.testing.assert_array_equal(ess_select(h, 2), [1, 2])
    np.testing.assert_array_equal(ess_select(h, 4), [1, 2, 3, 0])

    batch = np.array([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]])
    np.testing.assert_array_equal(ess_select(batch, 1), [[2], [0]])


@pytest.mark.parametrize("K", [0, 5])
def test_ess_select_rejects_out_of_range_k(K: int):
    with pytest.raises(ValueError, match="`K` must lie in"):
        ess_select(np.ones(4), K)


def test_random_select_draws_distinct_indices():
    rng = np.random.default_rng(3)
    chosen = random_select(10, 4, rng, size=(200,))
    assert chosen.shape == (200, 4)
    assert chosen.min() >= 0
    assert chosen.max() < 10
    assert all(len(set(row)) == 4 for row in chosen)
    # Every element is picked in about 40% of the trials.
    counts = np.bincount(chosen.ravel(), minlength=10) / 200
    assert np.all(np.abs(counts - 0.4) < 0.15)


def test_irs_config_validates_indices():
    assert IrsConfig(np.zeros(4), np.array([0, 3])).K == 2
    with pytest.raises(ValueError, match="Selected indices must lie in"):
        IrsConfig(np.zeros(4), np.array([4]))


@pytest.mark.parametrize(
    ("gamma_B", "gamma_E", "expected"),
    [(3.0, 1.0, 1.0), (1.0, 3.0, 0.0), (0.0, 0.0, 0.0), (15.0, 0.0, 4.0)],
)
def test_secrecy_capacity(gamma_B: float, gamma_E: float, expected: float):
    capacity = secrecy_capacity(np.array(gamma_B), np.array(gamma_E))
    assert capacity == pytest.approx(expected)


def test_instant_snr_without_errors_is_coherent_gain():
    params = SystemParams(N_H=4, N_V=4, L=10**6, rho=1.0)
    realization = sample_realization(params, 5)
    phases = irs_optimal_phases(realization.h_B_hat, realization.b)
    irs = IrsConfig(phases, np.asarray(full_selection(params.N)))
    gamma = instant_snr_bob(realization, irs, params, "perfect")
    gain = params.P * params.M * params.beta_H / params.sigma2_B
    expected = gain * np.abs(realization.h_B).sum() ** 2
    assert float(gamma) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("scenario_id", [1, 2, 3])
@pytest.mark.parametrize("K", [1, 10, None])
def test_signal_chain_matches_rank_one_formula(scenario_id: int, K: int | None):
    params = SystemParams(N_H=5, N_V=4)
    scenario = scenario_from_id(scenario_id)
    realization = sample_realization(params, 100 + scenario_id, size=(8,))
    for i in range(8):
        single = realization[i]
        phases = irs_optimal_phases(single.h_B_hat, single.b)
        chosen = (
            np.arange(params.N) if K is None else ess_select(single.h_B_hat, K)
        )
        irs = IrsConfig(phases, chosen)
        assert signal_chain_snr_bob(
            single, irs, params, scenario.bob_csi
        ) == pytest.approx(
            float(instant_snr_bob(single, irs, params, scenario.bob_csi)), rel=1e-9
        )
        assert signal_chain_snr_eve(
            single, irs, params, scenario.eve_csi
        ) == pytest.approx(
            float(instant_snr_eve(single, irs, params, scenario.eve_csi)), rel=1e-9
        )


def test_mrt_beamformer_unit_norm_and_degenerate_selection():
    params = SystemParams(N_H=3, N_V=3)
    single = sample_realization(params, 8)
    phases = irs_optimal_phases(single.h_B_hat, single.b)
    w = mrt_beamformer(single, IrsConfig(phases, np.arange(params.N)))
    assert np.linalg.norm(w) == pytest.approx(1.0)
    # Parallel to the BS steering vector.
    assert abs(np.vdot(single.a, w)) == pytest.approx(math.sqrt(params.M))

    with pytest.raises(DegenerateChannelError, match="Projected channel is zero"):
        mrt_beamformer(single, IrsConfig(phases, np.array([], dtype=np.intp)))


def test_optimal_phases_reference_values():
    b = np.exp(1j * np.array([0.1, 0.7]))
    np.testing.assert_allclose(irs_optimal_phases(b, b), 0.0, atol=1e-15)
    assert irs_optimal_phases(np.array([1j]), np.array([1.0]))[0] == pytest.approx(
        -np.pi / 2
    )


def test_aligned_phases_beat_random_phases():
    params = SystemParams(N_H=4, N_V=4, L=10**6)
    single = sample_realization(params, 21)
    chosen = np.arange(params.N)
    best = float(
        instant_snr_bob(
            single,
            IrsConfig(irs_optimal_phases(single.h_B_hat, single.b), chosen),
            params,
            "outdated",
        )
    )
    rng = np.random.default_rng(0)
    for _ in range(100):
        phases = rng.uniform(0, 2 * np.pi, params.N)
        snr = instant_snr_bob(single, IrsConfig(phases, chosen), params, "outdated")
        assert float(snr) <= best * (1 + 1e-9)


def test_ess_select_is_permutation_equivariant():
    rng = np.random.default_rng(4)
    h = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    perm = rng.permutation(20)
    chosen = set(ess_select(h, 7))
    assert {int(perm[i]) for i in ess_select(h[perm], 7)} == chosen
    np.testing.assert_array_equal(np.sort(ess_select(h, 20)), np.arange(20))
