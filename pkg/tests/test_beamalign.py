import math

import numpy as np
import pytest

from mmwhybrid.arrays import ArrayConfig, BeamDictionary
from mmwhybrid.beamalign import (BeamspaceStats, ConvergenceError, build_sensing_matrix,
                                 detect_strongest, detection_probability,
                                 estimate_beamspace_stats, generate_beacon_codebook,
                                 kkt_residual, nnls_active_set, synthesize_measurements)
from mmwhybrid.channel import Scenario, on_grid_path, true_beamspace_stats
from mmwhybrid.rng import substream

from pg_oracle import kkt_violation, nnls_projected_gradient


def small_config(architecture="FC"):
    return ArrayConfig(bs_antennas=4, bs_rf_chains=2, ue_antennas=2,
                       ue_rf_chains=1, architecture=architecture)


def test_codebook_shapes_and_unit_modulus():
    cfg = ArrayConfig()
    cb = generate_beacon_codebook(cfg, slots=5, seed=3)
    assert cb.bs_vectors.shape == (5, 32, 2)
    assert cb.ue_vectors.shape == (5, 16, 1)
    np.testing.assert_allclose(np.abs(cb.bs_vectors), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(cb.ue_vectors), 1.0, atol=1e-12)
    assert cb.measurement_count == 10


def test_codebook_osps_columns_live_on_own_subarray():
    cfg = ArrayConfig(architecture="OSPS")
    cb = generate_beacon_codebook(cfg, slots=3, seed=3)
    for t in range(3):
        col0, col1 = cb.bs_vectors[t, :, 0], cb.bs_vectors[t, :, 1]
        assert np.all(col0[16:] == 0) and np.all(np.abs(col0[:16]) == pytest.approx(1.0))
        assert np.all(col1[:16] == 0) and np.all(np.abs(col1[16:]) == pytest.approx(1.0))


def test_codebook_is_reproducible():
    cfg = ArrayConfig()
    a = generate_beacon_codebook(cfg, slots=4, seed=9)
    b = generate_beacon_codebook(cfg, slots=4, seed=9)
    np.testing.assert_array_equal(a.bs_vectors, b.bs_vectors)
    np.testing.assert_array_equal(a.ue_vectors, b.ue_vectors)
    c = generate_beacon_codebook(cfg, slots=4, seed=10)
    assert not np.array_equal(a.bs_vectors, c.bs_vectors)


@pytest.mark.parametrize("architecture", ["FC", "OSPS"])
def test_sensing_matrix_matches_brute_force(architecture):
    cfg = small_config(architecture)
    cb = generate_beacon_codebook(cfg, slots=3, seed=5)
    p_tot = 2.5
    sensing = build_sensing_matrix(cb, p_tot)
    dic = BeamDictionary.for_config(cfg)
    n, m, d = cfg.ue_antennas, cfg.bs_antennas, cfg.subarray_size
    expected = np.zeros((cb.measurement_count, n * m))
    row = 0
    for t in range(cb.slots):
        for i in range(cfg.bs_rf_chains):
            u = cb.bs_vectors[t, :, i]
            if architecture == "OSPS":
                u = u[i * d:(i + 1) * d]
            for j in range(cfg.ue_rf_chains):
                v = cb.ue_vectors[t, :, j]
                for cell_n in range(n):
                    for cell_m in range(m):
                        ue_g = abs(dic.ue[:, cell_n].conj() @ v) ** 2
                        bs_g = abs(dic.bs[:, cell_m].conj() @ u) ** 2
                        expected[row, cell_n * m + cell_m] = (p_tot / cfg.bs_rf_chains) * ue_g * bs_g
                row += 1
    np.testing.assert_allclose(sensing, expected, atol=1e-12)


def test_measurements_match_model_for_specular_path():
    # an infinite Rice factor freezes the fading, so with zero noise the
    # measured powers equal the sensing model applied to the true map
    cfg = ArrayConfig()
    path = on_grid_path(1.0, math.inf, aoa_index=4, aod_index=9, ue_size=16, bs_size=32)
    cb = generate_beacon_codebook(cfg, slots=6, seed=2)
    meas = synthesize_measurements([path], cb, p_tot=3.0, noise_power=0.0,
                                   rng=substream(0, 1), coherence_blocks=2)
    gamma = true_beamspace_stats([path], cfg).reshape(-1)
    np.testing.assert_allclose(meas.powers, meas.sensing @ gamma, rtol=1e-10)


def test_measurement_noise_floor_mean():
    # a zero-strength path leaves only the averaged noise powers, whose
    # mean is the noise floor itself
    cfg = ArrayConfig()
    path = on_grid_path(0.0, 0.0, aoa_index=4, aod_index=9, ue_size=16, bs_size=32)
    cb = generate_beacon_codebook(cfg, slots=600, seed=2)
    meas = synthesize_measurements([path], cb, p_tot=3.0, noise_power=0.5,
                                   rng=substream(0, 2), coherence_blocks=4)
    assert np.mean(meas.powers) == pytest.approx(0.5, rel=0.05)


def test_vectorized_fading_second_moment():
    from mmwhybrid.beamalign import _sample_gain_block

    paths = [on_grid_path(1.0, 100.0, 1, 1, 16, 32),
             on_grid_path(0.6, 10.0, 2, 2, 16, 32),
             on_grid_path(0.6, 0.0, 3, 3, 16, 32),
             on_grid_path(2.0, math.inf, 4, 4, 16, 32)]
    gains = _sample_gain_block(paths, 100_000, substream(8, 0))
    moments = np.mean(np.abs(gains) ** 2, axis=0)
    np.testing.assert_allclose(moments, [1.0, 0.6, 0.6, 2.0], rtol=0.02)


def test_measurement_mean_tracks_model_under_fading():
    cfg = ArrayConfig()
    path = on_grid_path(1.0, 0.0, aoa_index=4, aod_index=9, ue_size=16, bs_size=32)
    cb = generate_beacon_codebook(cfg, slots=200, seed=2)
    noise_power = 0.5
    meas = synthesize_measurements([path], cb, p_tot=0.005, noise_power=noise_power,
                                   rng=substream(0, 2), coherence_blocks=4)
    gamma = true_beamspace_stats([path], cfg).reshape(-1)
    expected = meas.sensing @ gamma + noise_power
    # the fading-weighted aggregate converges slowly; this is a sanity
    # check on the composition, the tight checks above pin each piece
    assert np.mean(meas.powers) == pytest.approx(np.mean(expected), rel=0.1)


def test_nnls_identity_clips_negative_component():
    x, iters = nnls_active_set(np.eye(3), np.array([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(x, [3.0, 0.0, 2.0], atol=1e-12)
    assert iters <= 3


def test_nnls_recovers_consistent_solution():
    rng = substream(21, 0)
    a = rng.random((40, 12))
    x_true = np.zeros(12)
    x_true[[1, 5, 9]] = [2.0, 0.5, 1.5]
    x, _ = nnls_active_set(a, a @ x_true)
    np.testing.assert_allclose(x, x_true, atol=1e-8)
    assert kkt_residual(a, a @ x_true, x) <= 1e-8


def test_nnls_agrees_with_projected_gradient_oracle():
    rng = substream(22, 0)
    for _ in range(10):
        rows, cols = int(rng.integers(8, 33)), int(rng.integers(12, 65))
        a = rng.random((rows, cols))
        b = rng.standard_normal(rows) + rng.random(rows)
        x_as, _ = nnls_active_set(a, b)
        x_pg, _ = nnls_projected_gradient(a, b, kkt_tol=1e-10)
        obj_as = np.sum((a @ x_as - b) ** 2)
        obj_pg = np.sum((a @ x_pg - b) ** 2)
        assert obj_as <= obj_pg * (1.0 + 1e-6)
        assert abs(obj_as - obj_pg) <= 1e-6 * max(obj_pg, 1e-30)
        assert kkt_residual(a, b, x_as) <= 1e-8
        assert kkt_violation(a, b, x_as) <= 1e-8


def test_nnls_iteration_cap_carries_best_iterate():
    rng = substream(23, 0)
    a = rng.random((20, 10))
    b = rng.random(20)
    with pytest.raises(ConvergenceError) as err:
        nnls_active_set(a, b, max_iters=1)
    assert err.value.iterate.shape == (10,)
    assert err.value.kkt_violation > 0.0


def test_detect_strongest_tie_breaks_and_empty_map():
    gamma = np.zeros((2, 3))
    assert detect_strongest(gamma) is None
    gamma[1, 2] = 1.0
    gamma[0, 1] = 1.0
    # equal peaks resolve to the smallest AoA index
    assert detect_strongest(gamma) == (1, 2)
    stats = BeamspaceStats(gamma=gamma, iterations=0, kkt=0.0, objective=0.0)
    assert detect_strongest(stats) == (1, 2)


@pytest.mark.parametrize("architecture", ["FC", "OSPS"])
def test_estimation_recovers_specular_map(architecture):
    cfg = small_config(architecture)
    path = on_grid_path(1.0, math.inf, aoa_index=2, aod_index=3,
                        ue_size=cfg.ue_antennas, bs_size=cfg.bs_antennas)
    cb = generate_beacon_codebook(cfg, slots=8, seed=4)
    meas = synthesize_measurements([path], cb, p_tot=1.0, noise_power=0.0,
                                   rng=substream(5, 0), coherence_blocks=1)
    stats = estimate_beamspace_stats(meas, cfg)
    expected = true_beamspace_stats([path], cfg)
    np.testing.assert_allclose(stats.gamma, expected, atol=1e-6)
    assert stats.kkt <= 1e-8


@pytest.mark.parametrize("architecture", ["FC", "OSPS"])
def test_detection_is_certain_without_noise_or_fading(architecture):
    cfg = small_config(architecture)
    scenario = Scenario(config=cfg, profile=((1.0, math.inf),), noise_psd=1e-15)
    p_d, err = detection_probability(scenario, slots=8, p_tot=1.0, trials=20, seed=6)
    assert p_d == 1.0 and err == 0.0


def test_detection_probability_is_reproducible():
    scenario = Scenario()
    a = detection_probability(scenario, slots=12, p_tot=0.05, trials=8, seed=3)
    b = detection_probability(scenario, slots=12, p_tot=0.05, trials=8, seed=3)
    assert a == b
