import math

import numpy as np
import pytest

from mmwhybrid.arrays import (Architecture, ArrayConfig, BeamDictionary, array_response,
                              dft_dictionary, grid_angle, nearest_grid_index)


def test_steering_vector_small_case():
    # sin(angle) = 0.5 gives per-element phase steps of pi/2
    v = array_response(math.asin(0.5), 3)
    np.testing.assert_allclose(v, [1.0, 1.0j, -1.0], atol=1e-12)


def test_steering_vector_norm_and_broadside():
    v = array_response(0.3, 16)
    assert np.allclose(np.abs(v), 1.0)
    assert np.linalg.norm(v) ** 2 == pytest.approx(16.0)
    np.testing.assert_allclose(array_response(0.0, 5), np.ones(5))


def test_dft_dictionary_two_by_two():
    expected = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
    np.testing.assert_allclose(dft_dictionary(2, 2), expected, atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_square_dictionary_is_unitary(n):
    f = dft_dictionary(n, n)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(n), atol=1e-12)


def test_wide_dictionary_column_norms():
    f = dft_dictionary(2, 4)
    np.testing.assert_allclose(np.linalg.norm(f, axis=0) ** 2, 0.5, atol=1e-12)


def test_dictionary_columns_match_grid_steering():
    # column j of the square dictionary is the normalized steering vector
    # of the j-th grid angle
    n = 16
    f = dft_dictionary(n, n)
    for index in (1, 5, 9, 16):
        steer = array_response(grid_angle(index, n), n) / np.sqrt(n)
        np.testing.assert_allclose(f[:, index - 1], steer, atol=1e-10)


def test_grid_angle_round_trip():
    size = 32
    for index in range(1, size + 1):
        assert nearest_grid_index(grid_angle(index, size), size) == index


def test_grid_wraps_at_endfire():
    # sin = +1 is one full grid period from sin = -1, so it aliases onto
    # the first beam
    assert nearest_grid_index(np.pi / 2, 32) == 1
    assert nearest_grid_index(-np.pi / 2, 32) == 1


def test_architecture_parsing_case_insensitive():
    assert Architecture("fc") is Architecture.FC
    assert Architecture("OSPS") is Architecture.OSPS
    with pytest.raises(ValueError):
        Architecture("hybrid")


def test_array_config_defaults_and_subarrays():
    cfg = ArrayConfig()
    assert (cfg.bs_antennas, cfg.bs_rf_chains, cfg.ue_antennas, cfg.ue_rf_chains) == (32, 2, 16, 1)
    assert cfg.architecture is Architecture.FC
    assert cfg.subarray_size == 32
    assert cfg.num_users == 2
    osps = ArrayConfig(architecture="osps")
    assert osps.subarray_size == 16


def test_array_config_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ArrayConfig(bs_antennas=30, bs_rf_chains=4, architecture="OSPS")
    with pytest.raises(ValueError):
        ArrayConfig(bs_antennas=0)
    with pytest.raises(ValueError):
        ArrayConfig(ue_antennas=2, ue_rf_chains=3)


def test_beam_dictionary_shapes_per_architecture():
    fc = BeamDictionary.for_config(ArrayConfig())
    assert fc.ue.shape == (16, 16)
    assert fc.bs.shape == (32, 32)
    osps = BeamDictionary.for_config(ArrayConfig(architecture="OSPS"))
    assert osps.bs.shape == (16, 32)
    # every column still has the same energy
    np.testing.assert_allclose(np.linalg.norm(osps.bs, axis=0) ** 2, 0.5, atol=1e-12)
