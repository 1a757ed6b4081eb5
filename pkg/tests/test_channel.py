import math
import random

import pytest

from uavcosim.netsim.channel import (ChannelParams, MIN_DISTANCE_M,
                                     fading_gain_db, path_loss_db, rss_dbm,
                                     snr_db)

P = ChannelParams()  # pl0 40.05 dB, exponent 3.0, no fading, noise -94 dBm


def test_path_loss_reference_values():
    assert path_loss_db(1.0, P) == pytest.approx(40.05)
    assert path_loss_db(10.0, P) == pytest.approx(70.05)
    assert path_loss_db(100.0, P) == pytest.approx(100.05)
    # 3.0 dB/octave-of-exponent: doubling distance adds 10*3*log10(2)
    assert (path_loss_db(20.0, P) - path_loss_db(10.0, P)
            == pytest.approx(30 * math.log10(2)))


def test_min_distance_clamp():
    assert path_loss_db(0.0, P) == path_loss_db(MIN_DISTANCE_M, P)
    assert path_loss_db(0.01, P) == path_loss_db(0.1, P)


def test_rss_deterministic_without_fading():
    for d in (1.0, 25.0, 120.0):
        expected = 16.0 - path_loss_db(d, P)
        assert rss_dbm(16.0, d, P) == pytest.approx(expected)
        assert rss_dbm(16.0, d, P, rng=random.Random(1)) == pytest.approx(expected)


def test_rss_monotone_decreasing():
    values = [rss_dbm(16.0, d, P) for d in (1, 5, 20, 80, 300)]
    assert values == sorted(values, reverse=True)


def test_fading_zero_m_disabled():
    rng = random.Random(3)
    assert fading_gain_db(ChannelParams(nakagami_m=0.0), rng) == 0.0


def test_fading_unit_mean_power():
    params = ChannelParams(nakagami_m=1.0)
    rng = random.Random(5)
    n = 20000
    mean_gain = sum(10 ** (fading_gain_db(params, rng) / 10)
                    for _ in range(n)) / n
    assert mean_gain == pytest.approx(1.0, rel=0.05)


def test_fading_spread_shrinks_with_m():
    def spread(m, seed):
        params = ChannelParams(nakagami_m=m)
        rng = random.Random(seed)
        xs = [fading_gain_db(params, rng) for _ in range(5000)]
        mu = sum(xs) / len(xs)
        return (sum((x - mu) ** 2 for x in xs) / len(xs)) ** 0.5

    assert spread(5.0, 8) < spread(1.0, 8)


def test_snr_from_noise_floor():
    assert snr_db(-72.0, P) == pytest.approx(22.0)
