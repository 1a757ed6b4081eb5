import random

import pytest

from uavcosim.netsim.wifi import (DcfChannel, WifiError, WifiParams,
                                  rate_for_rss, tx_time_ns)

# Offline references from tests/oracles/dcf_oracle.py
LONE_MEAN_US = 309.648
MC_PER_STATION_MBPS = {2: 13.3539, 3: 8.8286}
BIANCHI_PER_STATION_MBPS = {5: 5.2551, 10: 2.4695}

NS = 1_000_000_000


class ScriptedRng(random.Random):
    """randint returns scripted values; randrange returns 0."""

    def __new__(cls, script):
        return super().__new__(cls, 0)

    def __init__(self, script):
        super().__init__(0)
        self.script = list(script)

    def randint(self, a, b):
        if self.script:
            v = self.script.pop(0)
            return max(a, min(b, v))
        return a

    def randrange(self, *a, **k):
        return 0


def test_rate_tiers():
    p = WifiParams()
    assert rate_for_rss(-60.0, p) == 54.0
    assert rate_for_rss(-70.0, p) == 36.0
    assert rate_for_rss(-80.0, p) == 18.0
    assert rate_for_rss(-90.0, p) == 6.0
    assert rate_for_rss(-92.0, p) == 6.0
    assert rate_for_rss(-92.1, p) is None


def test_tx_time():
    assert tx_time_ns(1000, 54.0) == round(8000 * 1000 / 54.0)
    assert tx_time_ns(100, 6.0) == round(800 * 1000 / 6.0)


def test_lone_station_service_components():
    # scripted backoff of 4 slots makes the delay exact
    ch = DcfChannel(WifiParams(), ScriptedRng([4]))
    ch.add_station("a")
    done, reason = ch.submit("a", 1000, 54.0, t_arrival_ns=0)
    assert reason is None
    expected = 34_000 + 4 * 9_000 + tx_time_ns(1000, 54.0) + 16_000 + 44_000
    assert done == expected


def test_lone_station_mean_close_to_reference():
    ch = DcfChannel(WifiParams(), random.Random(99))
    ch.add_station("a")
    n = 10_000
    total = 0
    t = 0
    for _ in range(n):
        done, reason = ch.submit("a", 1000, 54.0, t_arrival_ns=t)
        assert reason is None
        total += done - t
        t = done + 1_000_000  # idle gap so every packet contends fresh
    mean_us = total / n / 1e3
    assert mean_us == pytest.approx(LONE_MEAN_US, rel=0.05)
    assert mean_us < 1000.0


def test_two_station_collision_and_backoff_doubling():
    # both stations draw 0 -> collide; retries then draw 1 and 3
    ch = DcfChannel(WifiParams(), ScriptedRng([0, 0, 1, 3]))
    ch.add_station("a")
    ch.add_station("b")
    # station b holds a packet that arrived at the same instant
    ch.stations["b"].queue.append(_mk_pkt(0))
    done, reason = ch.submit("a", 1000, 54.0, t_arrival_ns=0)
    assert reason is None
    t_tx = tx_time_ns(1000, 54.0)
    # round 1: DIFS + 0 slots + collision (t_tx + ACK timeout)
    # round 2: DIFS + 1 slot + success for a
    expected = (34_000 + t_tx + 44_000) + (34_000 + 9_000 + t_tx + 16_000 + 44_000)
    assert done == expected
    assert ch.stations["a"].cw == WifiParams().cw_min  # reset after success


def _mk_pkt(arrival):
    from uavcosim.netsim.wifi import _Pkt
    return _Pkt(arrival, 1000, 54.0)


def test_retry_exhaustion_after_seven_collisions():
    # scripted to tie every round; both heads exhaust on attempt 7 together
    ch = DcfChannel(WifiParams(), ScriptedRng([0] * 32))
    ch.add_station("a")
    ch.add_station("b")
    ch.stations["b"].queue.append(_mk_pkt(0))
    done, reason = ch.submit("a", 1000, 54.0, t_arrival_ns=0)
    assert reason == "retry-exhausted"
    assert ch.drops["retry-exhausted"] == 2
    # seven collision rounds elapsed, nothing delivered
    assert ch.delivered == 0
    assert done == 7 * (34_000 + tx_time_ns(1000, 54.0) + 44_000)


def test_queue_full_drop():
    p = WifiParams(queue_cap=4)
    ch = DcfChannel(p, random.Random(1))
    ch.add_station("a")
    # stuff the queue with future arrivals that cannot be served yet
    for k in range(4):
        ch.stations["a"].queue.append(_mk_pkt(10 * NS + k))
    done, reason = ch.submit("a", 1000, 54.0, t_arrival_ns=10 * NS + 5)
    assert reason == "queue-full"


def test_queue_expiry_under_overload():
    # arrivals far above capacity: heads rot in the queue past the limit
    p = WifiParams(queue_max_delay_ns=5_000_000)  # 5 ms shelf life
    ch = DcfChannel(p, random.Random(1))
    ch.add_station("a", pace_rate_mbps=100.0, pace_bytes=1000)
    ch.advance_to(NS)
    assert ch.drops["queue-expired"] > 0


def test_unknown_station_raises():
    ch = DcfChannel(WifiParams(), random.Random(1))
    with pytest.raises(WifiError):
        ch.submit("ghost", 100, 54.0, t_arrival_ns=0)
    with pytest.raises(WifiError):
        ch.add_station("a") or ch.add_station("a")


def test_saturation_throughput_small_n_matches_roundprocess_reference():
    for n, ref in MC_PER_STATION_MBPS.items():
        p = WifiParams(queue_cap=64)
        ch = DcfChannel(p, random.Random(42), name="sat")
        for i in range(n):
            ch.add_station(f"s{i}", pace_rate_mbps=100.0, pace_bytes=1000)
        sim_s = 30
        ch.advance_to(sim_s * NS)
        for i in range(n):
            mbps = ch.delivered_bits(f"s{i}") / (sim_s * 1e6)
            assert mbps == pytest.approx(ref, rel=0.02), f"n={n} station {i}"


def test_saturation_throughput_larger_n_matches_fixed_point():
    for n, ref in BIANCHI_PER_STATION_MBPS.items():
        p = WifiParams(retry_limit=1000, queue_cap=64)
        ch = DcfChannel(p, random.Random(42), name="sat")
        for i in range(n):
            ch.add_station(f"s{i}", pace_rate_mbps=100.0, pace_bytes=1000)
        sim_s = 12
        ch.advance_to(sim_s * NS)
        for i in range(n):
            mbps = ch.delivered_bits(f"s{i}") / (sim_s * 1e6)
            assert mbps == pytest.approx(ref, rel=0.15), f"n={n} station {i}"


def test_busy_fraction_grows_with_load():
    def busy(n):
        ch = DcfChannel(WifiParams(), random.Random(7))
        for i in range(n):
            ch.add_station(f"s{i}", pace_rate_mbps=2.0, pace_bytes=1000)
        ch.advance_to(2 * NS)
        return ch.busy_fraction()

    assert busy(1) < busy(4) < busy(12)


def test_station_removed_drops_queue():
    ch = DcfChannel(WifiParams(), random.Random(1))
    ch.add_station("a")
    ch.stations["a"].queue.append(_mk_pkt(10 * NS))
    ch.remove_station("a")
    assert ch.drops["station-removed"] == 1
    assert not ch.has_station("a")
