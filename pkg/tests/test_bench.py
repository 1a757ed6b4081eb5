"""Messaging benchmark: sample identity, wiring modes, pair budget."""

import pytest

from uavcosim.bench import BenchSummary, bench_bus
from uavcosim.bus import CapacityError


def test_single_mode_counts_and_identity():
    s = bench_bus(2, 256, "single", duration_s=0.3, rate_hz=50.0)
    assert s.n_sent == 2 * 15
    assert s.n_received == s.n_sent
    assert s.n_dropped == 0
    for sample in s.samples:
        assert sample.d_ze2e_ns == (sample.d_pub_ns + sample.d_q_ns
                                    + sample.d_sub_ns)
    assert {x.stream_id for x in s.samples} == {"s000", "s001"}
    assert 0 < s.mean_ze2e_ns < 10_000_000
    assert s.p50_ze2e_ns <= s.p99_ze2e_ns <= s.max_ze2e_ns


def test_parallel_mode_uses_one_pair_per_stream():
    s = bench_bus(3, 64, "parallel", duration_s=0.25, rate_hz=40.0)
    assert s.n_received == s.n_sent == 3 * 10
    means = s.per_stream_means_ns()
    assert sorted(means) == ["s000", "s001", "s002"]
    assert all(v > 0 for v in means.values())


def test_arguments_validated():
    with pytest.raises(ValueError, match="mode"):
        bench_bus(1, 64, "mesh", duration_s=0.1)
    with pytest.raises(ValueError, match="n_streams"):
        bench_bus(0, 64, "single", duration_s=0.1)


def test_pair_budget_enforced_up_front():
    with pytest.raises(CapacityError, match="exceed the budget"):
        bench_bus(5, 64, "parallel", duration_s=0.1, max_pairs=4)
    # multiplexing over one pair stays within any budget
    s = bench_bus(5, 64, "single", duration_s=0.1, rate_hz=20.0, max_pairs=4)
    assert isinstance(s, BenchSummary)


def test_keep_samples_flag():
    s = bench_bus(1, 64, "single", duration_s=0.15, rate_hz=40.0,
                  keep_samples=False)
    assert s.samples == []
    assert s.n_received > 0
