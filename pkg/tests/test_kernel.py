import threading
import time

import pytest

from uavcosim.kernel import EventLoop


def test_logical_ordering_and_ties():
    loop = EventLoop(realtime=False)
    order = []
    loop.call_at(3_000, order.append, "c")
    loop.call_at(1_000, order.append, "a")
    loop.call_at(1_000, order.append, "b")  # same due: submission order wins
    loop.run()
    assert order == ["a", "b", "c"]
    assert loop.now_ns() == 3_000


def test_logical_time_jumps_to_due():
    loop = EventLoop(realtime=False)
    seen = []
    loop.call_after(5_000_000_000, lambda: seen.append(loop.now_ns()))
    t0 = time.monotonic()
    loop.run()
    assert time.monotonic() - t0 < 1.0  # no wall-clock sleeping
    assert seen == [5_000_000_000]


def test_call_soon_runs_at_now():
    loop = EventLoop(realtime=False)
    out = []
    loop.call_at(2_000, lambda: loop.call_soon(lambda: out.append(loop.now_ns())))
    loop.run()
    assert out == [2_000]


def test_run_until_limit():
    loop = EventLoop(realtime=False)
    hits = []

    def chain(due):
        hits.append(due)
        loop.call_at(due + 1_000_000, chain, due + 1_000_000)

    loop.call_at(0, chain, 0)
    loop.run(until_ns=5_000_000)
    assert len(hits) == 6  # t = 0..5 ms inclusive
    assert loop.now_ns() == 5_000_000


def test_stop_breaks_run():
    loop = EventLoop(realtime=False)
    ran = []
    loop.call_at(1_000, lambda: (ran.append(1), loop.stop()))
    loop.call_at(2_000, lambda: ran.append(2))
    loop.run()
    assert ran == [1]
    assert loop.pending() == 1


def test_cancelled_event_skipped():
    loop = EventLoop(realtime=False)
    ran = []
    ev = loop.call_at(1_000, lambda: ran.append("x"))
    ev.cancel()
    loop.call_at(2_000, lambda: ran.append("y"))
    loop.run()
    assert ran == ["y"]


def test_callback_error_counted_not_fatal():
    loop = EventLoop(realtime=False)
    ran = []
    loop.call_at(1_000, lambda: 1 / 0)
    loop.call_at(2_000, lambda: ran.append("ok"))
    loop.run()
    assert ran == ["ok"]
    assert loop.n_errors == 1


def test_realtime_lateness_sampling():
    loop = EventLoop(realtime=True)
    loop.call_after(1_000_000, time.sleep, 0.05)  # stall the loop 50 ms
    loop.call_after(2_000_000, lambda: None)      # fires ~49 ms late
    loop.call_after(80_000_000, loop.stop)
    loop.run()
    assert loop.recent_max_lateness_ns(10_000_000_000) >= 40_000_000
    loop.clear_lateness_samples()
    assert loop.recent_max_lateness_ns(10_000_000_000) == 0


def test_realtime_wall_alignment():
    loop = EventLoop(realtime=True)
    stamps = []
    for k in range(1, 4):
        loop.call_after(k * 30_000_000, lambda: stamps.append(loop.now_ns()))
    t0 = time.monotonic_ns()
    loop.run()
    elapsed = time.monotonic_ns() - t0
    assert elapsed >= 85_000_000  # it really slept to the last due time
    for k, s in enumerate(stamps, start=1):
        assert abs(s - k * 30_000_000) < 20_000_000


def test_late_drop_policy_hook():
    loop = EventLoop(realtime=True)
    dropped = []
    ran = []

    def policy(event, lateness_ns):
        if event.kind == "droppable" and lateness_ns > 10_000_000:
            dropped.append(event.ctx)
            return True
        return False

    loop.late_drop_policy = policy
    loop.call_after(1_000_000, time.sleep, 0.04)
    loop.call_after(2_000_000, lambda: ran.append("d"), kind="droppable", ctx="pkt")
    loop.call_after(3_000_000, lambda: ran.append("k"), kind="keep")
    loop.run()
    assert dropped == ["pkt"]
    assert ran == ["k"]


def test_thread_handoff_with_call_soon():
    loop = EventLoop(realtime=True)
    got = []

    def from_thread():
        time.sleep(0.02)
        loop.call_soon(got.append, "posted", kind="xthread")

    t = threading.Thread(target=from_thread)
    loop.call_after(60_000_000, loop.stop)
    t.start()
    loop.run()
    t.join()
    assert got == ["posted"]


def test_backlog_lateness_logical_is_zero():
    loop = EventLoop(realtime=False)
    loop.call_after(1_000, lambda: None)
    loop.run()
    assert loop.backlog_lateness_ns() == 0
