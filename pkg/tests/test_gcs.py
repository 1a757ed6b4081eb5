"""Ground station: command tracking, ACK intake, mission sequencing."""

from uavcosim.bus import Bus
from uavcosim.flightsim import Command, Telemetry
from uavcosim.gcs import GroundStation
from uavcosim.kernel import EventLoop

MS = 1_000_000


def make_gcs():
    loop = EventLoop(realtime=False)
    bus = Bus(clock=loop.now_ns)
    gcs = GroundStation(loop, bus)
    gcs.start()
    return loop, bus, gcs


def mk_tel(mode, seq, uav_id=1, ack_cmd_id=None, ack_status="ack",
           ack_reason=None):
    return Telemetry(uav_id=uav_id, seq=seq, lat=33.64, lon=-117.84,
                     alt_m=0.0, vx=0.0, vy=0.0, vz=0.0, heading_deg=0.0,
                     battery_pct=99.0, mode=mode, t_gen_ns=0,
                     ack_cmd_id=ack_cmd_id,
                     ack_status=ack_status if ack_cmd_id else None,
                     ack_reason=ack_reason)


def push_tel(bus, tel):
    bus.endpoint("net").publish(f"net/gcs/telemetry/{tel.uav_id}",
                                tel.to_payload())


def test_send_command_publishes_and_tracks_pending():
    loop, bus, gcs = make_gcs()
    out = bus.subscribe("gcs/cmd/1")
    cid = gcs.send_command(1, "takeoff", alt_m=12.0)
    assert cid == 1
    assert gcs.send_command(1, "land") == 2

    envs = out.drain()
    assert len(envs) == 2
    cmd = Command.from_payload(envs[0].payload)
    assert (cmd.kind, cmd.cmd_id, cmd.alt_m) == ("takeoff", cid, 12.0)
    rec = gcs.command_status(cid)
    assert rec.status == "pending" and rec.t_ack_ns is None


def test_ack_flow_updates_record_and_fires_hook():
    loop, bus, gcs = make_gcs()
    events = []
    gcs.on_event = events.append
    cid = gcs.send_command(1, "arm")
    push_tel(bus, mk_tel("armed", seq=2, ack_cmd_id=cid))
    loop.run(until_ns=MS)

    rec = gcs.command_status(cid)
    assert rec.status == "ack" and rec.t_ack_ns is not None
    assert gcs.telemetry[1].mode == "armed"
    kinds = [e["type"] for e in events]
    assert kinds == ["cmd_status", "telemetry"]
    assert events[0]["rec"] is rec


def test_nack_records_reason():
    loop, bus, gcs = make_gcs()
    cid = gcs.send_command(1, "takeoff", alt_m=5.0)
    push_tel(bus, mk_tel("disarmed", seq=2, ack_cmd_id=cid,
                         ack_status="nack", ack_reason="not armed"))
    loop.run(until_ns=MS)
    rec = gcs.command_status(cid)
    assert rec.status == "nack" and rec.reason == "not armed"


def test_garbage_telemetry_ignored():
    loop, bus, gcs = make_gcs()
    bus.endpoint("net").publish("net/gcs/telemetry/1", b"{nope")
    loop.run(until_ns=MS)
    assert gcs.telemetry == {}


def test_history_capped_with_status_eviction():
    loop, _, gcs = make_gcs()
    first = gcs.send_command(1, "arm")
    for _ in range(1000):
        gcs.send_command(1, "arm")
    assert len(gcs.history) == 1000
    assert gcs.command_status(first) is None
    assert gcs.command_status(first + 1000) is not None


def run_mission_step(loop, until):
    loop.run(until_ns=until)


def test_mission_progresses_on_reported_modes():
    loop, bus, gcs = make_gcs()
    cmds = bus.subscribe("gcs/cmd/1")
    gcs.add_mission(1, [{"kind": "arm"}, {"kind": "takeoff", "alt_m": 5.0}])
    gcs.start_missions()

    loop.run(until_ns=MS)  # nothing heard yet: arming may go out blind
    first = cmds.drain()
    assert len(first) == 1
    arm = Command.from_payload(first[0].payload)
    assert arm.kind == "arm"
    assert gcs.missions[1].pending_cmd == arm.cmd_id

    # the takeoff is held back until the vehicle reports the armed mode
    loop.run(until_ns=500 * MS)
    assert cmds.drain() == []

    push_tel(bus, mk_tel("armed", seq=2, ack_cmd_id=arm.cmd_id))
    loop.run(until_ns=1000 * MS)
    nxt = cmds.drain()
    assert len(nxt) == 1
    takeoff = Command.from_payload(nxt[0].payload)
    assert takeoff.kind == "takeoff" and takeoff.alt_m == 5.0

    push_tel(bus, mk_tel("hovering", seq=3, ack_cmd_id=takeoff.cmd_id))
    loop.run(until_ns=1500 * MS)
    m = gcs.missions[1]
    assert m.done() and not m.failed and m.idx == 2
    assert gcs.mission_summary() == {
        "1": {"steps": 2, "completed": 2, "failed": False, "done": True}}


def test_mission_halts_on_nack():
    loop, bus, gcs = make_gcs()
    cmds = bus.subscribe("gcs/cmd/1")
    gcs.add_mission(1, [{"kind": "arm"}, {"kind": "takeoff", "alt_m": 5.0}])
    gcs.start_missions()
    loop.run(until_ns=MS)
    arm = Command.from_payload(cmds.drain()[0].payload)

    push_tel(bus, mk_tel("disarmed", seq=2, ack_cmd_id=arm.cmd_id,
                         ack_status="nack", ack_reason="interlock"))
    loop.run(until_ns=1000 * MS)
    m = gcs.missions[1]
    assert m.failed and m.done()
    assert cmds.drain() == []  # no further steps issued
    assert gcs.mission_summary()["1"]["failed"] is True


def test_mission_poll_stops_once_all_done():
    loop, bus, gcs = make_gcs()
    cmds = bus.subscribe("gcs/cmd/1")
    gcs.add_mission(1, [{"kind": "arm"}])
    gcs.start_missions()
    loop.run(until_ns=MS)
    arm = Command.from_payload(cmds.drain()[0].payload)
    push_tel(bus, mk_tel("armed", seq=2, ack_cmd_id=arm.cmd_id))
    loop.run(until_ns=2000 * MS)
    assert gcs.missions[1].done()
    assert loop.pending() == 0  # the poll chain has lapsed
