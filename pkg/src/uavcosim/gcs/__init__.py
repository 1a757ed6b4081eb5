"""Ground-control side: command issue, telemetry intake, video reassembly."""

from .station import CommandRecord, GroundStation, MissionRunner
from .frames import FrameSink, FrameSource

__all__ = ["CommandRecord", "GroundStation", "MissionRunner",
           "FrameSink", "FrameSource"]
