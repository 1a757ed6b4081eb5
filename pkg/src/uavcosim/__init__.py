"""Co-simulation of small multicopter fleets over a simulated network.

A single event loop drives three coupled pieces: kinematic vehicles, a
packet-level network (802.11 contention, cellular abstraction, sidelink
relays), and a synchronization layer that holds every payload back until its
simulated network delay has elapsed in real time. Scenarios are JSON files;
runs leave delimited traces, a report, and rendered figures.
"""

__version__ = "0.1.0"

from .geo import GeoPos, LocalXY
from .kernel import EventLoop
from .bus import Bus

__all__ = ["Bus", "EventLoop", "GeoPos", "LocalXY", "__version__"]
