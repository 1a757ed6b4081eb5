"""Packet-level network models sharing the co-simulation event loop."""

from .channel import ChannelParams, rss_dbm
from .core import NetSim, Packet, SchedulerMode
from .lte import LteCell, LteParams
from .wifi import DcfChannel, WifiParams

__all__ = ["ChannelParams", "DcfChannel", "LteCell", "LteParams", "NetSim",
           "Packet", "SchedulerMode", "WifiParams", "rss_dbm"]
