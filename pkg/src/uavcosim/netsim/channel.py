"""Radio propagation: log-distance path loss with optional Nakagami-m fading.

Received power in dBm at distance d meters:

    rss = tx_dbm - (PL0 + 10 * n * log10(d / 1 m)) + 10 * log10(G)

with PL0 = 40.05 dB (loss at 1 m) and path-loss exponent n = 3.0 by default.
G is a unit-mean Gamma(m, 1/m) power gain; m = 0 disables fading entirely
(the deterministic case used by the regression scenarios).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

MIN_DISTANCE_M = 0.1


@dataclass(frozen=True)
class ChannelParams:
    pl0_db: float = 40.05
    exponent: float = 3.0
    nakagami_m: float = 0.0      # 0 = no fading
    noise_floor_dbm: float = -94.0


def path_loss_db(dist_m: float, params: ChannelParams) -> float:
    d = max(dist_m, MIN_DISTANCE_M)
    return params.pl0_db + 10.0 * params.exponent * math.log10(d)


def fading_gain_db(params: ChannelParams, rng: random.Random) -> float:
    """One fading draw; 0 dB when fading is disabled."""
    m = params.nakagami_m
    if m <= 0.0:
        return 0.0
    g = rng.gammavariate(m, 1.0 / m)
    if g <= 0.0:  # gammavariate can underflow for tiny m
        g = 1e-12
    return 10.0 * math.log10(g)


def rss_dbm(tx_dbm: float, dist_m: float, params: ChannelParams,
            rng: random.Random = None) -> float:
    rss = tx_dbm - path_loss_db(dist_m, params)
    if rng is not None and params.nakagami_m > 0.0:
        rss += fading_gain_db(params, rng)
    return rss


def snr_db(rss: float, params: ChannelParams) -> float:
    return rss - params.noise_floor_dbm
