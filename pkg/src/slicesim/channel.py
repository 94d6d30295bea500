"""Per-link radio abstraction: WINNER+ B1 pathloss, Rayleigh fading,
noise-limited SINR, logistic BLER, truncated-Shannon rate.

The system is noise-limited: slices hold orthogonal RBs and intra-slice
grants are orthogonal per TTI, so no interference term appears.
"""
from __future__ import annotations

import math

import numpy as np

from .config import ChannelConfig, TTI_MS

_MIN_DIST_M = 3.0


def pathloss_db(is_los: bool, d1: float, d2: float, carrier_ghz: float) -> float:
    """WINNER+ B1 Manhattan-grid pathloss (sub-breakpoint LOS regime)."""
    d1 = max(float(d1), _MIN_DIST_M)
    fc = float(carrier_ghz)
    pl_los = 22.7 * math.log10(d1) + 41.0 + 20.0 * math.log10(fc / 5.0)
    if is_los:
        return pl_los
    d2 = max(float(d2), _MIN_DIST_M)
    nj = max(2.8 - 0.0024 * d1, 1.84)
    return (pl_los + 17.3 - 12.5 * nj + 10.0 * nj * math.log10(d2)
            + 3.0 * math.log10(fc / 5.0))


def fading_sample(rng: np.random.Generator) -> float:
    """Rayleigh power gain |h|^2: exponential with unit mean."""
    return float(rng.exponential(1.0))


def noise_dbm(params: ChannelConfig, n_rbs: int) -> float:
    return (params.noise_psd_dbm_hz
            + 10.0 * math.log10(n_rbs * params.rb_bandwidth_hz)
            + params.noise_figure_db)


def sinr_db(params: ChannelConfig, pathloss: float, fading_gain: float,
            n_rbs: int) -> float:
    """Link-budget SINR with transmit power pooled over the granted RBs."""
    if n_rbs < 1:
        raise ValueError("n_rbs must be >= 1")
    if fading_gain <= 0.0:
        return params.sinr_floor_db
    value = (params.tx_power_dbm - pathloss + 10.0 * math.log10(fading_gain)
             - noise_dbm(params, n_rbs))
    return max(value, params.sinr_floor_db)


def bler_prob(sinr: float, params: ChannelConfig) -> float:
    """Logistic AWGN-BLER surrogate, strictly decreasing in SINR."""
    x = params.bler_slope_per_db * (sinr - params.bler_midpoint_db)
    # clamp the exponent to keep exp() finite; beyond this p is 0 or 1 anyway
    x = min(max(x, -500.0), 500.0)
    return 1.0 / (1.0 + math.exp(x))


def bits_per_tti(sinr: float, n_rbs: int, params: ChannelConfig) -> int:
    """Truncated-Shannon deliverable bits in one TTI over n_rbs RBs."""
    if n_rbs <= 0:
        return 0
    sinr_linear = 10.0 ** (sinr / 10.0)
    se = min(params.spectral_eff_factor * math.log2(1.0 + sinr_linear),
             params.max_spectral_eff)
    return int(math.floor(se * n_rbs * params.rb_bandwidth_hz * TTI_MS * 1e-3))
