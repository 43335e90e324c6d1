"""Per-snapshot delay metrics and campaign-level aggregation.

The aggregation mirrors the usual figure set of a sounding campaign:
received power against altitude (split by heading), against heading,
delay-spread CDFs per altitude band, horizontal power grids per altitude
slice, and a log-distance path-loss fit.
"""
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import PathLossModel
from .errors import FitError, InputError
from .sounder import received_power_db


@dataclass(frozen=True)
class DelayMetrics:
    mean_delay: float
    rms_delay_spread: float
    component_count: int
    powers: Tuple[float, ...] = ()


def rms_delay_spread(taps):
    """Mean delay and RMS delay spread of ``(power, delay)`` pairs.

    Powers are linear and delays in seconds::

        mean = sum(P_i tau_i) / sum(P_i)
        rms  = sqrt(sum(P_i (tau_i - mean)**2) / sum(P_i))

    >>> m = rms_delay_spread([(1.0, 0.0), (0.25, 40e-9)])
    >>> round(m.mean_delay * 1e9, 9), round(m.rms_delay_spread * 1e9, 9)
    (8.0, 16.0)
    """
    taps = list(taps)
    if not taps:
        raise InputError("delay spread needs at least one tap")
    p = np.array([t[0] for t in taps], dtype=float)
    tau = np.array([t[1] for t in taps], dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)) or not np.all(np.isfinite(tau)):
        raise InputError("tap powers must be finite and non-negative")
    total = p.sum()
    if total <= 0:
        raise InputError("all tap powers are zero")
    mean = float(p @ tau / total)
    # second central moment; clamp tiny negative rounding
    var = float(p @ (tau - mean) ** 2 / total)
    return DelayMetrics(mean, math.sqrt(max(var, 0.0)), len(taps), tuple(p.tolist()))


def cir_delay_metrics(cir):
    """Delay metrics of an extracted CIR (post-threshold taps only)."""
    return rms_delay_spread((t.power, t.delay) for t in cir.taps)


def fit_path_loss(samples, d0=1.0, fixed_gamma=None, min_spread=1.5):
    """Least-squares log-distance fit to ``(distance_m, path_loss_db)`` pairs.

    Regresses path loss on ``10 log10(d / d0)``; `sigma` is the standard
    deviation of the residuals. With `fixed_gamma` only the intercept is
    estimated, which is the only well-posed fit when every sample sits at
    nearly the same distance.
    """
    samples = list(samples)
    d = np.array([s[0] for s in samples], dtype=float)
    pl = np.array([s[1] for s in samples], dtype=float)
    if np.any(~(d > 0)):
        raise FitError("distances must be positive")
    x = 10.0 * np.log10(d / d0)
    if fixed_gamma is not None:
        if len(samples) < 1:
            raise FitError("no samples to fit")
        intercept = float(np.mean(pl - fixed_gamma * x))
        resid = pl - intercept - fixed_gamma * x
        return PathLossModel(intercept, d0, float(fixed_gamma), float(np.std(resid)))
    distinct = np.unique(d)
    if len(distinct) < 2:
        raise FitError("path-loss fit needs at least two distinct distances")
    if len(samples) >= 3 and d.max() / d.min() < min_spread:
        raise FitError(
            f"distances span a factor {d.max() / d.min():.3f}, below {min_spread}")
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, pl, rcond=None)
    resid = pl - design @ coef
    return PathLossModel(float(coef[0]), d0, float(coef[1]), float(np.std(resid)))


def empirical_cdf(values):
    """Sorted values and ``P(X <= x)`` at each, right-continuous steps."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        return x, x
    # collapse ties so each distinct value carries the full jump
    distinct, counts = np.unique(x, return_counts=True)
    return distinct, np.cumsum(counts) / x.size


@dataclass(frozen=True)
class LinkMetrics:
    timestamp: float
    received_power_db: float
    mean_delay: float
    rms_delay_spread: float
    tap_count: int
    distance: float
    north: float
    east: float
    altitude: float
    heading: float
    elevation: float


@dataclass
class AggregationConfig:
    altitude_bin_m: float = 2.0
    altitude_range: Tuple[float, float] = (45.0, 85.0)
    heading_bin_deg: float = 10.0
    delay_bands: Tuple[Tuple[float, float], ...] = (
        (45.0, 55.0), (55.0, 65.0), (65.0, 75.0), (75.0, 85.0))
    grid_cell_m: float = 4.0
    grid_extent_m: float = 20.0
    slice_centers: Tuple[float, ...] = (49.0, 57.0, 65.0, 73.0, 81.0)
    slice_thickness_m: float = 8.0
    d0: float = 1.0
    free_space_gamma: float = 2.0


@dataclass
class CampaignStats:
    links: List[LinkMetrics]
    power_vs_altitude: List[Tuple[float, float, float, int]]
    power_vs_heading: List[Tuple[float, float, int]]
    altitude_power: List[Tuple[float, float, int]]
    delay_spread_cdfs: Dict[Tuple[float, float], Tuple[np.ndarray, np.ndarray]]
    power_grids: Dict[float, List[Tuple[float, float, float, int]]]
    path_loss: Optional[PathLossModel]
    path_loss_gamma_fixed: bool = False
    skipped: int = 0
    config: AggregationConfig = field(default_factory=AggregationConfig)


def link_metrics(tx_pose, rx_pose, cir):
    """Derived quantities of one snapshot, or None when nothing was detected."""
    if not cir.taps:
        return None
    dm = cir_delay_metrics(cir)
    tx = np.asarray(tx_pose.position, dtype=float)
    rx = np.asarray(rx_pose.position, dtype=float)
    v = rx - tx
    distance = float(np.linalg.norm(v))
    elevation = math.atan2(v[2], math.hypot(v[0], v[1])) if distance > 0 else 0.0
    return LinkMetrics(rx_pose.t, received_power_db(cir), dm.mean_delay,
                       dm.rms_delay_spread, dm.component_count, distance,
                       float(rx[0]), float(rx[1]), float(rx[2]),
                       float(rx_pose.heading), elevation)


def _bin_center(value, width, origin=0.0):
    return origin + (math.floor((value - origin) / width) + 0.5) * width


def heading_bin(heading_rad, width_deg):
    """Centre (degrees, in [-180, 180)) of the heading bin holding a yaw."""
    deg = (math.degrees(heading_rad) + 180.0) % 360.0 - 180.0
    return _bin_center(deg, width_deg, -180.0)


def altitude_bin(altitude, cfg):
    lo, hi = cfg.altitude_range
    nbins = max(1, int(round((hi - lo) / cfg.altitude_bin_m)))
    k = min(nbins - 1, max(0, int(math.floor((altitude - lo) / cfg.altitude_bin_m))))
    return lo + (k + 0.5) * cfg.altitude_bin_m


def _mean_db(values):
    return float(np.mean(values))


def aggregate_campaign(snapshots, cfg=None):
    """Fold ``(tx_pose, rx_pose, ExtractedCir)`` snapshots into CampaignStats.

    Power averages are taken in dB. Snapshots without any detected tap
    carry no power or delay information and are counted in ``skipped``.
    """
    cfg = AggregationConfig() if cfg is None else cfg
    snapshots = list(snapshots)
    if not snapshots:
        raise InputError("no snapshots to aggregate")
    links = []
    skipped = 0
    for tx_pose, rx_pose, cir in snapshots:
        m = link_metrics(tx_pose, rx_pose, cir)
        if m is None:
            skipped += 1
        else:
            links.append(m)
    if not links:
        raise InputError("no snapshot contains a detected tap")

    by_alt_head = defaultdict(list)
    by_head = defaultdict(list)
    by_alt = defaultdict(list)
    for m in links:
        a = altitude_bin(m.altitude, cfg)
        h = heading_bin(m.heading, cfg.heading_bin_deg)
        by_alt_head[(a, h)].append(m.received_power_db)
        by_head[h].append(m.received_power_db)
        by_alt[a].append(m.received_power_db)
    power_vs_altitude = [(a, _mean_db(v), h, len(v))
                         for (a, h), v in sorted(by_alt_head.items())]
    power_vs_heading = [(h, _mean_db(v), len(v)) for h, v in sorted(by_head.items())]
    altitude_power = [(a, _mean_db(v), len(v)) for a, v in sorted(by_alt.items())]

    cdfs = {}
    for lo, hi in cfg.delay_bands:
        last = hi == max(b[1] for b in cfg.delay_bands)
        spreads = [m.rms_delay_spread for m in links
                   if lo <= m.altitude < hi or (last and m.altitude == hi)]
        cdfs[(lo, hi)] = empirical_cdf(spreads)

    grids = {}
    half = cfg.slice_thickness_m / 2.0
    for center in cfg.slice_centers:
        cells = defaultdict(list)
        for m in links:
            if abs(m.altitude - center) <= half:
                e = _bin_center(m.east, cfg.grid_cell_m, -cfg.grid_extent_m)
                n = _bin_center(m.north, cfg.grid_cell_m, -cfg.grid_extent_m)
                cells[(e, n)].append(m.received_power_db)
        grids[center] = [(e, n, _mean_db(v), len(v)) for (e, n), v in sorted(cells.items())]

    samples = [(m.distance, -m.received_power_db) for m in links]
    gamma_fixed = False
    try:
        path_loss = fit_path_loss(samples, cfg.d0)
    except FitError:
        # a sphere around the transmitter keeps the distance constant
        path_loss = fit_path_loss(samples, cfg.d0, fixed_gamma=cfg.free_space_gamma)
        gamma_fixed = True

    return CampaignStats(links, power_vs_altitude, power_vs_heading, altitude_power,
                         cdfs, grids, path_loss, gamma_fixed, skipped, cfg)
