"""Correlation-based CIR extraction.

Each probe period of a capture is circularly correlated with the known base
period in the frequency domain and the periods are averaged coherently.
Taps are then pulled out of the averaged correlation one at a time: the
strongest residual sample is located, its delay refined (parabolic
interpolation on the magnitude, then a bounded fit of the calibrated pulse
response), and the fitted tap is subtracted before the next search. After
each new tap every tap is re-fitted against the others so that closely
spaced arrivals do not bias one another.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InputError
from .interp import KERNEL_TAPS, circular_kernel

DEFAULT_THRESHOLD_DB = 15.0
# median |r| of complex Gaussian noise is sqrt(ln 2) times its rms value
_RAYLEIGH_MEDIAN_TO_POWER = 1.0 / math.log(2.0)
# detection never goes deeper than this below the correlation peak; without
# noise the median sits at FFT rounding level and rounding residue would pass
NUMERICAL_FLOOR_DB = -200.0


@dataclass
class SounderCapture:
    iq: np.ndarray = field(repr=False)
    sample_rate: float
    carrier: float
    timestamp: float = 0.0
    pose_ref: Optional[Tuple[object, object]] = None

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise InputError("capture sample rate must be positive")
        self.iq = np.asarray(self.iq)

    def delayed(self, samples):
        """Copy of the capture circularly delayed by an integer sample count."""
        return SounderCapture(np.roll(self.iq, samples), self.sample_rate,
                              self.carrier, self.timestamp, self.pose_ref)

    def scaled(self, gain):
        return SounderCapture(self.iq * gain, self.sample_rate, self.carrier,
                              self.timestamp, self.pose_ref)


@dataclass(frozen=True)
class CirTap:
    delay: float  # seconds, relative to the strongest tap
    power_db: float  # relative to the strongest tap
    gain: complex  # absolute, referenced to a unit-power probe

    @property
    def power(self):
        return abs(self.gain) ** 2


@dataclass
class ExtractedCir:
    """Detected taps of one capture.

    `noise_floor_db` is relative to the strongest tap (or to the correlation
    peak when nothing was detected). `noise_power_db` is the absolute noise
    power per correlation lag. `reference_delay` is the absolute position of
    the strongest tap within the probe period, in seconds.
    """

    taps: List[CirTap]
    noise_floor_db: float
    detection_threshold_db: float
    noise_power_db: float = -math.inf
    reference_delay: float = 0.0
    timestamp: float = 0.0

    def __len__(self):
        return len(self.taps)

    @property
    def delays(self):
        return np.array([t.delay for t in self.taps])

    @property
    def powers(self):
        """Linear tap powers."""
        return np.array([t.power for t in self.taps])


def period_correlations(capture, probe):
    """Circular cross-correlation of every complete probe period.

    Returns an array of shape ``(repetitions, length)`` normalised so that a
    unit-gain, zero-delay channel peaks at exactly 1 in lag 0.
    """
    if capture.sample_rate != probe.sample_rate:
        raise InputError(
            f"capture sample rate {capture.sample_rate} Hz does not match "
            f"probe rate {probe.sample_rate} Hz")
    length = probe.params.length
    iq = np.asarray(capture.iq)
    periods = len(iq) // length
    if periods < 1:
        raise InputError(f"capture holds {len(iq)} samples, shorter than one "
                         f"{length}-sample probe period")
    periods = min(periods, probe.params.repetitions)
    blocks = iq[:periods * length].reshape(periods, length).astype(complex)
    ref = np.conj(np.fft.fft(np.asarray(probe.base)))
    return np.fft.ifft(np.fft.fft(blocks, axis=1) * ref, axis=1) / length


def averaged_correlation(capture, probe):
    """Coherent average of the per-period correlations."""
    return period_correlations(capture, probe).mean(axis=0)


def noise_floor_power(correlation_magnitudes):
    """Mean noise power implied by the median correlation magnitude."""
    mags = np.asarray(correlation_magnitudes, dtype=float)
    if mags.size == 0:
        raise InputError("no correlation magnitudes given")
    return float(np.median(mags) ** 2 * _RAYLEIGH_MEDIAN_TO_POWER)


def estimate_noise_floor(correlation_magnitudes):
    """Noise floor in dB relative to the largest magnitude.

    The median magnitude is converted to a mean noise power assuming
    Rayleigh-distributed noise magnitudes.
    """
    mags = np.asarray(correlation_magnitudes, dtype=float)
    if mags.size == 0:
        raise InputError("no correlation magnitudes given")
    peak = float(np.max(mags)) ** 2
    floor = noise_floor_power(mags)
    if peak == 0:
        return -math.inf
    if floor == 0:
        return -math.inf
    return 10.0 * math.log10(floor / peak)


def _parabolic_offset(left, centre, right):
    denom = left - 2.0 * centre + right
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


class _TapFitter:
    """Fits calibrated pulse responses to a circular correlation."""

    def __init__(self, length):
        self.length = length

    def template(self, delay):
        return circular_kernel(delay, self.length)

    def project(self, resid, delay):
        idx, values = self.template(delay)
        energy = float(values @ values)
        return complex(resid[idx] @ values) / energy, idx, values

    def refine(self, resid, guess):
        def cost(d):
            g, _, values = self.project(resid, d)
            return -abs(g) ** 2 * float(values @ values)

        res = minimize_scalar(cost, bounds=(guess - 0.6, guess + 0.6),
                              method="bounded", options={"xatol": 1e-3})
        best = float(res.x)
        # the bounded search never evaluates the endpoints exactly, and an
        # integer-delay template is an exact impulse: check the nearest one
        nearest = float(round(best))
        if abs(nearest - best) < 0.05 and cost(nearest) <= cost(best):
            best = nearest
        return best


def extract_cir(capture, probe, threshold_db=DEFAULT_THRESHOLD_DB, max_taps=16,
                refine_passes=2):
    """Estimate the channel impulse response of one capture.

    Parameters
    ----------
    capture : SounderCapture
        Must contain at least one complete probe period at the probe rate.
    probe : ProbeWaveform
    threshold_db : float
        Detection margin above the estimated noise floor.
    max_taps : int
        Upper bound on the number of detected taps.

    Returns
    -------
    ExtractedCir
    """
    r = averaged_correlation(capture, probe)
    length = len(r)
    fs = capture.sample_rate
    mags = np.abs(r)
    noise = noise_floor_power(mags)
    floor = max(noise, float(np.max(mags)) ** 2 * 10.0 ** (NUMERICAL_FLOOR_DB / 10.0))
    threshold = floor * 10.0 ** (threshold_db / 10.0)

    fitter = _TapFitter(length)
    resid = r.copy()
    delays: List[float] = []
    gains: List[complex] = []

    while len(delays) < max_taps:
        power = np.abs(resid) ** 2
        k = int(np.argmax(power))
        if power[k] < threshold or power[k] == 0:
            break
        m = np.sqrt(power)
        guess = k + _parabolic_offset(m[k - 1], m[k], m[(k + 1) % length])
        delay = fitter.refine(resid, guess)
        g, idx, values = fitter.project(resid, delay)
        resid[idx] -= g * values
        delays.append(delay)
        gains.append(g)
        # re-fit the taps whose pulse support overlaps the new one
        near = [i for i in range(len(delays) - 1)
                if _circular_distance(delays[i], delay, length) < KERNEL_TAPS]
        if near:
            for _ in range(refine_passes):
                for i in near + [len(delays) - 1]:
                    _refit(fitter, resid, delays, gains, i)
        if len(delays) > 1 and _has_duplicate(delays, length):
            # two fits collapsed onto one arrival; merge and stop searching
            delays, gains, resid = _joint_fit(r, _dedupe(delays, length), fitter)
            break

    if delays:
        delays, gains, resid = _joint_fit(r, delays, fitter)
        keep = [i for i, g in enumerate(gains) if abs(g) ** 2 >= threshold]
        if len(keep) != len(delays):
            delays = [delays[i] for i in keep]
            if delays:
                delays, gains, resid = _joint_fit(r, delays, fitter)
            else:
                gains = []

    peak_power = max((abs(g) ** 2 for g in gains), default=float(np.max(mags)) ** 2)
    floor_rel = (10.0 * math.log10(noise / peak_power)
                 if noise > 0 and peak_power > 0 else -math.inf)
    noise_db = 10.0 * math.log10(noise) if noise > 0 else -math.inf
    if not delays:
        return ExtractedCir([], floor_rel, threshold_db, noise_db, 0.0, capture.timestamp)

    strongest = int(np.argmax([abs(g) for g in gains]))
    ref = delays[strongest] % length
    taps = []
    for d, g in zip(delays, gains):
        rel = (d - delays[strongest] + length / 2) % length - length / 2
        taps.append(CirTap(rel / fs, 10.0 * math.log10(abs(g) ** 2 / peak_power), g))
    taps.sort(key=lambda t: t.delay)
    return ExtractedCir(taps, floor_rel, threshold_db, noise_db, ref / fs, capture.timestamp)


def _circular_distance(a, b, length):
    return abs((a - b + length / 2) % length - length / 2)


def _refit(fitter, resid, delays, gains, i):
    idx, values = fitter.template(delays[i])
    resid[idx] += gains[i] * values
    delays[i] = fitter.refine(resid, delays[i])
    gains[i], idx, values = fitter.project(resid, delays[i])
    resid[idx] -= gains[i] * values


def _has_duplicate(delays, length):
    d = np.sort(np.mod(delays, length))
    gaps = np.diff(np.append(d, d[0] + length))
    return bool(np.any(gaps < 0.5))


def _dedupe(delays, length):
    kept = []
    for d in delays:
        if all(_circular_distance(d, k, length) >= 0.5 for k in kept):
            kept.append(d)
    return kept


def _joint_fit(r, delays, fitter):
    """Least-squares gains for fixed delays; returns the new residual too."""
    length = len(r)
    columns = []
    support = set()
    for d in delays:
        idx, values = fitter.template(d)
        col = np.zeros(length)
        np.add.at(col, idx, values)
        columns.append(col)
        support.update(idx.tolist())
    rows = np.array(sorted(support))
    a = np.stack(columns, axis=1)[rows]
    gains, *_ = np.linalg.lstsq(a.astype(complex), r[rows], rcond=None)
    resid = r.copy()
    resid[rows] -= a @ gains
    return list(delays), [complex(g) for g in gains], resid


def received_power_db(cir):
    """Total received power ``10 log10(sum |g_i|**2)`` of the detected taps."""
    if not cir.taps:
        raise InputError("received power is undefined for a CIR without taps")
    return 10.0 * math.log10(sum(t.power for t in cir.taps))
