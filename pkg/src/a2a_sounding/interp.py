"""Windowed-sinc fractional delay kernels.

The same kernel serves as the channel simulator's delay filter and as the
sounder's calibrated pulse response, the way a hardware sounder is
calibrated back to back before a campaign.
"""
import math

import numpy as np

KERNEL_TAPS = 64
# delays closer than this to an integer (in samples) are treated as integer
INTEGER_TOLERANCE = 1e-9

_OFFSET_CACHE = {}


def _offsets(taps):
    if taps not in _OFFSET_CACHE:
        half = taps // 2
        j = np.arange(-half + 1, half + 1)
        _OFFSET_CACHE[taps] = (j, np.where(j % 2 == 0, 1.0, -1.0))
    return _OFFSET_CACHE[taps]


def fractional_delay_kernel(delay, taps=KERNEL_TAPS):
    """Kernel for a delay of `delay` samples.

    Returns ``(start, values)`` where ``values[m]`` is the kernel weight at
    integer sample ``start + m``. The weights are ``sinc(k - delay)`` under a
    Blackman window spanning `taps` samples. Integer delays give a unit
    impulse.
    """
    nearest = round(delay)
    if abs(delay - nearest) < INTEGER_TOLERANCE:
        return int(nearest), np.ones(1)
    half = taps // 2
    whole = math.floor(delay)
    frac = delay - whole
    j, sign = _offsets(taps)
    x = j - frac
    # sin(pi (j - frac)) = -(-1)**j sin(pi frac)
    sinc = sign * (-math.sin(math.pi * frac)) / (np.pi * x)
    c = np.cos(np.pi / half * x)
    window = 0.34 + 0.5 * c + 0.16 * c * c
    return whole - half + 1, sinc * window


def circular_kernel(delay, length, taps=KERNEL_TAPS):
    """Indices (mod `length`) and weights of the kernel on a circular grid."""
    start, values = fractional_delay_kernel(delay, taps)
    idx = (start + np.arange(len(values))) % length
    return idx, values


def circular_delay(x, delay, taps=KERNEL_TAPS):
    """Delay one period of a periodic signal by `delay` samples."""
    length = len(x)
    nearest = round(delay)
    if abs(delay - nearest) < INTEGER_TOLERANCE:
        return np.roll(x, int(nearest))
    h = np.zeros(length)
    idx, values = circular_kernel(delay, length, taps)
    np.add.at(h, idx, values)
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(h))
