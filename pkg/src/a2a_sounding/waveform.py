"""Zadoff-Chu probe waveforms.

The sounder transmits one Zadoff-Chu base period repeated back to back
with no cyclic prefix, so every correlation in the toolkit is circular over
a single period.
"""
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import InputError, ParameterError

#: Sample rate of the campaign probe (Hz).
DEFAULT_SAMPLE_RATE = 56e6


@dataclass(frozen=True)
class ZcParams:
    """Zadoff-Chu construction parameters.

    Parameters
    ----------
    length : int
        Samples in one base period.
    root : int
        Root index, must be coprime with `length`.
    repetitions : int
        Number of back-to-back periods in the transmit frame.
    """

    length: int = 2048
    root: int = 89
    repetitions: int = 4

    def __post_init__(self):
        for name in ("length", "root", "repetitions"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ParameterError(f"{name} must be positive, got {value}")
        if gcd(int(self.root), int(self.length)) != 1:
            raise ParameterError(
                f"root {self.root} is not coprime with length {self.length}")


@dataclass(frozen=True)
class ProbeWaveform:
    samples: np.ndarray = field(repr=False)
    params: ZcParams
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")
        expected = self.params.length * self.params.repetitions
        if len(self.samples) != expected:
            raise ParameterError(
                f"probe holds {len(self.samples)} samples, expected {expected}")

    @property
    def base(self):
        """One base period of the probe."""
        return self.samples[:self.params.length]

    @property
    def period(self):
        """Duration of one base period in seconds."""
        return self.params.length / self.sample_rate


def zc_sequence(length, root):
    """One period of the Zadoff-Chu sequence.

    Even lengths use ``exp(-1j*pi*root*n**2/length)`` and odd lengths use
    ``exp(-1j*pi*root*n*(n+1)/length)``. The phase numerator is reduced
    modulo ``2*length`` in integer arithmetic first so the phase stays
    exact for long sequences.
    """
    n = np.arange(length, dtype=np.int64)
    if length % 2 == 0:
        numerator = (root * n * n) % (2 * length)
    else:
        numerator = (root * n * (n + 1)) % (2 * length)
    return np.exp(-1j * np.pi * numerator / length)


def generate_zc(params=None, sample_rate=DEFAULT_SAMPLE_RATE):
    """Build the repeated Zadoff-Chu probe described by `params`.

    Examples
    --------
    >>> w = generate_zc(ZcParams(2048, 89, 4))
    >>> len(w.samples), complex(w.samples[0])
    (8192, (1+0j))
    """
    if params is None:
        params = ZcParams()
    base = zc_sequence(params.length, params.root)
    samples = np.tile(base, params.repetitions)
    samples.flags.writeable = False
    return ProbeWaveform(samples, params, float(sample_rate))


def autocorrelation_profile(waveform):
    """Circular autocorrelation magnitude of one base period, for every lag.

    ``profile[0]`` equals the energy of one period, i.e. its length for a
    unit-modulus probe.
    """
    if len(waveform.samples) == 0:
        raise InputError("empty waveform")
    base = np.asarray(waveform.base)
    spectrum = np.fft.fft(base)
    profile = np.abs(np.fft.ifft(spectrum * np.conj(spectrum)))
    # the zero lag is the period energy; take it directly to avoid FFT rounding
    profile[0] = np.sum(np.abs(base) ** 2)
    return profile


def peak_sidelobe_db(waveform):
    """Largest nonzero-lag autocorrelation magnitude, in dB below the peak."""
    profile = autocorrelation_profile(waveform)
    sidelobe = np.max(profile[1:])
    if sidelobe == 0:
        return np.inf
    return 20 * np.log10(profile[0] / sidelobe)
