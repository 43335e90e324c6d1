"""Geometric multipath model of the air-to-air link.

A realization is a discrete set of taps ``h(tau) = sum_i a_i delta(tau - tau_i)``
built from the line-of-sight ray, a specular ground bounce (image method over
flat ground at U = 0) and any number of point scatterers. Each ray is scaled
by both antenna patterns along its departure and arrival directions and by
the airframe shadow of either vehicle.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError, GeometryError, ParameterError
from .interp import INTEGER_TOLERANCE, circular_kernel
from .sounder import SounderCapture
from .trajectory import PoseSample

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER = 3.4e9


class Origin(str, Enum):
    LOS = "los"
    GROUND = "ground_reflection"
    REFLECTOR = "reflector"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class MultipathComponent:
    amplitude: complex
    delay: float
    origin: Origin = Origin.SYNTHETIC

    def __post_init__(self):
        if not (math.isfinite(self.delay) and self.delay >= 0):
            raise ParameterError(f"tap delay must be finite and >= 0, got {self.delay}")

    @property
    def power(self):
        return abs(self.amplitude) ** 2


@dataclass
class ChannelRealization:
    """Taps at one instant, kept sorted by delay."""

    components: List[MultipathComponent]
    timestamp: float = 0.0
    tx_pose: Optional[PoseSample] = None
    rx_pose: Optional[PoseSample] = None
    carrier: float = DEFAULT_CARRIER

    def __post_init__(self):
        self.components = sorted(self.components, key=lambda c: c.delay)

    def __len__(self):
        return len(self.components)

    @property
    def delays(self):
        return np.array([c.delay for c in self.components])

    @property
    def amplitudes(self):
        return np.array([c.amplitude for c in self.components], dtype=complex)

    def total_power(self):
        return float(sum(c.power for c in self.components))

    def by_origin(self, origin):
        return [c for c in self.components if c.origin == Origin(origin)]


@dataclass(frozen=True)
class PathLossModel:
    pl_d0: float
    d0: float = 1.0
    gamma: float = 2.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.d0 > 0:
            raise ParameterError(f"d0 must be positive, got {self.d0}")
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class AntennaModel:
    """Dipole-like pattern plus an airframe shadow cone.

    The pattern is ``peak_gain_dbi + 10 log10((1 - e) cos(el)**2 + e)`` with
    ``e = 10**(-null_depth_db / 10)``, so the overhead nulls bottom out at
    `null_depth_db` below the peak. The shadow cone points backwards out of
    the airframe (body azimuth pi, elevation `shadow_elevation`); rays inside
    it lose `shadow_attenuation_db`. Angles are in radians.
    """

    peak_gain_dbi: float = 2.15
    null_depth_db: float = 20.0
    shadow_half_angle: float = math.radians(55.0)
    shadow_attenuation_db: float = 15.0
    # tilted down so that the airframe also hides the ground bounce
    shadow_elevation: float = math.radians(-40.0)

    def __post_init__(self):
        if self.null_depth_db < 0:
            raise ParameterError("null_depth_db must be >= 0")
        if abs(self.peak_gain_dbi) > 30 or abs(self.peak_gain_dbi - self.null_depth_db) > 30:
            raise ParameterError("antenna gain must stay within +/-30 dBi")
        if self.shadow_attenuation_db < 0:
            raise ParameterError("shadow_attenuation_db must be >= 0")
        if not 0 <= self.shadow_half_angle <= math.pi:
            raise ParameterError("shadow_half_angle must lie in [0, pi]")

    def gain_db(self, azimuth, elevation):
        floor = 10.0 ** (-self.null_depth_db / 10.0)
        c2 = math.cos(elevation) ** 2
        return self.peak_gain_dbi + 10.0 * math.log10((1.0 - floor) * c2 + floor)

    def shadowed(self, azimuth, elevation):
        """True when the body-frame direction falls inside the shadow cone."""
        if self.shadow_attenuation_db == 0 or self.shadow_half_angle == 0:
            return False
        direction = _unit_from_angles(azimuth, elevation)
        axis = _unit_from_angles(math.pi, self.shadow_elevation)
        return float(np.dot(direction, axis)) > math.cos(self.shadow_half_angle)

    def amplitude(self, azimuth, elevation, shadowing=True):
        """Linear voltage factor along a body-frame direction."""
        g = self.gain_db(azimuth, elevation)
        if shadowing and self.shadowed(azimuth, elevation):
            g -= self.shadow_attenuation_db
        return 10.0 ** (g / 20.0)


@dataclass(frozen=True)
class Reflector:
    """Point scatterer; `gain_db` is its radar cross-section in dBsm."""

    position: Tuple[float, float, float]
    gain_db: float


@dataclass(frozen=True)
class Environment:
    ground: bool = True
    ground_reflection_coefficient: float = -0.9
    reflectors: Tuple[Reflector, ...] = ()
    tx_antenna: AntennaModel = field(default_factory=AntennaModel)
    rx_antenna: AntennaModel = field(default_factory=AntennaModel)
    shadowing: bool = True

    def without_reflectors(self):
        return replace(self, reflectors=())


#: a single building-sized scatterer 150 m east of the sphere centre
DEFAULT_REFLECTOR = Reflector((0.0, 150.0, 10.0), 6.0)


def default_environment():
    """Ground bounce plus one distant scatterer, default antennas."""
    return Environment(reflectors=(DEFAULT_REFLECTOR,))


def _unit_from_angles(azimuth, elevation):
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def body_angles(direction, heading):
    """Azimuth/elevation of an NEU direction in a yaw-only body frame."""
    n, e, u = direction
    azimuth = math.atan2(e, n) - heading
    azimuth = (azimuth + math.pi) % (2 * math.pi) - math.pi
    elevation = math.atan2(u, math.hypot(n, e))
    return azimuth, elevation


def wavelength(carrier):
    return SPEED_OF_LIGHT / carrier


def free_space_path_loss_db(distance, carrier=DEFAULT_CARRIER):
    """``20 log10(4 pi d / lambda)``."""
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return 20.0 * math.log10(4.0 * math.pi * distance / wavelength(carrier))


def path_loss_db(model, d, shadow_draw=None):
    """Log-distance path loss ``PL(d0) + 10 gamma log10(d / d0) + sigma X``.

    `shadow_draw` is a standard-normal variate; without it the shadowing
    term is zero.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("path loss distance must be positive")
    pl = model.pl_d0 + 10.0 * model.gamma * np.log10(d / model.d0)
    if shadow_draw is not None:
        pl = pl + model.sigma * np.asarray(shadow_draw, dtype=float)
    return float(pl) if pl.ndim == 0 else pl


def free_space_model(carrier=DEFAULT_CARRIER, d0=1.0):
    return PathLossModel(free_space_path_loss_db(d0, carrier), d0, 2.0, 0.0)


def _ray_gain(tx_pose, rx_pose, departure, arrival, ant_tx, ant_rx, shadowing):
    az_t, el_t = body_angles(departure, tx_pose.heading)
    az_r, el_r = body_angles(arrival, rx_pose.heading)
    return (ant_tx.amplitude(az_t, el_t, shadowing)
            * ant_rx.amplitude(az_r, el_r, shadowing))


def los_shadowed(tx_pose, rx_pose, ant_tx, ant_rx):
    """Whether either airframe blocks the direct ray."""
    tx = np.asarray(tx_pose.position, dtype=float)
    rx = np.asarray(rx_pose.position, dtype=float)
    return (ant_tx.shadowed(*body_angles(rx - tx, tx_pose.heading))
            or ant_rx.shadowed(*body_angles(tx - rx, rx_pose.heading)))


def simulate_channel(tx_pose, rx_pose, env=None, ant_tx=None, ant_rx=None,
                     carrier=DEFAULT_CARRIER):
    """Multipath realization for one transmitter/receiver pose pair."""
    env = Environment() if env is None else env
    ant_tx = env.tx_antenna if ant_tx is None else ant_tx
    ant_rx = env.rx_antenna if ant_rx is None else ant_rx
    if not carrier > 0:
        raise ParameterError(f"carrier must be positive, got {carrier}")
    tx = np.asarray(tx_pose.position, dtype=float)
    rx = np.asarray(rx_pose.position, dtype=float)
    d_los = float(np.linalg.norm(rx - tx))
    if d_los < 1e-9:
        raise GeometryError("transmitter and receiver positions coincide")
    lam = wavelength(carrier)
    k = 2.0 * math.pi / lam

    def tap(path, scale, departure, arrival, origin):
        g = _ray_gain(tx_pose, rx_pose, departure, arrival, ant_tx, ant_rx, env.shadowing)
        a = scale * g * complex(math.cos(k * path), -math.sin(k * path))
        return MultipathComponent(a, path / SPEED_OF_LIGHT, origin)

    components = [tap(d_los, lam / (4 * math.pi * d_los), rx - tx, tx - rx, Origin.LOS)]

    if env.ground and tx[2] > 0 and rx[2] > 0 and env.ground_reflection_coefficient != 0:
        image = rx * np.array([1.0, 1.0, -1.0])
        d_ground = float(np.linalg.norm(image - tx))
        bounce = tx + (image - tx) * (tx[2] / (tx[2] + rx[2]))
        scale = env.ground_reflection_coefficient * lam / (4 * math.pi * d_ground)
        components.append(tap(d_ground, scale, bounce - tx, bounce - rx, Origin.GROUND))

    for refl in env.reflectors:
        if not math.isfinite(refl.gain_db):
            continue
        q = np.asarray(refl.position, dtype=float)
        d1 = float(np.linalg.norm(q - tx))
        d2 = float(np.linalg.norm(rx - q))
        if d1 < 1e-9 or d2 < 1e-9:
            raise GeometryError("reflector coincides with a vehicle")
        rcs = 10.0 ** (refl.gain_db / 10.0)
        scale = math.sqrt(rcs) * lam / ((4 * math.pi) ** 1.5 * d1 * d2)
        components.append(tap(d1 + d2, scale, q - tx, q - rx, Origin.REFLECTOR))

    return ChannelRealization(components, rx_pose.t, tx_pose, rx_pose, float(carrier))


def channel_response(ch, probe):
    """Noise-free received base period: the probe through every tap."""
    base = np.asarray(probe.base)
    fs = probe.sample_rate
    length = len(base)
    out = np.zeros(length, dtype=complex)
    h = None
    for c in ch.components:
        delay = c.delay * fs
        if abs(delay - round(delay)) < INTEGER_TOLERANCE:
            out += c.amplitude * np.roll(base, int(round(delay)))
            continue
        if h is None:
            h = np.zeros(length, dtype=complex)
        idx, values = circular_kernel(delay, length)
        np.add.at(h, idx, c.amplitude * values)
    if h is not None:
        out += np.fft.ifft(np.fft.fft(base) * np.fft.fft(h))
    return out


def apply_channel(ch, probe, snr_db=math.inf, seed=0):
    """Received capture of the full repeated probe through `ch`.

    Complex white Gaussian noise is added at `snr_db` per sample relative
    to the strongest tap. The result is deterministic in `seed`.
    """
    if not probe.sample_rate > 0:
        raise ParameterError("probe sample rate must be positive")
    period = channel_response(ch, probe)
    iq = np.tile(period, probe.params.repetitions)
    if math.isfinite(snr_db) and len(ch.components):
        strongest = max(c.power for c in ch.components)
        noise_power = strongest / 10.0 ** (snr_db / 10.0)
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((2, len(iq)))
        iq = iq + math.sqrt(noise_power / 2.0) * (noise[0] + 1j * noise[1])
    pose_ref = None
    if ch.tx_pose is not None and ch.rx_pose is not None:
        pose_ref = (ch.tx_pose, ch.rx_pose)
    return SounderCapture(iq, probe.sample_rate, ch.carrier, ch.timestamp, pose_ref)
