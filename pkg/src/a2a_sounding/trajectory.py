"""Spherical measurement trajectory around a hovering transmitter.

Positions are in a local North-East-Up frame in meters. The receiver climbs
from the bottom pole of a sphere of radius ``R`` centred at altitude ``Y``
to the top pole while its azimuth sweeps ``turns`` full revolutions::

    U(t) = (v / R) t + Y - R
    N(t) = R sqrt(1 - z**2) cos(n pi z)
    E(t) = R sqrt(1 - z**2) sin(n pi z),     z = (U(t) - Y) / R

Taken literally this climbs at the constant rate ``v / R``. The arc-length
sampler walks the same curve at a constant ground speed instead.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, ParameterError

Vec3 = Tuple[float, float, float]

# horizontal separation below which a heading is undefined (m)
HEADING_EPS = 1e-9
# points in the dense polar-angle table used to invert arc length
_ARC_TABLE_SIZE = 1 << 16


@dataclass(frozen=True)
class SphereTrajectoryParams:
    radius: float = 20.0
    center_altitude: float = 65.0
    turns: int = 8
    path_velocity: float = 1.5
    sample_rate: float = 10.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"radius must be positive, got {self.radius}")
        if not self.path_velocity > 0:
            raise ParameterError(f"path_velocity must be positive, got {self.path_velocity}")
        if int(self.turns) != self.turns or self.turns < 1:
            raise ParameterError(f"turns must be an integer >= 1, got {self.turns}")
        if not self.sample_rate > 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if not self.center_altitude - self.radius > 0:
            raise ParameterError(
                f"floor altitude {self.center_altitude - self.radius} m is not above ground")

    @property
    def floor(self):
        return self.center_altitude - self.radius

    @property
    def ceiling(self):
        return self.center_altitude + self.radius

    @property
    def center(self) -> Vec3:
        return (0.0, 0.0, float(self.center_altitude))

    @property
    def climb_duration(self):
        """Time for the literal parametric path to reach the top pole."""
        return 2.0 * self.radius ** 2 / self.path_velocity


@dataclass(frozen=True)
class PoseSample:
    t: float
    position: Vec3
    heading: float = 0.0

    @property
    def north(self):
        return self.position[0]

    @property
    def east(self):
        return self.position[1]

    @property
    def up(self):
        return self.position[2]


class Heading(NamedTuple):
    value: float
    degenerate: bool = False


def assign_heading(rx_position, tx_position, previous=None):
    """Yaw that points the receiver at the transmitter (0 = north, +pi/2 = east).

    When the two positions coincide horizontally the bearing is undefined:
    `previous` is held if given, otherwise 0. Either way the result is
    flagged as degenerate.
    """
    d_north = tx_position[0] - rx_position[0]
    d_east = tx_position[1] - rx_position[1]
    if math.hypot(d_north, d_east) < HEADING_EPS:
        return Heading(previous if previous is not None else 0.0, True)
    yaw = math.atan2(d_east, d_north)
    if yaw >= math.pi:
        yaw -= 2 * math.pi
    return Heading(yaw, False)


def _point_at_altitude(up, p):
    """Sphere point for a given Up coordinate, straight from the path equations."""
    z = (up - p.center_altitude) / p.radius
    z = min(1.0, max(-1.0, z))
    horizontal = p.radius * math.sqrt(1.0 - z * z)
    angle = p.turns * math.pi * z
    return (horizontal * math.cos(angle), horizontal * math.sin(angle), up)


def sphere_point_parametric(t, p, tx_position=None, previous_heading=None):
    """Pose at time `t` on the literal (constant climb rate) path."""
    if not 0.0 <= t <= p.climb_duration * (1 + 1e-12):
        raise DomainError(
            f"t={t} s outside [0, {p.climb_duration}] s for this sphere")
    up = (p.path_velocity / p.radius) * t + p.center_altitude - p.radius
    position = _point_at_altitude(up, p)
    tx = p.center if tx_position is None else tx_position
    heading = assign_heading(position, tx, previous_heading).value
    return PoseSample(float(t), position, heading)


def sphere_path_parametric(p, tx_position=None):
    """Literal path sampled at ``p.sample_rate`` including both poles."""
    duration = p.climb_duration
    times = [k / p.sample_rate for k in range(int(duration * p.sample_rate) + 1)]
    if times[-1] < duration:
        times.append(duration)
    poses = []
    previous = None
    for t in times:
        pose = sphere_point_parametric(t, p, tx_position, previous)
        previous = pose.heading
        poses.append(pose)
    return poses


def _arc_speed(theta, p):
    """|dP/dtheta| with theta the polar angle measured from the bottom pole."""
    npi = p.turns * math.pi
    return p.radius * np.sqrt(1.0 + (npi * np.sin(theta) ** 2) ** 2)


def _arc_table(p):
    theta = np.linspace(0.0, math.pi, _ARC_TABLE_SIZE + 1)
    s = cumulative_trapezoid(_arc_speed(theta, p), theta, initial=0.0)
    return theta, s


def path_length(p):
    """Total length of the sphere path in meters."""
    return float(_arc_table(p)[1][-1])


def _point_at_polar(theta, p):
    up = p.center_altitude - p.radius * math.cos(theta)
    if theta == 0.0:
        up = p.floor
    elif theta == math.pi:
        up = p.ceiling
    return _point_at_altitude(up, p)


def sphere_path_arclength(p, speed=None, tx_position=None):
    """Constant ground-speed traversal of the sphere path, bottom pole first.

    Samples are emitted at ``p.sample_rate``. The sample count is
    ``ceil(length / speed * sample_rate)`` and both poles are included, so the
    spacing is the path length divided evenly over the sample intervals.
    """
    speed = p.path_velocity if speed is None else speed
    if not speed > 0:
        raise ParameterError(f"speed must be positive, got {speed}")
    theta_table, s_table = _arc_table(p)
    total = s_table[-1]
    count = max(2, int(math.ceil(total / speed * p.sample_rate)))
    s = np.linspace(0.0, total, count)
    theta = np.interp(s, s_table, theta_table)
    theta[0], theta[-1] = 0.0, math.pi
    tx = p.center if tx_position is None else tx_position
    poses = []
    previous = None
    for k, th in enumerate(theta):
        position = _point_at_polar(float(th), p)
        heading = assign_heading(position, tx, previous).value
        previous = heading
        poses.append(PoseSample(k / p.sample_rate, position, heading))
    return poses


def poses_to_arrays(poses: Sequence[PoseSample]):
    """Split poses into ``(t, positions[K, 3], headings)`` arrays."""
    t = np.array([q.t for q in poses], dtype=float)
    pos = np.array([q.position for q in poses], dtype=float).reshape(-1, 3)
    heading = np.array([q.heading for q in poses], dtype=float)
    return t, pos, heading


def sphere_residual(position, p):
    """``N**2 + E**2 + (U - Y)**2 - R**2`` for one position."""
    n, e, u = position
    return n * n + e * e + (u - p.center_altitude) ** 2 - p.radius ** 2


def transmitter_pose(p: SphereTrajectoryParams, t: float = 0.0, heading: Optional[float] = 0.0):
    """The hovering transmitter at the sphere centre, facing north."""
    return PoseSample(t, p.center, heading)
