"""Point-mass path following: nonlinear lookahead guidance versus PID.

The vehicle is a point mass driven directly by a commanded acceleration
whose magnitude is saturated at ``max_accel``. Two controllers are
available:

``nonlinear_l1``
    Picks a reference point one lookahead distance further along the path
    and commands ``2 V**2 / L sin(eta)`` towards it, perpendicular to the
    velocity, where ``L`` is the distance to the reference point and ``eta``
    the angle between the velocity and the line of sight to it. A
    proportional term holds the speed at the path speed.
``pid_baseline``
    Per-axis PID on the error to the time-indexed reference position with
    the reference velocity fed forward through the derivative term. No
    acceleration feed-forward, which is what makes it lag on curved paths.
"""
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import DivergenceError, InputError, ParameterError, TuningError
from .trajectory import PoseSample, poses_to_arrays

L1 = "nonlinear_l1"
PID = "pid_baseline"


@dataclass(frozen=True)
class VehicleState:
    position: tuple
    velocity: tuple
    max_accel: float = 10.0


@dataclass(frozen=True)
class FollowerConfig:
    controller: str = L1
    lookahead: float = 3.0
    kp: float = 1.0
    ki: float = 0.0
    kd: float = 2.0
    speed_gain: float = 1.0
    timestep: float = 0.05
    divergence_limit: Optional[float] = None
    position_noise: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.controller not in (L1, PID):
            raise ParameterError(f"unknown controller {self.controller!r}")
        if not self.lookahead > 0:
            raise ParameterError("lookahead must be positive")
        if not 0 < self.timestep <= 0.1:
            raise ParameterError("timestep must lie in (0, 0.1] s")
        if self.position_noise < 0:
            raise ParameterError("position_noise must be >= 0")


@dataclass
class FollowerTrace:
    """Simulated trace; iterating yields ``(VehicleState, cross_track)``."""

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    accel: np.ndarray
    cross_track: np.ndarray
    max_accel: float
    config: FollowerConfig

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        state = VehicleState(tuple(self.position[k]), tuple(self.velocity[k]), self.max_accel)
        return state, float(self.cross_track[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @property
    def rms_cross_track(self):
        return float(np.sqrt(np.mean(self.cross_track ** 2)))

    @property
    def max_cross_track(self):
        return float(np.max(self.cross_track))

    @property
    def speed(self):
        return np.linalg.norm(self.velocity, axis=1)


class _Path:
    """Polyline view of a pose sequence with arc-length lookups."""

    def __init__(self, poses):
        if len(poses) < 2:
            raise InputError("path needs at least two samples")
        t, pos, _ = poses_to_arrays(poses)
        seg = np.diff(pos, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        keep = np.concatenate([[True], seg_len > 1e-12])
        self.t = t[keep]
        self.pos = pos[keep]
        self.seg = np.diff(self.pos, axis=0)
        self.seg_len2 = np.einsum("ij,ij->i", self.seg, self.seg)
        self.s = np.concatenate([[0.0], np.cumsum(np.sqrt(self.seg_len2))])
        self.length = float(self.s[-1])
        self.duration = float(self.t[-1] - self.t[0])
        if self.length <= 0 or self.duration <= 0:
            raise InputError("path has zero length or duration")
        self.speed = self.length / self.duration
        self.mean_spacing = self.length / len(self.seg)
        centre = self.pos.mean(axis=0)
        self.radius = float(np.max(np.linalg.norm(self.pos - centre, axis=1)))
        vel = np.gradient(self.pos, self.t, axis=0)
        self.vel = vel

    def nearest(self, p, hint, window):
        """Closest point on segments ``hint - 2 .. hint + window``."""
        lo = max(0, hint - 2)
        hi = min(len(self.seg), hint + window)
        a = self.pos[lo:hi]
        d = self.seg[lo:hi]
        u = np.einsum("ij,ij->i", p - a, d) / self.seg_len2[lo:hi]
        u = np.clip(u, 0.0, 1.0)
        closest = a + d * u[:, None]
        dist2 = np.einsum("ij,ij->i", p - closest, p - closest)
        j = int(np.argmin(dist2))
        k = lo + j
        return k, float(self.s[k] + u[j] * math.sqrt(self.seg_len2[k])), math.sqrt(dist2[j])

    def point_at(self, s):
        s = min(max(s, 0.0), self.length)
        return np.array([np.interp(s, self.s, self.pos[:, i]) for i in range(3)])

    def reference(self, t):
        t = min(max(t, self.t[0]), self.t[-1])
        pos = np.array([np.interp(t, self.t, self.pos[:, i]) for i in range(3)])
        vel = np.array([np.interp(t, self.t, self.vel[:, i]) for i in range(3)])
        return pos, vel


def _saturate(a, limit):
    norm = math.sqrt(float(a @ a))
    if norm > limit:
        return a * (limit / norm), True
    return a, False


def follow_trajectory(path, cfg=None, initial=None):
    """Simulate a follower along `path` (a sequence of PoseSample).

    Returns a FollowerTrace. Raises DivergenceError, with the partial trace
    attached, once the cross-track error exceeds the divergence limit
    (default ten times the path's radius about its centroid).
    """
    cfg = FollowerConfig() if cfg is None else cfg
    ref = _Path(path)
    if initial is None:
        v0 = ref.vel[0] if np.linalg.norm(ref.vel[0]) > 0 else ref.seg[0] / ref.seg_len2[0] ** 0.5 * ref.speed
        initial = VehicleState(tuple(ref.pos[0]), tuple(v0))
    p = np.array(initial.position, dtype=float)
    v = np.array(initial.velocity, dtype=float)
    if np.linalg.norm(p - ref.pos[0]) > 5.0:
        raise InputError("initial position must lie within 5 m of the path start")
    limit = initial.max_accel
    if not limit > 0:
        raise ParameterError("max_accel must be positive")
    diverge = cfg.divergence_limit if cfg.divergence_limit is not None else 10.0 * max(ref.radius, 1.0)
    dt = cfg.timestep
    window = int(max(20, 4 * (ref.speed * dt + cfg.lookahead) / ref.mean_spacing))
    steps_max = int(math.ceil(1.5 * ref.duration / dt)) + 1
    rng = np.random.default_rng(cfg.noise_seed) if cfg.position_noise > 0 else None

    ts, ps, vs, accs, errs = [], [], [], [], []
    hint = 0
    integral = np.zeros(3)
    t = 0.0
    for step in range(steps_max):
        hint, s_near, err = ref.nearest(p, hint, window)
        ts.append(t)
        ps.append(p.copy())
        vs.append(v.copy())
        errs.append(err)
        if err > diverge:
            accs.append(np.zeros(3))
            trace = _trace(ts, ps, vs, accs, errs, limit, cfg)
            raise DivergenceError(
                f"cross-track error {err:.1f} m exceeded {diverge:.1f} m at t={t:.1f} s", trace)
        if s_near >= ref.length - 1e-9 or (cfg.controller == PID and t >= ref.duration):
            accs.append(np.zeros(3))
            break
        measured = p if rng is None else p + rng.normal(0.0, cfg.position_noise, 3)

        if cfg.controller == L1:
            target = ref.point_at(s_near + cfg.lookahead)
            los = target - measured
            dist = math.sqrt(float(los @ los))
            speed = math.sqrt(float(v @ v))
            a = np.zeros(3)
            if speed > 1e-9 and dist > 1e-9:
                vhat = v / speed
                along = float(los @ vhat)
                perp = los - along * vhat
                pn = math.sqrt(float(perp @ perp))
                sin_eta = pn / dist
                if along < 0:
                    # target behind the velocity vector: turn at the maximum rate
                    sin_eta = 1.0
                if pn > 1e-12:
                    a = 2.0 * speed ** 2 / dist * sin_eta * (perp / pn)
                a = a + cfg.speed_gain * (ref.speed - speed) * vhat
            elif dist > 1e-9:
                a = los / dist * limit
            a, _ = _saturate(a, limit)
        else:
            r_pos, r_vel = ref.reference(t)
            e = r_pos - measured
            a = cfg.kp * e + cfg.ki * integral + cfg.kd * (r_vel - v)
            a, saturated = _saturate(a, limit)
            if not saturated:
                integral += e * dt
        accs.append(a)
        v = v + a * dt
        p = p + v * dt
        t = (step + 1) * dt
    return _trace(ts, ps, vs, accs, errs, limit, cfg)


def _trace(ts, ps, vs, accs, errs, limit, cfg):
    return FollowerTrace(np.array(ts), np.array(ps).reshape(-1, 3), np.array(vs).reshape(-1, 3),
                         np.array(accs).reshape(-1, 3), np.array(errs), limit, cfg)


def tune_follower(path, cfg_space, base=None, initial=None, target_rms=None):
    """Grid search over follower parameters minimising RMS cross-track error.

    `cfg_space` maps FollowerConfig field names to candidate values; every
    combination is simulated in a fixed order, so the result is
    deterministic. Diverging candidates are discarded. With `target_rms`
    the best candidate must also beat that error.
    """
    base = FollowerConfig() if base is None else base
    names = list(cfg_space)
    grids = [list(cfg_space[n]) for n in names]
    if not names or any(len(g) == 0 for g in grids):
        raise ParameterError("tuning ranges must be non-empty")
    diagnostics = []
    best = None
    for values in itertools.product(*grids):
        cfg = replace(base, **dict(zip(names, values)))
        try:
            trace = follow_trajectory(path, cfg, initial)
        except DivergenceError as exc:
            diagnostics.append((cfg, math.inf, str(exc)))
            continue
        rms = trace.rms_cross_track
        diagnostics.append((cfg, rms, None))
        if best is None or rms < best[1]:
            best = (cfg, rms)
    if best is None:
        raise TuningError("every candidate configuration diverged", diagnostics)
    if target_rms is not None and best[1] >= target_rms:
        raise TuningError(
            f"best RMS cross-track error {best[1]:.3f} m misses the {target_rms} m target",
            diagnostics)
    return best[0]


def straight_path(length=100.0, speed=1.5, sample_rate=10.0, direction=(1.0, 0.0, 0.0),
                  start=(0.0, 0.0, 65.0)):
    """Straight reference segment sampled like the campaign trajectory."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    count = int(math.ceil(length / speed * sample_rate)) + 1
    s = np.linspace(0.0, length, count)
    t = np.linspace(0.0, length / speed, count)
    start = np.asarray(start, dtype=float)
    return [PoseSample(float(tk), tuple(start + u * sk)) for tk, sk in zip(t, s)]


def circle_path(radius, speed, laps=2.0, sample_rate=10.0, altitude=65.0):
    """Horizontal circle traversed counter-clockwise at constant speed."""
    duration = 2 * math.pi * radius * laps / speed
    count = int(math.ceil(duration * sample_rate)) + 1
    t = np.linspace(0.0, duration, count)
    phi = speed / radius * t
    return [PoseSample(float(tk), (radius * math.cos(f), radius * math.sin(f), altitude))
            for tk, f in zip(t, phi)]


#: candidate lookaheads used to tune the nonlinear follower
L1_LOOKAHEADS = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0)
#: PID gains searched on the straight segment
PID_GAINS = {"kp": (0.25, 0.5, 1.0, 2.0), "kd": (0.5, 1.0, 2.0, 3.0), "ki": (0.0, 0.1)}


def straight_line_pid(max_accel=10.0, offset=1.0, timestep=0.05, speed=1.5):
    """PID gains tuned on a straight segment starting `offset` m off the line."""
    line = straight_path(speed=speed)
    start = line[0].position
    initial = VehicleState((start[0], start[1] + offset, start[2]), (speed, 0.0, 0.0), max_accel)
    return tune_follower(line, PID_GAINS, FollowerConfig(controller=PID, timestep=timestep),
                         initial)
