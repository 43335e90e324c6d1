"""Campaign configuration and the end-to-end measurement pipeline.

A campaign plans the sphere trajectory, simulates one channel and one
capture per pose, extracts the CIRs and aggregates the statistics. Every
stage is also available on its own so that a campaign can be run step by
step from files; both routes produce byte-identical outputs.

Configuration is a JSON document. Any key may be omitted, in which case the
default below applies::

    {
      "probe": {"length": 2048, "root": 89, "repetitions": 4,
                "sample_rate_hz": 56e6},
      "carrier_hz": 3.4e9,
      "measurement_rate_hz": 10,
      "trajectory": {"floor_altitude_m": 45, "ceiling_altitude_m": 85,
                     "turns": 8, "flight_speed_m_s": 1.5},
      "environment": {"ground": true, "ground_reflection_coefficient": -0.9,
                      "shadowing": true,
                      "reflectors": [{"position_neu_m": [0, 150, 10],
                                      "rcs_dbsm": 6}],
                      "antenna": {"peak_gain_dbi": 2.15, "null_depth_db": 20,
                                  "shadow_half_angle_deg": 55,
                                  "shadow_elevation_deg": -40,
                                  "shadow_attenuation_db": 15}},
      "sounder": {"threshold_db": 15, "max_taps": 16},
      "snr_db": 40,
      "seed": 0,
      "output_dir": "campaign_out",
      "write_captures": false,
      "guidance": {"controller": "nonlinear_l1", "lookahead_m": null,
                   "max_accel_m_s2": 10, "timestep_s": 0.05,
                   "compare_pid": true}
    }

The trajectory may instead be given by ``center_altitude_m`` and
``radius_m``; when both forms are present they must agree.
"""
import copy
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import fileio
from .channel import AntennaModel, Environment, Reflector, apply_channel, simulate_channel
from .errors import ConfigError, InputError, ParameterError, PersistenceError
from .metrics import AggregationConfig, aggregate_campaign
from .sounder import DEFAULT_THRESHOLD_DB, SounderCapture, extract_cir
from .trajectory import SphereTrajectoryParams, sphere_path_arclength, transmitter_pose
from .waveform import ZcParams, generate_zc

DEFAULTS = {
    "probe": {"length": 2048, "root": 89, "repetitions": 4, "sample_rate_hz": 56e6},
    "carrier_hz": 3.4e9,
    "measurement_rate_hz": 10.0,
    "trajectory": {"floor_altitude_m": 45.0, "ceiling_altitude_m": 85.0, "turns": 8,
                   "flight_speed_m_s": 1.5},
    "environment": {
        "ground": True,
        "ground_reflection_coefficient": -0.9,
        "shadowing": True,
        "reflectors": [{"position_neu_m": [0.0, 150.0, 10.0], "rcs_dbsm": 6.0}],
        "antenna": {"peak_gain_dbi": 2.15, "null_depth_db": 20.0,
                    "shadow_half_angle_deg": 55.0, "shadow_elevation_deg": -40.0,
                    "shadow_attenuation_db": 15.0},
    },
    "sounder": {"threshold_db": DEFAULT_THRESHOLD_DB, "max_taps": 16},
    "snr_db": 40.0,
    "seed": 0,
    "output_dir": "campaign_out",
    "write_captures": False,
    "guidance": {"controller": "nonlinear_l1", "lookahead_m": None, "max_accel_m_s2": 10.0,
                 "timestep_s": 0.05, "compare_pid": True},
}

POSES_FILE = "poses.csv"
CIRS_FILE = "cirs.jsonl"
CAPTURE_DIR = "captures"
# accepted but absent from DEFAULTS: the alternative sphere description
_OPTIONAL_KEYS = {"trajectory.center_altitude_m", "trajectory.radius_m"}


@dataclass(frozen=True)
class GuidanceSettings:
    controller: str = "nonlinear_l1"
    lookahead: Optional[float] = None  # None: tune over the candidate list
    max_accel: float = 10.0
    timestep: float = 0.05
    compare_pid: bool = True


@dataclass(frozen=True)
class CampaignConfig:
    probe: ZcParams = field(default_factory=ZcParams)
    sample_rate: float = 56e6
    carrier: float = 3.4e9
    trajectory: SphereTrajectoryParams = field(default_factory=SphereTrajectoryParams)
    environment: Environment = field(default_factory=Environment)
    snr_db: float = 40.0
    seed: int = 0
    output_dir: str = "campaign_out"
    measurement_rate: float = 10.0
    threshold_db: float = DEFAULT_THRESHOLD_DB
    max_taps: int = 16
    write_captures: bool = False
    guidance: GuidanceSettings = field(default_factory=GuidanceSettings)
    aggregation: AggregationConfig = field(default_factory=AggregationConfig)

    def with_overrides(self, seed=None, output_dir=None):
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        return replace(self, **changes)

    def probe_waveform(self):
        return generate_zc(self.probe, self.sample_rate)

    def transmitter(self):
        return transmitter_pose(self.trajectory)


# -- parsing -----------------------------------------------------------------

def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base and where not in _OPTIONAL_KEYS:
            raise ConfigError(f"unknown configuration key {where!r}", [where])
        if isinstance(base.get(key), dict) and base[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object", [where])
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def _number(d, key, path, integer=False, allow_none=False):
    value = d[key]
    where = f"{path}.{key}" if path else key
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}", [where])
    if integer:
        if int(value) != value:
            raise ConfigError(f"{where} must be an integer, got {value!r}", [where])
        return int(value)
    return float(value)


def _flag(d, key, path):
    value = d[key]
    if not isinstance(value, bool):
        where = f"{path}.{key}" if path else key
        raise ConfigError(f"{where} must be true or false, got {value!r}", [where])
    return value


def _trajectory(section, given, rate):
    floor_f, ceil_f = "trajectory.floor_altitude_m", "trajectory.ceiling_altitude_m"
    centre_f, radius_f = "trajectory.center_altitude_m", "trajectory.radius_m"
    for key in ("center_altitude_m", "radius_m"):
        if key in section:
            _number(section, key, "trajectory")
    if ("floor_altitude_m" in given or "ceiling_altitude_m" in given
            or not ({"center_altitude_m", "radius_m"} & set(given))):
        floor = _number(section, "floor_altitude_m", "trajectory")
        ceiling = _number(section, "ceiling_altitude_m", "trajectory")
        if floor >= ceiling:
            raise ConfigError(f"floor altitude {floor} m must lie below ceiling {ceiling} m",
                              [floor_f, ceil_f])
        centre, radius = (floor + ceiling) / 2.0, (ceiling - floor) / 2.0
        for key, expect, name in (("center_altitude_m", centre, centre_f),
                                  ("radius_m", radius, radius_f)):
            if key in given and not math.isclose(float(given[key]), expect, abs_tol=1e-9):
                raise ConfigError(f"{name} = {given[key]} disagrees with floor/ceiling "
                                  f"(expected {expect})", [name, floor_f, ceil_f])
    else:
        centre = float(given.get("center_altitude_m", 65.0))
        radius = float(given.get("radius_m", 20.0))
        if not radius > 0:
            raise ConfigError(f"radius must be positive, got {radius}", [radius_f])
    try:
        return SphereTrajectoryParams(radius, centre, _number(section, "turns", "trajectory", True),
                                      _number(section, "flight_speed_m_s", "trajectory"), rate)
    except ParameterError as exc:
        raise ConfigError(str(exc), ["trajectory"]) from exc


def _antenna(a):
    p = "environment.antenna"
    try:
        return AntennaModel(_number(a, "peak_gain_dbi", p), _number(a, "null_depth_db", p),
                            math.radians(_number(a, "shadow_half_angle_deg", p)),
                            _number(a, "shadow_attenuation_db", p),
                            math.radians(_number(a, "shadow_elevation_deg", p)))
    except ParameterError as exc:
        raise ConfigError(str(exc), [p]) from exc


def _environment(e):
    p = "environment"
    reflectors = []
    if not isinstance(e["reflectors"], list):
        raise ConfigError("environment.reflectors must be a list", ["environment.reflectors"])
    for k, r in enumerate(e["reflectors"]):
        where = f"environment.reflectors[{k}]"
        if not isinstance(r, dict) or set(r) != {"position_neu_m", "rcs_dbsm"}:
            raise ConfigError(f"{where} needs exactly position_neu_m and rcs_dbsm", [where])
        pos = r["position_neu_m"]
        if (not isinstance(pos, list) or len(pos) != 3
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pos)):
            raise ConfigError(f"{where}.position_neu_m must be three numbers",
                              [f"{where}.position_neu_m"])
        reflectors.append(Reflector(tuple(float(x) for x in pos),
                                    _number(r, "rcs_dbsm", where)))
    gamma = _number(e, "ground_reflection_coefficient", p)
    if abs(gamma) > 1:
        raise ConfigError("ground reflection coefficient must lie in [-1, 1]",
                          ["environment.ground_reflection_coefficient"])
    antenna = _antenna(e["antenna"])
    return Environment(_flag(e, "ground", p), gamma, tuple(reflectors), antenna, antenna,
                       _flag(e, "shadowing", p))


def config_from_dict(data):
    """Validate a (possibly partial) config mapping and build a CampaignConfig."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", ["<root>"])
    d = _merge(copy.deepcopy(DEFAULTS), data)
    if not isinstance(d["environment"]["reflectors"], list):
        raise ConfigError("environment.reflectors must be a list", ["environment.reflectors"])
    rate = _number(d, "measurement_rate_hz", "")
    if not rate > 0:
        raise ConfigError("measurement_rate_hz must be positive", ["measurement_rate_hz"])
    pr = d["probe"]
    try:
        probe = ZcParams(_number(pr, "length", "probe", True), _number(pr, "root", "probe", True),
                         _number(pr, "repetitions", "probe", True))
    except ParameterError as exc:
        raise ConfigError(str(exc), ["probe"]) from exc
    fs = _number(pr, "sample_rate_hz", "probe")
    carrier = _number(d, "carrier_hz", "")
    for name, value in (("probe.sample_rate_hz", fs), ("carrier_hz", carrier)):
        if not value > 0:
            raise ConfigError(f"{name} must be positive", [name])
    traj = _trajectory(d["trajectory"], data.get("trajectory", {}), rate)
    snr = _number(d, "snr_db", "")
    if math.isnan(snr):
        raise ConfigError("snr_db must not be NaN", ["snr_db"])
    so = d["sounder"]
    max_taps = _number(so, "max_taps", "sounder", True)
    if max_taps < 1:
        raise ConfigError("sounder.max_taps must be >= 1", ["sounder.max_taps"])
    g = d["guidance"]
    if g["controller"] not in ("nonlinear_l1", "pid_baseline"):
        raise ConfigError(f"unknown controller {g['controller']!r}", ["guidance.controller"])
    lookahead = _number(g, "lookahead_m", "guidance", allow_none=True)
    if lookahead is not None and not lookahead > 0:
        raise ConfigError("guidance.lookahead_m must be positive", ["guidance.lookahead_m"])
    accel = _number(g, "max_accel_m_s2", "guidance")
    if not accel > 0:
        raise ConfigError("guidance.max_accel_m_s2 must be positive", ["guidance.max_accel_m_s2"])
    step = _number(g, "timestep_s", "guidance")
    if not 0 < step <= 0.1:
        raise ConfigError("guidance.timestep_s must lie in (0, 0.1]", ["guidance.timestep_s"])
    if not isinstance(d["output_dir"], str):
        raise ConfigError("output_dir must be a string", ["output_dir"])
    return CampaignConfig(
        probe=probe, sample_rate=fs, carrier=carrier, trajectory=traj,
        environment=_environment(d["environment"]), snr_db=snr,
        seed=_number(d, "seed", "", True), output_dir=d["output_dir"], measurement_rate=rate,
        threshold_db=_number(so, "threshold_db", "sounder"), max_taps=max_taps,
        write_captures=_flag(d, "write_captures", ""),
        guidance=GuidanceSettings(g["controller"], lookahead, accel, step,
                                  _flag(g, "compare_pid", "guidance")))


def config_to_dict(cfg):
    """Inverse of config_from_dict (single shared antenna model)."""
    ant = cfg.environment.rx_antenna
    t = cfg.trajectory
    return {
        "probe": {"length": cfg.probe.length, "root": cfg.probe.root,
                  "repetitions": cfg.probe.repetitions, "sample_rate_hz": cfg.sample_rate},
        "carrier_hz": cfg.carrier,
        "measurement_rate_hz": cfg.measurement_rate,
        "trajectory": {"floor_altitude_m": t.floor, "ceiling_altitude_m": t.ceiling,
                       "turns": t.turns, "flight_speed_m_s": t.path_velocity},
        "environment": {
            "ground": cfg.environment.ground,
            "ground_reflection_coefficient": cfg.environment.ground_reflection_coefficient,
            "shadowing": cfg.environment.shadowing,
            "reflectors": [{"position_neu_m": list(r.position), "rcs_dbsm": r.gain_db}
                           for r in cfg.environment.reflectors],
            "antenna": {"peak_gain_dbi": ant.peak_gain_dbi, "null_depth_db": ant.null_depth_db,
                        "shadow_half_angle_deg": math.degrees(ant.shadow_half_angle),
                        "shadow_elevation_deg": math.degrees(ant.shadow_elevation),
                        "shadow_attenuation_db": ant.shadow_attenuation_db},
        },
        "sounder": {"threshold_db": cfg.threshold_db, "max_taps": cfg.max_taps},
        "snr_db": cfg.snr_db,
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "write_captures": cfg.write_captures,
        "guidance": {"controller": cfg.guidance.controller,
                     "lookahead_m": cfg.guidance.lookahead,
                     "max_accel_m_s2": cfg.guidance.max_accel,
                     "timestep_s": cfg.guidance.timestep,
                     "compare_pid": cfg.guidance.compare_pid},
    }


def default_config():
    return config_from_dict({})


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise PersistenceError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}", ["<root>"]) from exc
    return config_from_dict(data)


def save_config(path, cfg):
    fileio._write_text(path, json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n")


# -- pipeline stages -----------------------------------------------------------

def snapshot_seed(cfg, index):
    """Noise seed of snapshot `index`; fixed arithmetic on the campaign seed."""
    return cfg.seed + index


def plan(cfg):
    """Receiver poses along the constant-speed sphere path."""
    return sphere_path_arclength(cfg.trajectory, tx_position=cfg.transmitter().position)


def simulate_snapshot(cfg, probe, tx, rx, index):
    """One capture, quantised to complex64 as it would be stored on disk."""
    env = cfg.environment
    ch = simulate_channel(tx, rx, env, carrier=cfg.carrier)
    cap = apply_channel(ch, probe, cfg.snr_db, seed=snapshot_seed(cfg, index))
    return SounderCapture(cap.iq.astype(np.complex64), cap.sample_rate, cap.carrier,
                          cap.timestamp, cap.pose_ref)


def extract_snapshot(cfg, probe, capture):
    return extract_cir(capture, probe, cfg.threshold_db, cfg.max_taps)


def analyze(cfg, poses, cirs):
    if len(poses) != len(cirs):
        raise InputError(f"{len(poses)} poses but {len(cirs)} CIRs")
    tx = cfg.transmitter()
    return aggregate_campaign(((tx, rx, c) for rx, c in zip(poses, cirs)), cfg.aggregation)


@dataclass
class CampaignResult:
    stats: object
    poses: List
    cirs: List
    output_dir: Optional[Path] = None


def run_campaign(cfg, out_dir=None, write=True):
    """Plan, simulate, extract and aggregate; optionally persist everything.

    Captures are processed one at a time and only written to disk when
    ``cfg.write_captures`` is set.
    """
    out = Path(cfg.output_dir if out_dir is None else out_dir)
    probe = cfg.probe_waveform()
    tx = cfg.transmitter()
    poses = plan(cfg)
    cirs = []
    for k, rx in enumerate(poses):
        cap = simulate_snapshot(cfg, probe, tx, rx, k)
        if write and cfg.write_captures:
            fileio.write_capture(fileio.capture_path(out / CAPTURE_DIR, k), cap)
        cirs.append(extract_snapshot(cfg, probe, cap))
    stats = analyze(cfg, poses, cirs)
    if write:
        fileio.write_poses_csv(out / POSES_FILE, poses)
        fileio.write_cirs_jsonl(out / CIRS_FILE, cirs)
        fileio.write_campaign_stats(out, stats)
    return CampaignResult(stats, poses, cirs, out if write else None)


# -- stepwise, file-to-file ----------------------------------------------------

def plan_to_file(cfg, out_dir):
    poses = plan(cfg)
    fileio.write_poses_csv(Path(out_dir) / POSES_FILE, poses)
    return poses


def simulate_to_files(cfg, poses_path, capture_dir):
    poses = fileio.read_poses_csv(poses_path)
    probe = cfg.probe_waveform()
    tx = cfg.transmitter()
    for k, rx in enumerate(poses):
        fileio.write_capture(fileio.capture_path(capture_dir, k),
                             simulate_snapshot(cfg, probe, tx, rx, k))
    return len(poses)


def extract_from_files(cfg, capture_dir, cirs_path):
    probe = cfg.probe_waveform()
    cirs = [extract_snapshot(cfg, probe, fileio.read_capture(stem))
            for stem in fileio.capture_stems(capture_dir)]
    fileio.write_cirs_jsonl(cirs_path, cirs)
    return cirs


def analyze_files(cfg, poses_path, cirs_path, out_dir):
    stats = analyze(cfg, fileio.read_poses_csv(poses_path), fileio.read_cirs_jsonl(cirs_path))
    fileio.write_campaign_stats(out_dir, stats)
    return stats


# -- guidance --------------------------------------------------------------------

GUIDANCE_TRACE = "trace.csv"
PID_TRACE = "trace_pid.csv"
GUIDANCE_SUMMARY = "guidance_summary.json"


def run_guidance(cfg, out_dir=None, write=True):
    """Fly the planned path with the configured follower.

    With no lookahead configured, the nonlinear follower is tuned over
    ``L1_LOOKAHEADS``. When ``compare_pid`` is set, a PID baseline tuned on a
    straight segment flies the same path. Returns a summary dict.
    """
    from .guidance import (L1, L1_LOOKAHEADS, FollowerConfig, VehicleState,
                           follow_trajectory, straight_line_pid, tune_follower)
    g = cfg.guidance
    path = plan(cfg)
    start = path[0].position
    v0 = np.subtract(path[1].position, start) / (path[1].t - path[0].t)
    initial = VehicleState(tuple(start), tuple(v0), g.max_accel)
    base = FollowerConfig(controller=g.controller, timestep=g.timestep, noise_seed=cfg.seed)
    pid_cfg = None
    if g.controller == L1:
        if g.lookahead is None:
            follower = tune_follower(path, {"lookahead": L1_LOOKAHEADS}, base, initial)
        else:
            follower = replace(base, lookahead=g.lookahead)
    else:
        pid_cfg = straight_line_pid(g.max_accel, timestep=g.timestep)
        follower = replace(pid_cfg, noise_seed=cfg.seed)
    trace = follow_trajectory(path, follower, initial)
    summary = {"controller": follower.controller, "lookahead_m": follower.lookahead,
               "kp": follower.kp, "ki": follower.ki, "kd": follower.kd,
               "rms_cross_track_m": trace.rms_cross_track,
               "max_cross_track_m": trace.max_cross_track}
    pid_trace = None
    if g.compare_pid and g.controller == L1:
        pid_cfg = straight_line_pid(g.max_accel, timestep=g.timestep)
        pid_trace = follow_trajectory(path, pid_cfg, initial)
        summary["pid_baseline"] = {"kp": pid_cfg.kp, "ki": pid_cfg.ki, "kd": pid_cfg.kd,
                                   "rms_cross_track_m": pid_trace.rms_cross_track,
                                   "max_cross_track_m": pid_trace.max_cross_track}
    if write:
        out = Path(cfg.output_dir if out_dir is None else out_dir)
        fileio.write_trace_csv(out / GUIDANCE_TRACE, trace)
        if pid_trace is not None:
            fileio.write_trace_csv(out / PID_TRACE, pid_trace)
        fileio._write_text(out / GUIDANCE_SUMMARY, fileio._dump_json(summary))
    return summary, trace, pid_trace
