"""On-disk formats.

Sample files are raw interleaved little-endian float32 I/Q pairs with a JSON
sidecar of the same stem. Tables are CSV with a header row. Floats are
written with ``repr`` so every file reads back bit-exactly.
"""
import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import InputError, PersistenceError
from .sounder import CirTap, ExtractedCir, SounderCapture
from .trajectory import PoseSample
from .waveform import ZcParams, generate_zc

POSE_COLUMNS = ["t_s", "north_m", "east_m", "up_m", "heading_rad"]
TRACE_COLUMNS = ["t_s", "north_m", "east_m", "up_m", "vn", "ve", "vu", "cross_track_m"]


def _fmt(x):
    return repr(float(x))


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _none_to(x, default):
    return default if x is None else float(x)


def _write_text(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise PersistenceError(f"cannot write {path}: {exc}") from exc


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_iq(path, iq):
    data = np.asarray(iq).astype(np.complex64)
    interleaved = data.view(np.float32).astype("<f4")
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        interleaved.tofile(path)
    except OSError as exc:
        raise PersistenceError(f"cannot write {path}: {exc}") from exc


def read_iq(path):
    try:
        raw = np.fromfile(path, dtype="<f4")
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    if raw.size % 2:
        raise InputError(f"{path} holds an odd number of float32 values")
    return raw.astype(np.float32).view(np.complex64)


def _stem(path):
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".iq", ".json") else path


def write_probe(path, probe):
    """Write ``<stem>.iq`` and ``<stem>.json`` for a probe waveform."""
    stem = _stem(path)
    write_iq(stem.with_suffix(".iq"), probe.samples)
    meta = {"length": probe.params.length, "root": probe.params.root,
            "repetitions": probe.params.repetitions, "sample_rate_hz": probe.sample_rate}
    _write_text(stem.with_suffix(".json"), _dump_json(meta))
    return stem


def read_probe(path):
    """Load a probe; the samples must match the sidecar's parameters."""
    stem = _stem(path)
    meta = _read_json(stem.with_suffix(".json"))
    params = ZcParams(int(meta["length"]), int(meta["root"]), int(meta["repetitions"]))
    probe = generate_zc(params, float(meta["sample_rate_hz"]))
    iq = read_iq(stem.with_suffix(".iq"))
    if len(iq) != len(probe.samples) or np.max(np.abs(iq - probe.samples)) > 1e-6:
        raise InputError(f"{stem}.iq does not match the probe described by its sidecar")
    return probe


def pose_to_dict(pose):
    return {"t_s": pose.t, "north_m": pose.position[0], "east_m": pose.position[1],
            "up_m": pose.position[2], "heading_rad": pose.heading}


def pose_from_dict(d):
    return PoseSample(float(d["t_s"]), (float(d["north_m"]), float(d["east_m"]),
                                        float(d["up_m"])), float(d["heading_rad"]))


def write_capture(path, capture):
    stem = _stem(path)
    write_iq(stem.with_suffix(".iq"), capture.iq)
    meta = {"sample_rate_hz": capture.sample_rate, "carrier_hz": capture.carrier,
            "timestamp_s": capture.timestamp, "tx_pose": None, "rx_pose": None}
    if capture.pose_ref is not None:
        meta["tx_pose"] = pose_to_dict(capture.pose_ref[0])
        meta["rx_pose"] = pose_to_dict(capture.pose_ref[1])
    _write_text(stem.with_suffix(".json"), _dump_json(meta))
    return stem


def read_capture(path):
    stem = _stem(path)
    meta = _read_json(stem.with_suffix(".json"))
    pose_ref = None
    if meta.get("tx_pose") is not None and meta.get("rx_pose") is not None:
        pose_ref = (pose_from_dict(meta["tx_pose"]), pose_from_dict(meta["rx_pose"]))
    return SounderCapture(read_iq(stem.with_suffix(".iq")), float(meta["sample_rate_hz"]),
                          float(meta["carrier_hz"]), float(meta["timestamp_s"]), pose_ref)


def capture_stems(directory):
    """Capture stems in a directory, in index order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise PersistenceError(f"capture directory {directory} does not exist")
    return sorted(p.with_suffix("") for p in directory.glob("capture_*.json"))


def capture_path(directory, index):
    return Path(directory) / f"capture_{index:06d}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _read_csv(path, expected):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected:
                raise InputError(f"{path}: expected header {','.join(expected)}, got {header}")
            return [[float(v) for v in row] for row in reader if row]
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: malformed number: {exc}") from exc


def write_poses_csv(path, poses):
    _write_csv(path, POSE_COLUMNS,
               ([q.t, q.position[0], q.position[1], q.position[2], q.heading] for q in poses))


def read_poses_csv(path):
    return [PoseSample(r[0], (r[1], r[2], r[3]), r[4]) for r in _read_csv(path, POSE_COLUMNS)]


def write_trace_csv(path, trace):
    rows = ([t, *p, *v, e] for t, p, v, e in
            zip(trace.t, trace.position, trace.velocity, trace.cross_track))
    _write_csv(path, TRACE_COLUMNS, rows)


def read_trace_csv(path):
    return np.array(_read_csv(path, TRACE_COLUMNS)).reshape(-1, len(TRACE_COLUMNS))


def cir_to_dict(cir, index=None):
    d = {"timestamp_s": cir.timestamp,
         "reference_delay_s": cir.reference_delay,
         "noise_floor_db": _finite_or_none(cir.noise_floor_db),
         "noise_power_db": _finite_or_none(cir.noise_power_db),
         "detection_threshold_db": cir.detection_threshold_db,
         "taps": [{"delay_s": t.delay, "power_db": t.power_db,
                   "gain_re": t.gain.real, "gain_im": t.gain.imag} for t in cir.taps]}
    if index is not None:
        d["index"] = index
    return d


def cir_from_dict(d):
    taps = [CirTap(float(t["delay_s"]), float(t["power_db"]),
                   complex(float(t["gain_re"]), float(t["gain_im"]))) for t in d["taps"]]
    return ExtractedCir(taps, _none_to(d["noise_floor_db"], -math.inf),
                        float(d["detection_threshold_db"]),
                        _none_to(d.get("noise_power_db"), -math.inf),
                        float(d["reference_delay_s"]), float(d["timestamp_s"]))


def write_cirs_jsonl(path, cirs):
    lines = [json.dumps(cir_to_dict(c, k), sort_keys=True) for k, c in enumerate(cirs)]
    _write_text(path, "".join(line + "\n" for line in lines))


def read_cirs_jsonl(path):
    try:
        with open(path) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON line: {exc}") from exc
    records.sort(key=lambda r: r.get("index", 0))
    return [cir_from_dict(r) for r in records]


def _band_name(lo, hi):
    return f"{lo:g}_{hi:g}"


def write_campaign_stats(directory, stats):
    """Write one CSV per figure analogue plus the path-loss fit as JSON."""
    directory = Path(directory)
    _write_csv(directory / "power_vs_altitude.csv", ["bin_center_m", "mean_db", "heading_bin_deg"],
               ([a, m, h] for a, m, h, _ in stats.power_vs_altitude))
    _write_csv(directory / "power_vs_heading.csv", ["heading_bin_deg", "mean_db", "count"],
               ([h, m, float(n)] for h, m, n in stats.power_vs_heading))
    for (lo, hi), (x, f) in stats.delay_spread_cdfs.items():
        _write_csv(directory / f"delay_spread_cdf_{_band_name(lo, hi)}.csv", ["tau_ns", "cdf"],
                   ([xi * 1e9, fi] for xi, fi in zip(x, f)))
    for center, cells in stats.power_grids.items():
        _write_csv(directory / f"power_grid_alt{center:g}.csv", ["east_m", "north_m", "mean_db"],
                   ([e, n, m] for e, n, m, _ in cells))
    pl = stats.path_loss
    fit = {"pl_d0": pl.pl_d0, "d0": pl.d0, "gamma": pl.gamma, "sigma": pl.sigma,
           "gamma_fixed": stats.path_loss_gamma_fixed}
    _write_text(directory / "path_loss_fit.json", _dump_json(fit))


def read_power_table(path, header):
    return _read_csv(path, header)


def read_path_loss_fit(path):
    from .channel import PathLossModel
    d = _read_json(path)
    return PathLossModel(float(d["pl_d0"]), float(d["d0"]), float(d["gamma"]), float(d["sigma"]))


def list_outputs(directory):
    """Relative paths of every file under `directory`, sorted."""
    directory = Path(directory)
    return sorted(os.path.relpath(p, directory) for p in directory.rglob("*") if p.is_file())
