import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from a2a_sounding import fileio
from a2a_sounding.errors import InputError, PersistenceError
from a2a_sounding.guidance import FollowerConfig, follow_trajectory, straight_path
from a2a_sounding.metrics import aggregate_campaign
from a2a_sounding.sounder import CirTap, ExtractedCir, SounderCapture
from a2a_sounding.trajectory import PoseSample
from a2a_sounding.waveform import ZcParams, generate_zc

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_probe_round_trip(tmp_path):
    probe = generate_zc(ZcParams(139, 5, 3), 20e6)
    fileio.write_probe(tmp_path / "p", probe)
    assert (tmp_path / "p.iq").stat().st_size == 139 * 3 * 8
    meta = json.loads((tmp_path / "p.json").read_text())
    assert meta == {"length": 139, "root": 5, "repetitions": 3, "sample_rate_hz": 20e6}
    back = fileio.read_probe(tmp_path / "p.iq")
    assert back.params == probe.params and back.sample_rate == 20e6


def test_probe_mismatch_detected(tmp_path):
    fileio.write_probe(tmp_path / "p", generate_zc(ZcParams(13, 2, 1)))
    meta = json.loads((tmp_path / "p.json").read_text())
    meta["root"] = 3
    (tmp_path / "p.json").write_text(json.dumps(meta))
    with pytest.raises(InputError):
        fileio.read_probe(tmp_path / "p")


def test_iq_layout_is_interleaved_float32(tmp_path):
    fileio.write_iq(tmp_path / "x.iq", np.array([1 + 2j, -3 - 4j]))
    raw = np.fromfile(tmp_path / "x.iq", dtype="<f4")
    np.testing.assert_array_equal(raw, [1, 2, -3, -4])
    (tmp_path / "odd.iq").write_bytes(b"\0" * 12)
    with pytest.raises(InputError):
        fileio.read_iq(tmp_path / "odd.iq")


def test_capture_round_trip(tmp_path):
    tx = PoseSample(0.0, (0.0, 0.0, 65.0), 0.0)
    rx = PoseSample(1.5, (1.0, -2.0, 47.0), 0.25)
    iq = (np.arange(16) * (1 - 0.5j)).astype(np.complex64)
    cap = SounderCapture(iq, 56e6, 3.4e9, 1.5, (tx, rx))
    fileio.write_capture(tmp_path / "c", cap)
    back = fileio.read_capture(tmp_path / "c")
    np.testing.assert_array_equal(back.iq, iq)
    assert back.pose_ref == (tx, rx)
    assert (back.sample_rate, back.carrier, back.timestamp) == (56e6, 3.4e9, 1.5)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.tuples(finite, finite, finite, finite, finite), min_size=1, max_size=20))
def test_pose_csv_round_trip_is_exact(tmp_path, rows):
    poses = [PoseSample(a, (b, c, d), e) for a, b, c, d, e in rows]
    fileio.write_poses_csv(tmp_path / "poses.csv", poses)
    assert fileio.read_poses_csv(tmp_path / "poses.csv") == poses


def test_cir_jsonl_round_trip(tmp_path):
    cirs = [ExtractedCir([CirTap(0.0, 0.0, 1e-3 + 2e-4j), CirTap(3.5e-9, -12.25, -1e-4j)],
                         -41.2, 15.0, -110.5, 1.7e-6, 0.1),
            ExtractedCir([], -math.inf, 15.0, -math.inf, 0.0, 0.2)]
    fileio.write_cirs_jsonl(tmp_path / "c.jsonl", cirs)
    assert fileio.read_cirs_jsonl(tmp_path / "c.jsonl") == cirs
    # strict JSON: no Infinity tokens
    for line in (tmp_path / "c.jsonl").read_text().splitlines():
        json.loads(line, parse_constant=lambda c: pytest.fail(f"non-standard token {c}"))


def test_trace_csv_round_trip(tmp_path):
    trace = follow_trajectory(straight_path(10.0), FollowerConfig())
    fileio.write_trace_csv(tmp_path / "t.csv", trace)
    table = fileio.read_trace_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(table[:, 0], trace.t)
    np.testing.assert_array_equal(table[:, 1:4], trace.position)
    np.testing.assert_array_equal(table[:, 4:7], trace.velocity)
    np.testing.assert_array_equal(table[:, 7], trace.cross_track)


def test_stats_exports_round_trip(tmp_path):
    tx = PoseSample(0.0, (0.0, 0.0, 65.0), 0.0)
    snaps = [(tx, PoseSample(0.0, (20 * math.cos(a), 20 * math.sin(a), 50 + 10 * a), a),
              ExtractedCir([CirTap(0.0, 0.0, 1e-3 * (1 + a)), CirTap(4e-9, -20.0, 1e-4)],
                           -40.0, 15.0)) for a in np.linspace(0, 3, 40)]
    stats = aggregate_campaign(snaps)
    fileio.write_campaign_stats(tmp_path, stats)
    rows = fileio.read_power_table(tmp_path / "power_vs_heading.csv",
                                   ["heading_bin_deg", "mean_db", "count"])
    assert [(h, m, int(n)) for h, m, n in rows] == stats.power_vs_heading
    pl = fileio.read_path_loss_fit(tmp_path / "path_loss_fit.json")
    assert pl == stats.path_loss
    assert json.loads((tmp_path / "path_loss_fit.json").read_text())["gamma_fixed"] is True
    cdf = fileio.read_power_table(tmp_path / "delay_spread_cdf_55_65.csv", ["tau_ns", "cdf"])
    assert cdf[-1][1] == 1.0
    assert "power_grid_alt65.csv" in fileio.list_outputs(tmp_path)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(PersistenceError):
        fileio.read_poses_csv(tmp_path / "nope.csv")
    (tmp_path / "bad.csv").write_text("t_s,north_m\n1,2\n")
    with pytest.raises(InputError):
        fileio.read_poses_csv(tmp_path / "bad.csv")
    (tmp_path / "bad2.csv").write_text(",".join(fileio.POSE_COLUMNS) + "\n1,2,x,4,5\n")
    with pytest.raises(InputError):
        fileio.read_poses_csv(tmp_path / "bad2.csv")
    (tmp_path / "c.jsonl").write_text("{not json\n")
    with pytest.raises(InputError):
        fileio.read_cirs_jsonl(tmp_path / "c.jsonl")
    with pytest.raises(PersistenceError):
        fileio.capture_stems(tmp_path / "missing")
