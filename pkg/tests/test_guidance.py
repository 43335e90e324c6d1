import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2a_sounding.errors import DivergenceError, InputError, ParameterError, TuningError
from a2a_sounding.guidance import (L1, L1_LOOKAHEADS, PID, FollowerConfig, VehicleState,
                                   circle_path, follow_trajectory, straight_path, tune_follower)
from a2a_sounding.trajectory import SphereTrajectoryParams, sphere_path_arclength

LINE = straight_path(60.0)


def _start(path, max_accel=10.0, offset=(0.0, 0.0, 0.0)):
    p0 = np.array(path[0].position)
    v0 = (np.array(path[1].position) - p0) / (path[1].t - path[0].t)
    return VehicleState(tuple(p0 + offset), tuple(v0), max_accel)


def test_straight_line_on_path_stays_within_a_centimetre():
    for cfg in (FollowerConfig(L1, lookahead=3.0), FollowerConfig(PID)):
        trace = follow_trajectory(LINE, cfg, _start(LINE))
        assert trace.max_cross_track < 0.01


def test_circle_tracking_and_curvature_cross_check():
    # a 10 m circle at 5 m/s needs v**2 / R = 2.5 m/s**2 of lateral acceleration
    path = circle_path(10.0, 5.0, laps=1.0)
    trace = follow_trajectory(path, FollowerConfig(L1, lookahead=2.0), _start(path))
    lateral = np.linalg.norm(trace.accel[50:-50], axis=1)
    assert np.median(lateral) == pytest.approx(2.5, rel=0.05)
    assert trace.rms_cross_track < 0.1


def test_acceleration_limit_too_low_for_the_turn():
    path = circle_path(10.0, 5.0, laps=1.0)
    trace = follow_trajectory(path, FollowerConfig(L1, lookahead=2.0), _start(path, 2.0))
    assert trace.max_cross_track > 1.0


def test_tuning_straight_line_returns_best_candidate():
    start = _start(LINE, offset=(0.0, 1.0, 0.0))
    best = tune_follower(LINE, {"lookahead": (2.0, 4.0, 8.0)}, FollowerConfig(L1), start)
    rms = {la: follow_trajectory(LINE, FollowerConfig(L1, lookahead=la), start).rms_cross_track
           for la in (2.0, 4.0, 8.0)}
    assert best.lookahead == min(rms, key=rms.get)


def test_unreachable_acceleration_fails_tuning():
    path = sphere_path_arclength(SphereTrajectoryParams())
    with pytest.raises(TuningError) as info:
        tune_follower(path, {"lookahead": L1_LOOKAHEADS}, FollowerConfig(L1),
                      _start(path, 0.01), target_rms=0.5)
    assert len(info.value.diagnostics) == len(L1_LOOKAHEADS)


def test_divergence_carries_partial_trace():
    path = circle_path(10.0, 5.0, laps=1.0)
    with pytest.raises(DivergenceError) as info:
        follow_trajectory(path, FollowerConfig(L1, divergence_limit=0.5), _start(path, 0.2))
    assert len(info.value.trace) > 1
    assert info.value.trace.cross_track[-1] > 0.5


def test_input_validation():
    with pytest.raises(ParameterError):
        FollowerConfig("bang_bang")
    with pytest.raises(ParameterError):
        FollowerConfig(timestep=0.5)
    with pytest.raises(InputError):
        follow_trajectory(LINE, FollowerConfig(), _start(LINE, offset=(0.0, 10.0, 0.0)))
    with pytest.raises(ParameterError):
        tune_follower(LINE, {"lookahead": ()})


def test_determinism_with_measurement_noise():
    cfg = FollowerConfig(L1, position_noise=0.05, noise_seed=3)
    a = follow_trajectory(LINE, cfg, _start(LINE))
    b = follow_trajectory(LINE, cfg, _start(LINE))
    np.testing.assert_array_equal(a.position, b.position)
    np.testing.assert_array_equal(a.cross_track, b.cross_track)


def test_trace_iterates_states():
    trace = follow_trajectory(LINE, FollowerConfig(), _start(LINE))
    state, err = next(iter(trace))
    assert state.position == LINE[0].position and err == 0.0


@settings(max_examples=20)
@given(st.sampled_from([L1, PID]), st.floats(0.2, 10.0), st.floats(-2.0, 2.0),
       st.floats(1.0, 6.0))
def test_acceleration_never_exceeds_limit(controller, limit, offset, lookahead):
    path = circle_path(8.0, 2.0, laps=0.3)
    cfg = FollowerConfig(controller, lookahead=lookahead, divergence_limit=1e6)
    trace = follow_trajectory(path, cfg, _start(path, limit, (0.0, offset, 0.0)))
    assert np.max(np.linalg.norm(trace.accel, axis=1)) <= limit * (1 + 1e-12)


def test_speed_holds_in_steady_tracking():
    path = sphere_path_arclength(SphereTrajectoryParams())
    trace = follow_trajectory(path, FollowerConfig(L1, lookahead=2.0), _start(path))
    # the last seconds wind down onto the path end
    steady = trace.speed[trace.t < trace.t[-1] - 5.0]
    assert np.all(np.abs(steady / 1.5 - 1) < 0.10)
