import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.integrate import quad

from a2a_sounding.errors import DomainError, ParameterError
from a2a_sounding.trajectory import (SphereTrajectoryParams, assign_heading, path_length,
                                     poses_to_arrays, sphere_path_arclength,
                                     sphere_path_parametric, sphere_point_parametric,
                                     sphere_residual)

TABLE = SphereTrajectoryParams()


def test_parametric_endpoints_and_equator():
    assert sphere_point_parametric(0.0, TABLE).position == (0.0, 0.0, 45.0)
    top = sphere_point_parametric(2 * 20 ** 2 / 1.5, TABLE)
    assert top.position[2] == 85.0
    assert top.position[:2] == pytest.approx((0.0, 0.0), abs=1e-12)
    eq = sphere_point_parametric(20 ** 2 / 1.5, TABLE)
    assert eq.position == pytest.approx((20.0, 0.0, 65.0), abs=1e-9)


def test_parametric_outside_range():
    with pytest.raises(DomainError):
        sphere_point_parametric(-0.1, TABLE)
    with pytest.raises(DomainError):
        sphere_point_parametric(TABLE.climb_duration + 1.0, TABLE)


def test_parametric_climb_is_linear():
    t, pos, _ = poses_to_arrays(sphere_path_parametric(TABLE))
    slope = np.diff(pos[:, 2]) / np.diff(t)
    np.testing.assert_allclose(slope, 1.5 / 20, rtol=1e-9)
    assert pos[0, 2] == 45.0 and pos[-1, 2] == 85.0


def test_path_length_against_quad_oracle():
    # arc length via the Up coordinate: |dP/dU| integrated with adaptive quadrature
    def speed(u):
        z = (u - 65.0) / 20.0
        r = 20.0 * math.sqrt(max(1.0 - z * z, 0.0))
        dr = -z / math.sqrt(max(1.0 - z * z, 1e-300))
        return math.sqrt(dr * dr + (r * 8 * math.pi / 20.0) ** 2 + 1.0)

    oracle, _ = quad(speed, 45.0, 85.0, limit=400, epsabs=1e-10)
    assert path_length(TABLE) == pytest.approx(oracle, rel=1e-6)
    assert path_length(TABLE) == pytest.approx(799.38, abs=0.01)


def test_arclength_sampler_speed_and_count():
    poses = sphere_path_arclength(TABLE, 1.5)
    t, pos, _ = poses_to_arrays(poses)
    assert len(poses) == math.ceil(path_length(TABLE) / 1.5 * 10)
    v = np.linalg.norm(np.diff(pos, axis=0), axis=1) / np.diff(t)
    assert v.min() >= 1.485 and v.max() <= 1.515
    np.testing.assert_allclose(np.diff(t), 0.1, atol=1e-12)


def test_arclength_azimuth_sweep_and_poles():
    _, pos, _ = poses_to_arrays(sphere_path_arclength(TABLE))
    az = np.unwrap(np.arctan2(pos[1:-1, 1], pos[1:-1, 0]))
    # the poles themselves have no azimuth; the sweep is +-n*pi about the equator
    z0, z1 = (pos[1, 2] - 65) / 20, (pos[-2, 2] - 65) / 20
    assert az[-1] - az[0] == pytest.approx(8 * math.pi * (z1 - z0), abs=1e-6)
    assert pos[0, 2] == 45.0 and pos[-1, 2] == 85.0
    residual = max(abs(sphere_residual(p, TABLE)) for p in pos)
    assert residual < 1e-9 * 20 ** 2


def test_heading_examples():
    assert assign_heading((-20, 0, 65), (0, 0, 65)) == (0.0, False)
    assert assign_heading((0, -20, 65), (0, 0, 65)).value == pytest.approx(math.pi / 2)
    h = assign_heading((0, 0, 45), (0, 0, 65))
    assert h.degenerate and h.value == 0.0
    assert assign_heading((0, 0, 45), (0, 0, 65), previous=1.25) == (1.25, True)


def test_heading_due_south_wraps_to_minus_pi():
    assert assign_heading((20, 0, 65), (0, 0, 65)).value == -math.pi


@pytest.mark.parametrize("kwargs", [dict(radius=0), dict(turns=2.5), dict(path_velocity=-1),
                                    dict(sample_rate=0), dict(radius=70)])
def test_invalid_params(kwargs):
    with pytest.raises(ParameterError):
        SphereTrajectoryParams(**kwargs)


@given(st.floats(-500, 500), st.floats(-500, 500), st.floats(-500, 500), st.floats(-500, 500))
def test_heading_range(a, b, c, d):
    h = assign_heading((a, b, 0.0), (c, d, 0.0))
    assert -math.pi <= h.value < math.pi


@given(st.floats(2.0, 40.0), st.integers(1, 6), st.floats(0.5, 4.0))
def test_arclength_sphere_membership_and_speed(radius, turns, speed):
    # chords only track the arc when a step is short against the curvature
    # radius, roughly R / (n pi) near the equator
    assume(speed / 10.0 < 0.3 * radius / (turns * math.pi))
    p = SphereTrajectoryParams(radius, radius + 10.0, turns, speed, 10.0)
    t, pos, _ = poses_to_arrays(sphere_path_arclength(p))
    res = pos[:, 0] ** 2 + pos[:, 1] ** 2 + (pos[:, 2] - p.center_altitude) ** 2 - radius ** 2
    assert np.max(np.abs(res)) < 1e-9 * radius ** 2
    v = np.linalg.norm(np.diff(pos, axis=0), axis=1) / np.diff(t)
    assert np.all(np.abs(v / speed - 1) < 0.01)
    assert pos[0, 2] == p.floor and pos[-1, 2] == p.ceiling
