"""Why the flights use a lookahead follower rather than a PID loop.

Run with ``python3 demos/03_follower_comparison.py``.
"""
# %%
import numpy as np

from a2a_sounding.guidance import (L1, L1_LOOKAHEADS, FollowerConfig, VehicleState,
                                   follow_trajectory, straight_line_pid)
from a2a_sounding.trajectory import SphereTrajectoryParams, sphere_path_arclength

path = sphere_path_arclength(SphereTrajectoryParams())
p0 = np.array(path[0].position)
start = VehicleState(tuple(p0), tuple((np.array(path[1].position) - p0) / 0.1), max_accel=10.0)

# %% The lookahead follower: shorter lookahead means tighter tracking until
# the commanded acceleration starts hitting the limit.
for lookahead in L1_LOOKAHEADS:
    trace = follow_trajectory(path, FollowerConfig(L1, lookahead=lookahead), start)
    print(f"lookahead {lookahead:3.1f} m: RMS {trace.rms_cross_track * 100:6.2f} cm, "
          f"worst {trace.max_cross_track * 100:6.2f} cm")

# %% A PID loop tuned where it is easy (a straight line, recovering from a
# 1 m offset) has no notion of curvature and lags on the spiral.
pid = straight_line_pid()
trace = follow_trajectory(path, pid, start)
print(f"PID kp={pid.kp} kd={pid.kd} ki={pid.ki}: RMS {trace.rms_cross_track * 100:.2f} cm, "
      f"worst {trace.max_cross_track * 100:.2f} cm")
