"""A shortened sphere flight and the statistics it produces.

The full default flight takes about half a minute; this one keeps the
probe, antennas and scatterer but flies a 5 m sphere with two turns.
Run with ``python3 demos/02_sphere_flight.py [out_dir]``.
"""
# %%
import sys

import numpy as np

from a2a_sounding import campaign as cp
from a2a_sounding.trajectory import path_length

cfg = cp.config_from_dict({"trajectory": {"floor_altitude_m": 60, "ceiling_altitude_m": 70,
                                          "turns": 2}})
print(f"path {path_length(cfg.trajectory):.1f} m long")

out = sys.argv[1] if len(sys.argv) > 1 else None
result = cp.run_campaign(cfg, out, write=out is not None)
stats = result.stats
print(f"{len(result.poses)} snapshots, {stats.skipped} without a detected tap")

# %% Received power by heading. Headings near +-180 deg collect the
# snapshots taken close to the poles, where both antennas look into their
# overhead nulls. Headings near 0 deg put the receiver south of the
# transmitter, behind its airframe.
for heading, mean_db, count in stats.power_vs_heading:
    bar = "#" * int(max(0.0, mean_db + 90))
    print(f"{heading:7.1f} deg {mean_db:7.1f} dB  n={count:3d} {bar}")

# %% Delay spread. With the ground bounce well under the direct ray the
# power-weighted spread stays at the nanosecond level.
spreads = np.array([m.rms_delay_spread for m in stats.links]) * 1e9
print("RMS delay spread percentiles (ns):",
      {q: round(float(v), 2) for q, v in zip((10, 50, 90), np.percentile(spreads, (10, 50, 90)))})

# %% Path loss. Every snapshot is 5 m from the transmitter, so the exponent
# cannot be estimated and is held at the free-space value.
pl = stats.path_loss
print(f"PL(1 m) = {pl.pl_d0:.1f} dB, gamma = {pl.gamma} (held: {stats.path_loss_gamma_fixed}), "
      f"sigma = {pl.sigma:.1f} dB")
if out:
    print(f"exports written to {out}")
