"""Sounding one air-to-air link, from probe to impulse response.

Run with ``python3 demos/01_probe_and_cir.py``.
"""
# %% The probe: four back-to-back periods of a length-2048 Zadoff-Chu sequence.
import math

import numpy as np

from a2a_sounding.channel import apply_channel, default_environment, simulate_channel
from a2a_sounding.sounder import extract_cir, received_power_db
from a2a_sounding.trajectory import PoseSample, assign_heading
from a2a_sounding.waveform import autocorrelation_profile, generate_zc, peak_sidelobe_db

probe = generate_zc()
print(f"{len(probe.samples)} samples at {probe.sample_rate / 1e6:.0f} MS/s, "
      f"one period lasts {probe.period * 1e6:.2f} us")
print(f"|x| spread: {np.ptp(np.abs(probe.samples)):.1e}")
print(f"periodic autocorrelation: peak {autocorrelation_profile(probe)[0]:.0f}, "
      f"sidelobes {peak_sidelobe_db(probe):.0f} dB down")

# %% Two drones: the transmitter hovers at 65 m facing north, the receiver
# sits 20 m to the north-east, a little lower, and turns to face it.
tx = PoseSample(0.0, (0.0, 0.0, 65.0), 0.0)
rx_pos = (14.0, 14.0, 60.0)
rx = PoseSample(0.0, rx_pos, assign_heading(rx_pos, tx.position).value)
env = default_environment()
ch = simulate_channel(tx, rx, env)
for c in ch.components:
    print(f"  {c.origin.value:18s} delay {c.delay * 1e9:8.2f} ns  power {10 * math.log10(c.power):7.1f} dB")

# %% Pass the probe through the channel at 30 dB SNR and correlate it back out.
capture = apply_channel(ch, probe, snr_db=30.0, seed=1)
cir = extract_cir(capture, probe)
print(f"noise floor {cir.noise_floor_db:.1f} dB below the main tap")
for tap in cir.taps:
    print(f"  tap at {tap.delay * 1e9:+8.2f} ns, {tap.power_db:6.1f} dB")
print(f"received power {received_power_db(cir):.1f} dB "
      f"(channel total {10 * math.log10(ch.total_power()):.1f} dB)")
# The scatterer sits ~60 dB under the direct ray, far below what 30 dB of
# SNR can reveal, so only the direct ray and the ground bounce come back.
