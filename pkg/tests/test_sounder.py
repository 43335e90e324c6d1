import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from a2a_sounding.channel import (ChannelRealization, Environment, MultipathComponent,
                                  apply_channel, free_space_path_loss_db, simulate_channel)
from a2a_sounding.errors import InputError
from a2a_sounding.sounder import (CirTap, ExtractedCir, SounderCapture, averaged_correlation,
                                  estimate_noise_floor, extract_cir, noise_floor_power,
                                  received_power_db)
from a2a_sounding.trajectory import PoseSample
from a2a_sounding.waveform import generate_zc

PROBE = generate_zc()
FS = PROBE.sample_rate


def test_identity_capture_gives_one_tap():
    cap = apply_channel(ChannelRealization([MultipathComponent(1.0, 0.0)]), PROBE)
    cir = extract_cir(cap, PROBE)
    assert len(cir) == 1
    assert cir.taps[0].delay == 0.0 and cir.taps[0].power_db == 0.0
    assert cir.reference_delay == 0.0
    assert received_power_db(cir) == pytest.approx(0.0, abs=1e-9)


def test_two_known_taps_at_30db():
    ch = ChannelRealization([MultipathComponent(1.0, 50 / FS),
                             MultipathComponent(10 ** (-6 / 20), 60 / FS)])
    cir = extract_cir(apply_channel(ch, PROBE, 30.0, seed=3), PROBE)
    assert len(cir) == 2
    assert cir.taps[1].delay * 1e9 == pytest.approx(178.57, abs=3.6)
    assert cir.taps[1].power_db == pytest.approx(-6.0, abs=0.5)
    assert cir.reference_delay * FS == pytest.approx(50.0, abs=0.2)


def test_noise_only_capture_has_no_taps():
    rng = np.random.default_rng(7)
    iq = rng.standard_normal(8192) + 1j * rng.standard_normal(8192)
    cir = extract_cir(SounderCapture(iq, FS, 3.4e9), PROBE)
    assert len(cir) == 0
    assert math.isfinite(cir.noise_power_db)
    with pytest.raises(InputError):
        received_power_db(cir)


def test_capture_validation():
    with pytest.raises(InputError):
        extract_cir(SounderCapture(np.ones(8192), 20e6, 3.4e9), PROBE)
    with pytest.raises(InputError):
        extract_cir(SounderCapture(np.ones(100), FS, 3.4e9), PROBE)


def test_noise_floor_constant_and_peak():
    c = 0.3
    assert estimate_noise_floor(np.full(100, c)) == pytest.approx(10 * math.log10(1 / math.log(2)))
    assert noise_floor_power(np.full(100, c)) == pytest.approx(c * c / math.log(2))
    mags = np.full(1000, 0.01)
    mags[10] = 100.0
    assert noise_floor_power(mags) == pytest.approx(1e-4 / math.log(2))
    with pytest.raises(InputError):
        estimate_noise_floor([])


def test_noise_floor_tracks_true_power_monte_carlo():
    # coherent averaging of 4 periods of length L scales noise power by 1/(4L)
    sigma2 = 2.0
    errors = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noise = math.sqrt(sigma2 / 2) * (rng.standard_normal(8192) + 1j * rng.standard_normal(8192))
        r = averaged_correlation(SounderCapture(noise, FS, 3.4e9), PROBE)
        errors.append(10 * math.log10(noise_floor_power(np.abs(r)) / (sigma2 / 8192)))
    assert max(abs(e) for e in errors) < 1.0


def test_received_power_examples():
    one = ExtractedCir([CirTap(0.0, 0.0, 1.0)], -40.0, 15.0)
    assert received_power_db(one) == 0.0
    g = 1 / math.sqrt(2)
    two = ExtractedCir([CirTap(0.0, 0.0, g), CirTap(1e-8, 0.0, 1j * g)], -40.0, 15.0)
    assert received_power_db(two) == pytest.approx(0.0, abs=1e-12)


def test_free_space_link_power():
    tx = PoseSample(0.0, (0.0, 0.0, 65.0), 0.0)
    rx = PoseSample(0.0, (20.0, 0.0, 65.0), math.pi)
    ch = simulate_channel(tx, rx, Environment(ground=False))
    cir = extract_cir(apply_channel(ch, PROBE, 40.0, seed=1), PROBE)
    expect = -(free_space_path_loss_db(20.0) - 2 * 2.15)
    assert expect == pytest.approx(-64.8, abs=0.1)
    assert received_power_db(cir) == pytest.approx(expect, abs=0.05)


def test_round_trip_batch(channel_factory):
    make, compare = channel_factory
    rng = np.random.default_rng(99)
    for k in range(25):
        ch, delays, powers = make(rng, FS)
        cir = extract_cir(apply_channel(ch, PROBE, 30.0, seed=k), PROBE)
        ok, de, pe = compare(cir, delays, powers, FS)
        assert ok and de <= 0.2 and pe <= 0.5


CHANNEL = ChannelRealization([MultipathComponent(1.0, 100.3 / FS),
                              MultipathComponent(0.4j, 107.8 / FS)])
CAPTURE = apply_channel(CHANNEL, PROBE, 35.0, seed=11)
BASE_CIR = extract_cir(CAPTURE, PROBE)


@settings(max_examples=15)
@given(st.integers(-600, 600))
def test_shift_equivariance(k):
    cir = extract_cir(CAPTURE.delayed(k), PROBE)
    np.testing.assert_allclose(cir.delays, BASE_CIR.delays, atol=1e-3 / FS)
    shift = (cir.reference_delay - BASE_CIR.reference_delay) * FS
    assert (shift - k) % 2048 == pytest.approx(0.0, abs=1e-3) or \
        (shift - k) % 2048 == pytest.approx(2048.0, abs=1e-3)


@settings(max_examples=15)
@given(st.floats(1e-3, 1e3))
def test_scale_equivariance(g):
    cir = extract_cir(CAPTURE.scaled(g), PROBE)
    assert received_power_db(cir) - received_power_db(BASE_CIR) == pytest.approx(
        20 * math.log10(g), abs=1e-6)
    np.testing.assert_allclose([t.power_db for t in cir.taps],
                               [t.power_db for t in BASE_CIR.taps], atol=1e-6)
