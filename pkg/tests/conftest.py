import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(1234)


def random_channel(rng, fs, length=2048):
    """2-4 taps, powers within 20 dB of the first, spaced >= 2 samples."""
    from a2a_sounding.channel import ChannelRealization, MultipathComponent

    n = int(rng.integers(2, 5))
    delays = [float(rng.uniform(10.0, 400.0))]
    while len(delays) < n:
        d = float(rng.uniform(10.0, 400.0))
        if all(abs(d - x) >= 2.0 for x in delays):
            delays.append(d)
    powers_db = [0.0] + list(rng.uniform(-20.0, 0.0, n - 1))
    phases = rng.uniform(0, 2 * np.pi, n)
    comps = [MultipathComponent(10 ** (p / 20) * np.exp(1j * ph), d / fs)
             for d, p, ph in zip(delays, powers_db, phases)]
    return ChannelRealization(comps), np.array(delays), np.array(powers_db)


def compare_round_trip(cir, delays, powers_db, fs):
    """(count_ok, max delay error in samples, max power error in dB)."""
    if len(cir.taps) != len(delays):
        return False, np.inf, np.inf
    strongest = int(np.argmax(powers_db))
    rel_true = np.sort(delays - delays[strongest])
    order = np.argsort(delays - delays[strongest])
    p_true = (powers_db - powers_db[strongest])[order]
    rel_est = cir.delays * fs
    p_est = np.array([t.power_db for t in cir.taps])
    return True, float(np.max(np.abs(rel_est - rel_true))), float(np.max(np.abs(p_est - p_true)))


@pytest.fixture
def channel_factory():
    return random_channel, compare_round_trip


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
