"""Smoke test for the mmtrace_py extension module.

Build and install the module first:

    pip install maturin
    maturin develop -m crates/py/Cargo.toml --release
    python python/smoke_test.py
"""

import cmath
import math
import tempfile

import mmtrace_py as mt


def check_signal_ops():
    tx = mt.gen_transmit_signal(1e4, 0.5, seed=3)
    power = sum(abs(s) ** 2 for s in tx) / len(tx)
    assert abs(power - 1.0) < 1e-6, power

    fs, fd = 1e4, 20.0
    echo = [s * cmath.exp(-2j * math.pi * fd * n / fs) * 0.1 for n, s in enumerate(tx)]
    clutter = [0.5 * s for s in tx]
    y_s = [a + b for a, b in zip(echo, clutter)]
    cleaned = mt.clutter_cancel(y_s, tx)
    times, bins, rows = mt.caf_spectrogram(cleaned, tx, fs)
    assert len(times) == 41 and len(rows[0]) == len(bins)
    for row in rows:
        k = mt.detect_bin(row, 3.0, 25, 4)
        assert k is not None and bins[k] == fd, (k, bins[k] if k is not None else None)


def check_geometry():
    f1, f2 = mt.doppler_from_motion(0.5, 0.5, 0.1, math.pi / 2)
    v, th = mt.solve_velocity(f1, f2, 0.5, 0.5)
    assert abs(v - 0.1) < 1e-12 and abs(th - math.pi / 2) < 1e-12
    x, y = mt.initial_position(math.radians(45), math.radians(135))
    assert abs(x - 0.5) < 1e-12 and abs(y - 0.5) < 1e-12
    try:
        mt.solve_velocity(1.0, 1.0, 0.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("node position should be rejected")


def check_pipeline():
    s = mt.Scenario("los")
    s.stroke = "line"
    assert mt.Scenario.from_json(s.to_json()).stroke == "line"
    with tempfile.TemporaryDirectory() as d:
        assert len(mt.simulate(s, d)) == 5
        tracks = mt.detect(s, d)
        assert len(tracks) == 2
        times, xs, ys, flags = mt.track(s, d)
        assert len(xs) == len(times) == len(flags)
        median, p90, errors = mt.evaluate(d)
        assert p90 < 6e-3, p90
        print(f"line stroke: median {median * 1e3:.2f} mm, p90 {p90 * 1e3:.2f} mm")
    try:
        mt.evaluate("/nonexistent-run-dir")
    except OSError:
        pass
    else:
        raise AssertionError("missing artifacts should raise OSError")


if __name__ == "__main__":
    check_signal_ops()
    check_geometry()
    check_pipeline()
    print("smoke test passed")
