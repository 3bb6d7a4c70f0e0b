#!/usr/bin/env python3
"""Smoke test for the h2wkit_py extension module.

Builds the extension if needed, loads it straight from the cargo target
directory, and checks a handful of closed-form values.

Usage: python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def locate_extension() -> Path:
    candidates = [
        ROOT / "target" / profile / "libh2wkit_py.so"
        for profile in ("release", "debug")
    ]
    for path in candidates:
        if path.exists():
            return path
    print("extension not found; building with cargo ...", flush=True)
    subprocess.run(
        ["cargo", "build", "-p", "h2wkit-py", "--release"], cwd=ROOT, check=True
    )
    return candidates[0]


def import_module():
    lib = locate_extension()
    # CPython imports extension modules by file name, so expose the cdylib
    # under the module's import name in a scratch directory.
    scratch = Path(tempfile.mkdtemp(prefix="h2wkit-py-"))
    shutil.copy2(lib, scratch / "h2wkit_py.so")
    sys.path.insert(0, str(scratch))
    import h2wkit_py

    return h2wkit_py


def approx(got, want, tol=1e-12):
    assert abs(got - want) <= tol, f"got {got!r}, want {want!r} (tol {tol})"


def main():
    hk = import_module()

    # First-order lag 1/(s+1): band norm atan(omega)/pi, H2 norm 1/2.
    lag = hk.Model([[-1.0]], [[1.0]], [[1.0]])
    approx(hk.h2(lag).value_sq, 0.5)
    approx(hk.h2(lag, backend="gramian").value_sq, 0.5)
    for omega in (0.5, 1.0, 2.0):
        want = math.atan(omega) / math.pi
        approx(hk.h2w(lag, omega).value_sq, want)
        approx(hk.h2w(lag, omega, backend="gramian").value_sq, want)
        approx(hk.h2w(lag, omega, backend="quadrature", tol=1e-10).value_sq, want, 1e-9)
    r = hk.h2w(lag, 1.0)
    approx(r.value, 0.5)
    assert r.backend == "spectral" and not r.no_h2_interpretation
    assert r.imag_residual <= 1e-15 and r.elapsed_s > 0.0

    # Interval band = difference of one-sided bands.
    want = (math.atan(2.0) - math.atan(1.0)) / math.pi
    approx(hk.h2w_interval(lag, 1.0, 2.0).value_sq, want)
    approx(hk.h2w_interval(lag, 1.0, 2.0, backend="gramian").value_sq, want)

    # Poles and the transfer function.
    (pole,) = lag.poles()
    approx(pole.real, -1.0)
    approx(pole.imag, 0.0)
    approx(lag.transfer(1j)[0][0], 1.0 / (1j + 1.0), tol=1e-15)

    # Sweep decomposes once and matches pointwise evaluation.
    grid = [0.0, 0.5, 1.0, 2.0]
    rows = hk.sweep(lag, grid)
    assert [w for w, _, _ in rows] == grid
    for w, vsq, v in rows:
        approx(vsq, math.atan(w) / math.pi)
        approx(v, math.sqrt(max(vsq, 0.0)))

    # Wide-band regimes.
    regime, vsq = hk.wide_band_limit(lag)
    assert regime == "stable"
    approx(vsq, 0.5)
    anti = hk.Model([[1.0]], [[1.0]], [[1.0]])
    regime, vsq = hk.wide_band_limit(anti)
    assert regime == "finite"
    approx(vsq, 0.5, tol=1e-10)
    osc = hk.Model([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])
    regime, vsq = hk.wide_band_limit(osc)
    assert regime == "infinite" and vsq is None

    # Band-edge validation surfaces as ValueError.
    try:
        hk.h2w(osc, 1.5)
    except ValueError as e:
        assert "imaginary-axis pole" in str(e)
    else:
        raise AssertionError("band violation must raise ValueError")

    # Random generation and file round trip.
    m = hk.Model.random(6, nu=2, ny=1, spectrum="light:0.05", seed=7)
    assert (m.n, m.nu, m.ny) == (6, 2, 1)
    assert all(p.real < 0.0 for p in m.poles())
    cmp = hk.Model.random(6, nu=2, ny=1, spectrum="light:0.05", seed=7)
    assert m.a == cmp.a and m.b == cmp.b and m.c == cmp.c, "seeded draws must repeat"
    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "model.ssm")
        m.save(path, name="smoke")
        back = hk.Model.load(path)
        assert back.name == "smoke"
        assert back.a == m.a and back.b == m.b and back.c == m.c and back.d == m.d

    # The three backends agree on a nontrivial model.
    vals = [
        hk.h2w(m, 10.0, backend=b).value_sq
        for b in ("spectral", "gramian", "quadrature")
    ]
    spread = max(vals) - min(vals)
    assert spread <= 1e-8 * max(1.0, max(map(abs, vals))), f"backends disagree: {vals}"

    print("h2wkit_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
