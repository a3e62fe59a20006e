#!/usr/bin/env python3
"""Smoke test for the dirac1d_py extension module.

Builds nothing itself: expects `cargo build --release -p dirac1d-py`
to have produced target/release/libdirac1d_py.so. Copies the cdylib
into a temp directory under the importable name and runs quick checks
against hand-computable values.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    for profile in ("release", "debug"):
        for name in ("libdirac1d_py.so", "libdirac1d_py.dylib", "dirac1d_py.dll"):
            p = ROOT / "target" / profile / name
            if p.exists():
                return p
    sys.exit("cdylib not found; run `cargo build --release -p dirac1d-py` first")


def main() -> None:
    lib = locate_cdylib()
    tmp = Path(tempfile.mkdtemp(prefix="dirac1d_py_"))
    suffix = ".so" if lib.suffix != ".dll" else ".pyd"
    shutil.copy(lib, tmp / f"dirac1d_py{suffix}")
    sys.path.insert(0, str(tmp))
    import dirac1d_py as d

    print(f"dirac1d_py {d.version()} from {lib}")

    # transfer matrix basics: det = 1, displayed critical matrices
    t = d.transfer_matrix(0.5, -0.5, 0.0, 1.0)
    det = t[0][0] * t[1][1] - t[0][1] * t[1][0]
    assert abs(det - 1.0) < 1e-12, det
    assert t == [[1.0 - 1.0, 1.0], [-1.0, 1.0]], t
    assert d.transfer_matrix(0.5, 0.5, 0.0, 1.0) == [[1.0, 0.0], [0.0, 1.0]]
    assert abs(d.spectral_radius(t) - 1.0) < 1e-12
    hyper = d.transfer_matrix(1.5, -1.5, 0.0, 1.0)
    assert abs(d.spectral_radius(hyper) - (7 + math.sqrt(45)) / 2) < 1e-12
    print("PASS transfer matrices")

    # critical-energy catalogue
    energies, regime = d.critical_energies(0.0, 1.0, 0.5)
    assert regime == "massless" and energies == [-0.5, 0.5]
    energies, regime = d.critical_energies(1.0, 1.0, math.sqrt(3.0))
    assert regime == "massive_v_eq_special" and energies == [0.0]
    _, regime = d.critical_energies(1.0, 1.0, 0.9)
    assert regime == "none"
    print("PASS critical energies")

    # Lyapunov exponent: ~0 at the critical energy, large off it
    est = d.lyapunov_exponent(0.5, 0.5, 0.5, 0.0, 1.0, 42, 100_000, 4)
    assert est.gamma < 1e-4, est.gamma
    est = d.lyapunov_exponent(1.5, 1.5, 0.5, 0.0, 1.0, 42, 100_000, 4)
    assert est.gamma > 0.5 and est.loc_length < 2.0, (est.gamma, est.loc_length)
    print(f"PASS lyapunov (critical {1e-4:.0e} bound, hyperbolic gamma={est.gamma:.3f})")

    # reproducible sampling
    a = d.sample_potential(0.5, 0.5, "bernoulli", 7, 64, 3)
    b = d.sample_potential(0.5, 0.5, "bernoulli", 7, 64, 3)
    assert a == b and set(a) == {-0.5, 0.5}
    print("PASS sampling determinism")

    # free-dispersion oracle
    n = 16
    eigs = d.dirac_eigenvalues(n, "periodic", 0.0, 1.0, [0.0] * n)
    expected = sorted(
        s * 2.0 * abs(math.sin(math.pi * j / n))
        for j in range(n)
        for s in (+1, -1)
    )
    assert max(abs(x - y) for x, y in zip(eigs, expected)) < 1e-10
    print("PASS free dispersion")

    # ballistic spreading of the free model
    grid = [0.5 * 1.25**k for k in range(18)]
    s = d.moment_series_py(128, 0.0, 1.0, 0.0, 0.5, 1, grid, 1, "delta_plus", "constant_zero")
    alpha, _, r2 = d.fit_power_law(s.times, s.values, 3.0, 30.0)
    assert abs(alpha - 2.0) < 0.15 and r2 > 0.99, (alpha, r2)
    print(f"PASS ballistic moments (alpha={alpha:.3f})")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
