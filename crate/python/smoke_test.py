"""Smoke test for the `fracnls` extension module.

Build the module first, for example

    cargo build --release -p fracnls-py --features extension-module
    cp target/release/libfracnls.so python/fracnls.so

or `maturin develop -m crates/python/Cargo.toml`, then run this file.
"""

import cmath
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fracnls


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    exps = fracnls.exponents(1, 0.4, 2.0)
    assert exps["criticality"] == "subcritical"
    assert close(2.0 / exps["gamma"], 0.5 - 1.0 / exps["rho"], 1e-12)
    try:
        fracnls.exponents(1, 0.6, 2.0)
    except ValueError as err:
        assert "regularity" in str(err)
    else:
        raise AssertionError("s = 0.6 in N = 1 must be rejected")

    grid = fracnls.Grid(1, 256, 2 * math.pi)
    amp, k0 = 0.5, 3.0
    xs = grid.axis()
    phi = fracnls.Field(grid, [amp * cmath.exp(1j * k0 * x) for x in xs])
    assert close(phi.sobolev_norm(0.0, True), phi.lebesgue_norm(2.0), 1e-12)

    nl = fracnls.PowerNonlinearity(1.0, 2.0)
    assert close(abs(nl(1.0 + 0j)), 1.0, 1e-15)
    dz, dzbar = nl.wirtinger(1.0 + 0j)
    assert close(dz.real, 2.0, 1e-15) and close(dzbar.real, 1.0, 1e-15)

    omega = -k0 * k0 + amp ** 2
    exact = [amp * cmath.exp(1j * (k0 * x + omega)) for x in xs]
    split = fracnls.split_step(phi, nl, 1.0, 256)[-1].values()
    assert max(abs(a - b) for a, b in zip(split, exact)) < 1e-8
    slices, iterations = fracnls.picard(phi, nl, 0.4, 1.0, 256)
    assert iterations > 1
    assert max(abs(a - b) for a, b in zip(slices[-1].values(), exact)) < 1e-6

    g = fracnls.Field.gaussian(grid, 0.7)
    moved = g.free_propagate(0.3).translate([0.25])
    assert close(moved.sobolev_norm(0.5), g.sobolev_norm(0.5), 1e-10)
    assert g.besov_fd(0.5, 2.0, 2.0) > 0.0

    sweep = fracnls.verify_pointwise(2.0, 20_000, 1)
    assert sweep["modulus_violations"] == 0 and sweep["phase_violations"] == 0

    dgrid = fracnls.Grid(1, 128, 30.0)
    base = fracnls.Field.gaussian(dgrid, 1.5, 0.5)
    rep = fracnls.dependence(base, 0.4, 2.0, 1.0, 0.25, 32, levels=5)
    assert len(rep["rows"]) == 6
    assert 0.85 <= rep["slope"] <= 1.15

    passed, _ = fracnls.selftest(5_000)
    assert passed

    print("fracnls smoke test passed")


if __name__ == "__main__":
    main()
