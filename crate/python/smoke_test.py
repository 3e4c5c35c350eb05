"""Smoke test for the orbit_localize extension module.

Build first: `pip install maturin && maturin develop -m crates/python/Cargo.toml`
(or `pip install ./crates/python`). Run: `python python/smoke_test.py`.
"""

import math

import orbit_localize as ol


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    sl2 = ol.Algebra("sl_real", 2)
    assert sl2.dim == 3 and sl2.rank == 1
    h = [1.0, 0.0, 0.0]
    assert close(sl2.killing_form(h, h), 8.0)
    assert close(sl2.bracket(h, [0.0, 1.0, 0.0])[1], 2.0)

    # compact su(2): F(t iH) = sin(c t) / t
    su2 = ol.Orbit("su", 2, [1.3])
    assert su2.mode == "compact" and su2.s0 == 1
    x = su2.cartan_element([0.7])
    assert close(su2.fourier_value(x).real, math.sin(1.3 * 0.7) / 0.7)
    assert [m for _, _, m in su2.fixed_points()] == [1, 1]
    assert su2.casimir_residual(x) < 1e-4

    # split sl(2, R): +cos(c a) / a with the calibrated sign
    split = ol.Orbit("sl_real", 2, [4.0])
    assert split.mode == "maximally_split" and split.s0 == -1
    v = split.fourier_value(split.cartan_element([0.3]))
    assert close(v.real, math.cos(1.2) / 0.3) and abs(v.imag) < 1e-12
    # elliptic elements: exactly zero
    r = split.evaluate([0.0, 0.5, -0.5])
    assert r["support_empty"] and r["total"] == 0

    try:
        su2.fourier_value([0.0, 0.0, 0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("wall point must raise")

    agreement = su2.oracle_agreement(seed=5, samples=50_000, points=10)
    assert agreement["misses"] <= 1, agreement

    rows = ol.verify("fixedpoints", ol.Orbit("su", 3, [1.0, 0.7]), seed=1, points=20)
    assert all(passed for *_, passed in rows), rows

    print(f"orbit_localize {ol.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
