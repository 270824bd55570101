"""Regenerate tests/oracles/frozen.json with mpmath at 30 digits.

Every value comes from a route independent of nanopa: mpmath Bessel
functions and root finding, mpmath quadrature on the square, and the
closed-form log potential of the disc.
"""

from __future__ import annotations

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
OUT = Path(__file__).resolve().parents[1] / "tests" / "oracles" / "frozen.json"

BESSEL_POINTS = [0.0, 0.3, 1.0, 2.5, 7.0, 11.9, 12.1, 20.0, 45.0]
BESSEL_ORDERS = [0, 1, 2, 5]
COMPLEX_POINTS = [(1.2, 0.0), (1.2, 0.1), (3.0, 0.5), (15.0, 0.2)]


def bessel_table():
    rows = []
    for n in BESSEL_ORDERS:
        for x in BESSEL_POINTS:
            row = {"order": n, "x": x, "j": float(mp.besselj(n, x))}
            if x > 0:
                row["y"] = float(mp.bessely(n, x))
            rows.append(row)
    return rows


def hankel_table():
    rows = []
    for re, im in COMPLEX_POINTS:
        z = mp.mpc(re, im)
        h = mp.hankel1(0, z)
        rows.append({"re": re, "im": im, "h_re": float(h.real), "h_im": float(h.imag)})
    return rows


def disc_radial_roots(a, n):
    """Roots of J0(mu) + mu log(a) J1(mu) (k = 0) and of J_{k-1} (k >= 1)."""
    f = lambda mu: mp.besselj(0, mu) + mu * mp.log(a) * mp.besselj(1, mu)
    roots, grid = [], [mp.mpf(i) / 200 for i in range(1, 4000)]
    prev = f(grid[0])
    for lo, hi in zip(grid[:-1], grid[1:]):
        cur = f(hi)
        if prev * cur < 0:
            roots.append(float(mp.findroot(f, (lo, hi), solver="anderson")))
            if len(roots) == n:
                break
        prev = cur
    return roots


def log_potential_disc(points):
    """int over the unit disc of log|x - y| dy: pi(|x|^2 - 1)/2 inside, pi log|x| outside."""
    out = []
    for x in points:
        rho2 = mp.mpf(x[0]) ** 2 + mp.mpf(x[1]) ** 2
        val = mp.pi * (rho2 - 1) / 2 if rho2 <= 1 else mp.pi * mp.log(rho2) / 2
        out.append({"x": list(x), "value": float(val)})
    return out


def log_potential_square(points):
    """int over [0,1]^2 of log|x - y| dy."""
    out = []
    for x in points:
        f = lambda u, v: mp.log(mp.sqrt((x[0] - u) ** 2 + (x[1] - v) ** 2))
        us = sorted({0, 1, min(max(x[0], 0), 1)})
        vs = sorted({0, 1, min(max(x[1], 0), 1)})
        out.append({"x": list(x), "value": float(mp.quad(f, us, vs))})
    return out


def main():
    data = {
        "j0_zeros": [float(mp.besseljzero(0, m)) for m in range(1, 6)],
        "j1_zeros": [float(mp.besseljzero(1, m)) for m in range(1, 4)],
        "bessel": bessel_table(),
        "hankel0": hankel_table(),
        "disc_roots_k0": {str(a): disc_radial_roots(a, 3) for a in (0.5, 1e-3, 1e-5)},
        "log_potential_disc": log_potential_disc([(0.0, 0.0), (0.3, 0.4), (0.9, -0.1), (1.5, 0.5)]),
        "log_potential_square": log_potential_square([(0.5, 0.5), (0.1, 0.7), (0.0, 0.0), (2.0, -1.0)]),
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
