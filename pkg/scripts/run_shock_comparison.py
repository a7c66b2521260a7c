#!/usr/bin/env python3
"""Refinement study: lifted monotone solver against the Godunov oracle on
Burgers Riemann data, with the gap split into shock and fan windows."""

import argparse

import numpy as np

from convexpde.fluxes import flux_from_spec
from convexpde.godunov import godunov_solve, l1_distance
from convexpde.lifted import CellAverages, evolve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--flux", default="burgers")
    ap.add_argument("--cells", type=int, default=200)
    ap.add_argument("--levels", type=int, default=32)
    ap.add_argument("--T", type=float, default=0.4)
    ap.add_argument("--refinements", type=int, default=4)
    args = ap.parse_args()

    flux = flux_from_spec(args.flux)
    n, n_a = args.cells, args.levels
    print(f"{'cells':>7}{'levels':>8}{'gap':>12}{'shock_gap':>12}{'fan_gap':>12}")
    prev = None
    for _ in range(args.refinements):
        x = (np.arange(n) + 0.5) / n
        u0 = CellAverages((x < 0.5).astype(float))
        dt = 1.0 / (n * max(flux.lipschitz_bound, 1e-12))
        approx = evolve(u0, flux, args.T, dt, n_a)
        oracle = godunov_solve(u0, flux, args.T)
        gap = l1_distance(approx, oracle)
        diff = np.abs(approx.values - oracle.values) / n
        shock = float(diff[(x >= 0.55) & (x <= 0.95)].sum())
        fan = float(diff[x <= 0.5].sum())
        note = "" if prev is None else f"  (ratio {gap / prev:.3f})"
        print(f"{n:>7}{n_a:>8}{gap:>12.5f}{shock:>12.5f}{fan:>12.5f}{note}")
        prev = gap
        n *= 2
        n_a *= 2


if __name__ == "__main__":
    main()
