#!/usr/bin/env python3
"""Constraint-manifold drift study for the augmented Born-Infeld system:
residual versus resolution for smooth on-manifold data."""

import argparse

from convexpde.born_infeld import evolve, manifold_residual, profile_manifold_sine


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--amplitude", type=float, default=0.1)
    ap.add_argument("--wavenumber", type=int, default=1)
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--resolutions", nargs="+", type=int, default=[50, 100, 200, 400])
    args = ap.parse_args()

    print(f"{'cells':>7}{'manifold residual':>20}{'ratio':>8}")
    prev = None
    for n in args.resolutions:
        field = profile_manifold_sine(n, args.amplitude, args.wavenumber)
        for _t, field in evolve(field, args.T):
            pass
        res = manifold_residual(field)
        note = "" if prev is None else f"{res / prev:>8.3f}"
        print(f"{n:>7}{res:>20.6e}{note}")
        prev = res


if __name__ == "__main__":
    main()
