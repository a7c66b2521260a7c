"""Flux laws for scalar conservation laws with states in [0, 1].

A flux law carries the flux, its derivative (the characteristic speed), a
Lipschitz bound and the interior stationary points of the flux, which make
the exact Godunov interface flux a finite min/max over candidates.  That
form is valid for any continuous piecewise-monotone flux, convex or not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FluxLaw:
    name: str
    flux: Callable
    speed: Callable  # derivative of flux
    lipschitz_bound: float
    stationary_points: tuple = ()

    def riemann_flux(self, ul, ur):
        """Exact Godunov flux: min of the flux over [ul, ur] when ul <= ur,
        max over [ur, ul] otherwise."""
        ul = np.asarray(ul, dtype=float)
        ur = np.asarray(ur, dtype=float)
        lo = np.minimum(ul, ur)
        hi = np.maximum(ul, ur)
        fl = self.flux(ul)
        fr = self.flux(ur)
        fmin = np.minimum(fl, fr)
        fmax = np.maximum(fl, fr)
        for s in self.stationary_points:
            inside = (lo <= s) & (s <= hi)
            fs = self.flux(np.asarray(s, dtype=float))
            fmin = np.where(inside, np.minimum(fmin, fs), fmin)
            fmax = np.where(inside, np.maximum(fmax, fs), fmax)
        return np.where(ul <= ur, fmin, fmax)

    def speeds(self, levels):
        """Characteristic speeds at the level samples; enforces the
        declared Lipschitz bound."""
        out = np.asarray(self.speed(np.asarray(levels, dtype=float)), dtype=float)
        worst = float(np.max(np.abs(out)))
        if worst > self.lipschitz_bound * (1.0 + 1e-12):
            raise ValueError(
                f"flux {self.name!r}: sampled speed {worst:.6g} exceeds the "
                f"declared bound {self.lipschitz_bound:.6g}"
            )
        return out


def burgers():
    return FluxLaw(
        name="burgers",
        flux=lambda u: 0.5 * u * u,
        speed=lambda u: u,
        lipschitz_bound=1.0,
        stationary_points=(0.0,),
    )


def linear(c):
    c = float(c)
    return FluxLaw(
        name=f"linear {c:g}",
        flux=lambda u: c * u,
        speed=lambda u: np.full_like(np.asarray(u, dtype=float), c),
        lipschitz_bound=abs(c),
    )


def concave_convex(a3, a2, a1):
    """Cubic flux a3 u^3 + a2 u^2 + a1 u (inflection inside [0,1] for the
    usual parameter choices)."""
    a3, a2, a1 = float(a3), float(a2), float(a1)

    def f(u):
        return ((a3 * u + a2) * u + a1) * u

    def df(u):
        return (3.0 * a3 * u + 2.0 * a2) * u + a1

    stationary = []
    if a3 != 0.0:
        disc = 4.0 * a2 * a2 - 12.0 * a3 * a1
        if disc >= 0.0:
            rt = np.sqrt(disc)
            for root in ((-2.0 * a2 - rt) / (6.0 * a3), (-2.0 * a2 + rt) / (6.0 * a3)):
                if 0.0 < root < 1.0:
                    stationary.append(float(root))
    elif a2 != 0.0:
        root = -a1 / (2.0 * a2)
        if 0.0 < root < 1.0:
            stationary.append(float(root))

    # max |F'| on [0,1]: endpoints plus the vertex of the quadratic F'
    probes = [0.0, 1.0]
    if a3 != 0.0:
        vertex = -a2 / (3.0 * a3)
        if 0.0 < vertex < 1.0:
            probes.append(vertex)
    lip = max(abs(df(p)) for p in probes)
    return FluxLaw(
        name=f"concave-convex {a3:g} {a2:g} {a1:g}",
        flux=f,
        speed=df,
        lipschitz_bound=lip,
        stationary_points=tuple(sorted(stationary)),
    )


def flux_from_spec(text):
    """Named fluxes: ``burgers``, ``linear c``, ``concave-convex a3 a2 a1``."""
    toks = text.split()
    if toks[0] == "burgers":
        return burgers()
    if toks[0] == "linear":
        if len(toks) != 2:
            raise ValueError("linear flux needs a speed")
        return linear(float(toks[1]))
    if toks[0] == "concave-convex":
        if len(toks) != 4:
            raise ValueError("concave-convex flux needs three coefficients")
        return concave_convex(*map(float, toks[1:]))
    raise ValueError(f"unknown flux {toks[0]!r}")
