"""Godunov finite-volume reference solver and entropy instruments.

The scheme uses the exact Riemann interface flux (min/max form, valid for
any continuous flux on [0,1]) and is monotone under the CFL condition,
hence an entropy-consistent oracle for the lifted solver.  The entropy
residual instrument checks the discrete Kruzhkov inequality cellwise with
the interface entropy flux G(u max k) - G(u min k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fluxes import FluxLaw
from .lifted import CellAverages, _axis_fluxes


class CFLViolation(ValueError):
    """Time step exceeds cell_width / lipschitz_bound."""


class GridMismatch(ValueError):
    """Operands live on different grids."""


@dataclass
class FiniteVolumeState:
    """Cell averages with the current time and Courant number."""

    u: CellAverages
    t: float
    cfl: float

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise CFLViolation(f"courant number {self.cfl} outside (0, 1]")


def _sweep(values, flux, dt, axis):
    """One conservative Godunov sweep along an axis (periodic)."""
    n = values.shape[axis]
    h = 1.0 / n
    u = np.moveaxis(values, axis, 0)
    right = np.roll(u, -1, axis=0)
    G = flux.riemann_flux(u, right)  # interface j+1/2
    out = u - (dt / h) * (G - np.roll(G, 1, axis=0))
    return np.moveaxis(out, 0, axis)


def godunov_step(u: CellAverages, flux, dt):
    """One step; multi-d via dimensional (Godunov) splitting."""
    fluxes = _axis_fluxes(flux, u.dim)
    vals = u.values
    for ax, fl in enumerate(fluxes):
        h = 1.0 / vals.shape[ax]
        if dt * fl.lipschitz_bound > h * (1.0 + 1e-12):
            raise CFLViolation(
                f"dt*L = {dt * fl.lipschitz_bound:.3e} exceeds cell width {h:.3e}"
            )
        vals = _sweep(vals, fl, dt, ax)
    return CellAverages(vals)


def godunov_states(u0: CellAverages, flux, T, *, cfl=0.9):
    """Yield (t, CellAverages) with automatic uniform steps at the given
    Courant number; the last step lands on T exactly."""
    fluxes = _axis_fluxes(flux, u0.dim)
    hmin = min(1.0 / s for s in u0.values.shape)
    L = max(fl.lipschitz_bound for fl in fluxes)
    if L == 0.0:
        n_steps = 1
    else:
        n_steps = max(1, math.ceil(T * L / (cfl * hmin) - 1e-12))
    step = T / n_steps
    state = FiniteVolumeState(u=u0, t=0.0, cfl=cfl)
    yield state.t, state.u
    for k in range(n_steps):
        state = FiniteVolumeState(
            u=godunov_step(state.u, flux, step), t=(k + 1) * step, cfl=cfl
        )
        yield state.t, state.u


def godunov_solve(u0: CellAverages, flux, T, *, cfl=0.9):
    """Entropy solution oracle at time T (first-order monotone scheme)."""
    out = u0
    for _t, out in godunov_states(u0, flux, T, cfl=cfl):
        pass
    return out


def l1_distance(u: CellAverages, v: CellAverages):
    if u.values.shape != v.values.shape:
        raise GridMismatch(f"shapes {u.values.shape} vs {v.values.shape}")
    return float(np.sum(np.abs(u.values - v.values)) * u.cell_volume)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly spaced snapshots of a 1D solution, for the entropy
    instrument."""

    states: np.ndarray  # (n_snapshots, n_cells)
    dt: float
    flux: FluxLaw

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "states", arr)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise ValueError("need at least two 1D snapshots")


def entropy_residual(trajectory: Trajectory, k):
    """Max positive violation of the discrete Kruzhkov inequality.

    With U(v) = |v - k| and the interface entropy flux
    Zhat(a,b) = G(a max k, b max k) - G(a min k, b min k), monotone-scheme
    trajectories satisfy the inequality exactly (up to rounding); a
    genuine entropy violation shows up at O(1/cell_width).
    """
    u = trajectory.states
    dt = trajectory.dt
    flux = trajectory.flux
    n = u.shape[1]
    h = 1.0 / n
    k = float(k)

    U = np.abs(u - k)
    up = np.maximum(u, k)
    dn = np.minimum(u, k)
    # interface flux j+1/2 built from the earlier snapshot of each pair
    z = flux.riemann_flux(up[:-1], np.roll(up[:-1], -1, axis=1)) - flux.riemann_flux(
        dn[:-1], np.roll(dn[:-1], -1, axis=1)
    )
    residual = (U[1:] - U[:-1]) / dt + (z - np.roll(z, 1, axis=1)) / h
    return max(0.0, float(residual.max()))


def expansion_shock_trajectory(n_cells, T, n_snapshots, *, x_jump=0.5):
    """Hand-built inadmissible weak solution of Burgers: a 0 to 1 jump
    translating at the Rankine-Hugoniot speed 1/2 (where the entropy
    solution is a rarefaction).  Used to verify the instrument rejects it."""
    from .fluxes import burgers

    x = (np.arange(n_cells) + 0.5) / n_cells
    times = np.linspace(0.0, T, n_snapshots)
    states = np.stack([(x >= (x_jump + 0.5 * t) % 1.0).astype(float) for t in times])
    return Trajectory(states=states, dt=float(times[1] - times[0]), flux=burgers())
