"""Pressure maximization for incompressible flow on a convex domain.

For a smooth flow with pressure p on a short time interval, p maximizes
the concave functional

    q  ->  integral of q dt dx  +  integral of J_q[start, end] dx,

where J_q is the minimal path action with Lagrangian |z'|^2/2 - q(t, z)
between the flow endpoints.  This module provides the pieces: pressure
fields on a space-time grid, batched minimal-action paths over
piecewise-linear curves (projected Barzilai-Borwein descent with a
dynamic-programming seed), the time-interval smallness check, and the
analytic rigid-rotation flow used as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ZERO_MEAN_TOL = 1e-12
PLASTIC = 1.3247179572447458  # real root of x^3 = x + 1


class NonConvergence(RuntimeError):
    """Path descent failed to reach the gradient tolerance.

    Carries the best feasible action value achieved (an upper bound of
    the infimum) in ``achieved_value``.
    """

    def __init__(self, message, achieved_value):
        super().__init__(f"{message} (achieved value {achieved_value:.6e})")
        self.achieved_value = achieved_value


@dataclass(frozen=True)
class ConvexDomain:
    """Unit disk or unit box, with containment and projection maps."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("disk", "box"):
            raise ValueError("domain kind must be 'disk' or 'box'")

    @property
    def bounds(self):
        if self.kind == "disk":
            return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        return np.array([0.0, 0.0]), np.array([1.0, 1.0])

    @property
    def area(self):
        return math.pi if self.kind == "disk" else 1.0

    def contains(self, pts, tol=1e-12):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disk":
            return np.sum(pts * pts, axis=-1) <= 1.0 + tol
        lo, hi = self.bounds
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=-1)

    def project(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.kind == "disk":
            norms = np.sqrt(np.sum(pts * pts, axis=-1, keepdims=True))
            scale = np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)
            return pts * scale
        lo, hi = self.bounds
        return np.clip(pts, lo, hi)

    def sample_points(self, n):
        """Deterministic low-discrepancy points inside the domain with
        equal weights summing to the area."""
        lo, hi = self.bounds
        g1, g2 = 1.0 / PLASTIC, 1.0 / PLASTIC**2
        pts = []
        k = 1
        while len(pts) < n:
            u = (0.5 + k * g1) % 1.0
            v = (0.5 + k * g2) % 1.0
            p = lo + np.array([u, v]) * (hi - lo)
            if self.contains(p[None])[0]:
                pts.append(p)
            k += 1
        pts = np.array(pts)
        weights = np.full(n, self.area / n)
        return pts, weights

    def grid_axes(self, n_nodes):
        lo, hi = self.bounds
        return (
            np.linspace(lo[0], hi[0], n_nodes),
            np.linspace(lo[1], hi[1], n_nodes),
        )


@dataclass(frozen=True)
class ParticleEndpoints:
    """Quadrature samples (start, end) of the flow maps at t0 and t1."""

    starts: np.ndarray
    ends: np.ndarray
    weights: np.ndarray
    domain: ConvexDomain

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.starts, dtype=float))
        e = np.atleast_2d(np.asarray(self.ends, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (len(s) == len(e) == len(w)):
            raise ValueError("starts, ends, weights must have equal length")
        if not np.all(self.domain.contains(s)) or not np.all(self.domain.contains(e)):
            raise ValueError("endpoint samples must lie inside the domain")
        object.__setattr__(self, "starts", s)
        object.__setattr__(self, "ends", e)
        object.__setattr__(self, "weights", w)


class PressureField:
    """Scalar field q(t, x) on time nodes x a node-centered spatial grid.

    The spatial mean over the domain is removed from every time slice at
    construction (the functional is invariant under adding spatial
    constants, so this fixes the gauge).
    """

    def __init__(self, domain: ConvexDomain, values, t0, t1):
        self.domain = domain
        self.t0 = float(t0)
        self.t1 = float(t1)
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise ValueError("values must be (n_times, n, n)")
        if self.t1 <= self.t0:
            raise ValueError("need t1 > t0")
        n = vals.shape[1]
        xs, ys = domain.grid_axes(n)
        self.xs, self.ys = xs, ys
        nodes = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
        self.inside_mask = domain.contains(nodes).reshape(n, n)
        means = vals[:, self.inside_mask].mean(axis=1)
        self.values = vals - means[:, None, None]
        self.times = np.linspace(self.t0, self.t1, vals.shape[0])
        self._grads = None

    @classmethod
    def from_function(cls, domain, fn, t0, t1, *, n_nodes=64, n_times=9):
        """Sample q(t, x, y) on the grid; ``fn(t, X, Y)`` vectorized in X, Y."""
        xs, ys = domain.grid_axes(n_nodes)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        times = np.linspace(t0, t1, n_times)
        vals = np.stack([np.asarray(fn(t, X, Y), dtype=float) for t in times])
        return cls(domain, vals, t0, t1)

    def spatial_mean_abs_max(self):
        return float(np.abs(self.values[:, self.inside_mask].mean(axis=1)).max())

    def perturbed(self, delta):
        """New field with `delta` added (and the zero mean re-enforced)."""
        delta = np.asarray(delta, dtype=float)
        if delta.shape != self.values.shape:
            raise ValueError("perturbation shape mismatch")
        return PressureField(self.domain, self.values + delta, self.t0, self.t1)

    def _gradients(self):
        if self._grads is None:
            gx = np.gradient(self.values, self.xs, axis=1, edge_order=2)
            gy = np.gradient(self.values, self.ys, axis=2, edge_order=2)
            self._grads = (gx, gy)
        return self._grads

    def _time_bracket(self, t):
        nt = len(self.times)
        if nt == 1:
            return np.zeros_like(t, dtype=np.int64), np.zeros_like(t)
        s = (np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0) * (nt - 1)
        k = np.clip(np.floor(s).astype(np.int64), 0, nt - 2)
        return k, s - k

    def _interp_slice(self, arr, pts):
        """Bilinear interpolation of one (n, n) slice at pts (..., 2)."""
        n = arr.shape[0]
        lo, hi = self.domain.bounds
        hx = (hi[0] - lo[0]) / (n - 1)
        hy = (hi[1] - lo[1]) / (n - 1)
        fx = np.clip((pts[..., 0] - lo[0]) / hx, 0.0, n - 1 - 1e-12)
        fy = np.clip((pts[..., 1] - lo[1]) / hy, 0.0, n - 1 - 1e-12)
        ix = fx.astype(np.int64)
        iy = fy.astype(np.int64)
        ax = fx - ix
        ay = fy - iy
        v00 = arr[ix, iy]
        v10 = arr[ix + 1, iy]
        v01 = arr[ix, iy + 1]
        v11 = arr[ix + 1, iy + 1]
        return (
            (1 - ax) * (1 - ay) * v00
            + ax * (1 - ay) * v10
            + (1 - ax) * ay * v01
            + ax * ay * v11
        )

    def eval(self, t, pts):
        """q(t, pts) for scalar t and pts of shape (..., 2)."""
        pts = np.asarray(pts, dtype=float)
        k, frac = self._time_bracket(np.atleast_1d(float(t)))
        kk, ff = int(k[0]), float(frac[0])
        val = self._interp_slice(self.values[kk], pts)
        if ff > 0.0:
            val = (1 - ff) * val + ff * self._interp_slice(self.values[kk + 1], pts)
        return val

    def _bilinear_weights(self, pts):
        """Corner indices and weights for pts (..., 2) on the node grid."""
        n = len(self.xs)
        lo, hi = self.domain.bounds
        hx = (hi[0] - lo[0]) / (n - 1)
        hy = (hi[1] - lo[1]) / (n - 1)
        fx = np.clip((pts[..., 0] - lo[0]) / hx, 0.0, n - 1 - 1e-12)
        fy = np.clip((pts[..., 1] - lo[1]) / hy, 0.0, n - 1 - 1e-12)
        ix = fx.astype(np.int64)
        iy = fy.astype(np.int64)
        return n, ix, iy, fx - ix, fy - iy

    def _interp_batch(self, arr3, k, frac, pts):
        """Space-time interpolation of a (n_t, n, n) array at tmids x pts.

        ``k``/``frac`` have shape (n_seg,), ``pts`` (P, n_seg, 2); one flat
        gather per corner and time level.
        """
        n, ix, iy, ax, ay = self._bilinear_weights(pts)
        flat = arr3.reshape(arr3.shape[0], -1)
        kb = np.broadcast_to(k[None, :], ix.shape)
        idx = ix * n + iy
        fr = frac[None, :]

        def corner(didx):
            lo_val = flat[kb, idx + didx]
            hi_val = flat[kb + 1, idx + didx] if arr3.shape[0] > 1 else lo_val
            return (1.0 - fr) * lo_val + fr * hi_val

        v00 = corner(0)
        v10 = corner(n)
        v01 = corner(1)
        v11 = corner(n + 1)
        return (
            (1 - ax) * (1 - ay) * v00
            + ax * (1 - ay) * v10
            + (1 - ax) * ay * v01
            + ax * ay * v11
        )

    def eval_paths(self, tmids, mids):
        """q at segment midpoints: tmids (n_seg,), mids (P, n_seg, 2)."""
        k, frac = self._time_bracket(tmids)
        if len(self.times) == 1:
            frac = np.zeros_like(frac)
        return self._interp_batch(self.values, k, frac, mids)

    def grad_paths(self, tmids, mids):
        """grad q at segment midpoints: (P, n_seg, 2)."""
        gx, gy = self._gradients()
        k, frac = self._time_bracket(tmids)
        if len(self.times) == 1:
            frac = np.zeros_like(frac)
        out = np.empty(mids.shape)
        out[..., 0] = self._interp_batch(gx, k, frac, mids)
        out[..., 1] = self._interp_batch(gy, k, frac, mids)
        return out


# ---------------------------------------------------------------------------
# minimal path actions
# ---------------------------------------------------------------------------


def _action_and_grad(q: PressureField, z, dtau):
    """Midpoint-rule action of piecewise-linear paths and its gradient with
    respect to interior nodes.  z has shape (P, n_seg+1, 2)."""
    seg = z[:, 1:, :] - z[:, :-1, :]
    mids = 0.5 * (z[:, 1:, :] + z[:, :-1, :])
    n_seg = seg.shape[1]
    tmids = q.t0 + (np.arange(n_seg) + 0.5) * dtau
    qv = q.eval_paths(tmids, mids)
    actions = np.sum(seg * seg, axis=2).sum(axis=1) / (2.0 * dtau) - dtau * qv.sum(
        axis=1
    )
    gq = q.grad_paths(tmids, mids)
    grad = (2.0 * z[:, 1:-1, :] - z[:, 2:, :] - z[:, :-2, :]) / dtau - 0.5 * dtau * (
        gq[:, :-1, :] + gq[:, 1:, :]
    )
    return actions, grad


def _straight_paths(starts, ends, n_seg):
    lam = np.linspace(0.0, 1.0, n_seg + 1)[None, :, None]
    return starts[:, None, :] * (1.0 - lam) + ends[:, None, :] * lam


def _minimize_actions(
    q: PressureField,
    starts,
    ends,
    n_seg,
    *,
    seeds=None,
    max_iter=1500,
    gtol=1e-8,
):
    """Projected Barzilai-Borwein descent, batched over endpoint pairs.

    Convergence is measured by the projected-gradient residual at the
    fixed reference step dtau.  A safeguard resets runaway BB steps (the
    iteration is intentionally non-monotone; the returned value is the
    best feasible action visited, an upper bound of the infimum).
    Returns (best actions, final projected-gradient norms).
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    P = len(starts)
    dtau = (q.t1 - q.t0) / n_seg
    dom = q.domain

    z = _straight_paths(starts, ends, n_seg) if seeds is None else seeds.copy()
    if n_seg < 2:
        acts, _ = _action_and_grad(q, z, dtau)
        return acts, np.zeros(P)

    acts, grad = _action_and_grad(q, z, dtau)
    best = acts.copy()
    best_z = z.copy()
    alpha = np.full(P, dtau)
    pg_norm = np.full(P, np.inf)
    for it in range(max_iter):
        ref = z.copy()
        ref[:, 1:-1, :] = dom.project(z[:, 1:-1, :] - dtau * grad)
        pg = (z[:, 1:-1, :] - ref[:, 1:-1, :]) / dtau
        pg_norm = np.sqrt(np.sum(pg * pg, axis=(1, 2)))
        if np.all(pg_norm <= gtol):
            break
        z_prev, g_prev = z, grad
        z = z.copy()
        z[:, 1:-1, :] = dom.project(z[:, 1:-1, :] - alpha[:, None, None] * grad)
        acts, grad = _action_and_grad(q, z, dtau)
        improved = acts < best
        best = np.where(improved, acts, best)
        best_z[improved] = z[improved]
        # runaway safeguard: restart diverging paths from their best point
        runaway = acts > best + 10.0 * (np.abs(best) + 1.0)
        if np.any(runaway):
            z[runaway] = best_z[runaway]
            acts2, grad2 = _action_and_grad(q, z[runaway], dtau)
            acts[runaway] = acts2
            grad[runaway] = grad2
            alpha[runaway] = dtau
        s = (z - z_prev)[:, 1:-1, :]
        y = grad - g_prev
        sy = np.sum(s * y, axis=(1, 2))
        ss = np.sum(s * s, axis=(1, 2))
        alpha = np.where(sy > 1e-300, ss / np.maximum(sy, 1e-300), dtau)
        alpha = np.clip(alpha, 1e-3 * dtau, 1e3 * dtau)
    return best, pg_norm


def _dp_seed(q: PressureField, x, y, n_seg, *, n_grid=25):
    """Coarse dynamic-programming path from x to y (global search on a grid)."""
    dom = q.domain
    xs = np.linspace(dom.bounds[0][0], dom.bounds[1][0], n_grid)
    ys = np.linspace(dom.bounds[0][1], dom.bounds[1][1], n_grid)
    nodes = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
    nodes = nodes[dom.contains(nodes)]
    dtau = (q.t1 - q.t0) / n_seg

    def leg_cost(a, b, s):
        # a: (na, 2), b: (nb, 2) -> (na, nb)
        mid = 0.5 * (a[:, None, :] + b[None, :, :])
        tm = np.full(1, q.t0 + (s + 0.5) * dtau)
        qv = q.eval_paths(tm, mid.reshape(-1, 1, 2)).reshape(len(a), len(b))
        d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
        return d2 / (2.0 * dtau) - dtau * qv

    V = leg_cost(nodes, np.asarray(y, dtype=float)[None, :], n_seg - 1)[:, 0]
    argnext = [None] * (n_seg - 1)
    for s in range(n_seg - 2, 0, -1):
        C = leg_cost(nodes, nodes, s) + V[None, :]
        argnext[s] = np.argmin(C, axis=1)
        V = C[np.arange(len(nodes)), argnext[s]]
    C0 = leg_cost(np.asarray(x, dtype=float)[None, :], nodes, 0)[0] + V
    first = int(np.argmin(C0))
    path = [np.asarray(x, dtype=float), nodes[first]]
    cur = first
    for s in range(1, n_seg - 1):
        cur = int(argnext[s][cur])
        path.append(nodes[cur])
    path.append(np.asarray(y, dtype=float))
    return np.array(path)[None, :, :]


def path_action_min(q: PressureField, x, y, n_seg, *, gtol=1e-8, max_iter=600):
    """Minimal discretized action over piecewise-linear paths from x to y.

    Restarts from the straight line and from a coarse dynamic-programming
    seed; raises ``NonConvergence`` (with the best value achieved) when
    neither descent reaches the gradient tolerance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (q.domain.contains(x[None])[0] and q.domain.contains(y[None])[0]):
        raise ValueError("endpoints must lie in the domain")
    if n_seg < 2:
        raise ValueError("need at least two segments")
    vals, pg = _minimize_actions(
        q, x[None], y[None], n_seg, max_iter=max_iter, gtol=gtol
    )
    candidates = [(vals[0], pg[0])]
    seed = _dp_seed(q, x, y, n_seg)
    vals2, pg2 = _minimize_actions(
        q, x[None], y[None], n_seg, seeds=seed, max_iter=max_iter, gtol=gtol
    )
    candidates.append((vals2[0], pg2[0]))
    best = min(v for v, _ in candidates)
    if not any(g <= gtol for _, g in candidates):
        raise NonConvergence("path descent did not converge", best)
    return float(best)


def functional_value(
    q: PressureField, endpoints: ParticleEndpoints, *, n_seg=16, gtol=1e-8,
    max_iter=600,
):
    """Space-time integral of q plus the weighted minimal path actions.

    The first term vanishes up to rounding because fields are stored with
    zero spatial mean; it is still computed and included.
    """
    if q.spatial_mean_abs_max() > ZERO_MEAN_TOL:
        raise ValueError("pressure field lost its zero spatial mean")
    means = q.values[:, q.inside_mask].mean(axis=1) * q.domain.area
    q_term = float(np.trapezoid(means, q.times))

    vals, pg = _minimize_actions(
        q, endpoints.starts, endpoints.ends, n_seg, gtol=gtol, max_iter=max_iter
    )
    stubborn = np.flatnonzero(pg > gtol)
    for idx in stubborn:
        seed = _dp_seed(q, endpoints.starts[idx], endpoints.ends[idx], n_seg)
        v2, g2 = _minimize_actions(
            q,
            endpoints.starts[idx][None],
            endpoints.ends[idx][None],
            n_seg,
            seeds=seed,
            gtol=gtol,
            max_iter=max_iter,
        )
        vals[idx] = min(vals[idx], v2[0])
        if g2[0] > gtol and pg[idx] > gtol:
            raise NonConvergence(
                f"endpoint pair {idx} did not converge", float(vals[idx])
            )
    return q_term + float(np.dot(endpoints.weights, vals))


# ---------------------------------------------------------------------------
# smallness condition and the rotation ground truth
# ---------------------------------------------------------------------------


def smallness_check(p: PressureField):
    """(t1-t0)^2 * max eig of the spatial Hessian <= pi^2, checked with
    central second differences over interior nodes inside the domain."""
    n = p.values.shape[1]
    hx = (p.xs[-1] - p.xs[0]) / (n - 1)
    hy = (p.ys[-1] - p.ys[0]) / (n - 1)
    v = p.values
    hxx = (v[:, 2:, 1:-1] - 2 * v[:, 1:-1, 1:-1] + v[:, :-2, 1:-1]) / hx**2
    hyy = (v[:, 1:-1, 2:] - 2 * v[:, 1:-1, 1:-1] + v[:, 1:-1, :-2]) / hy**2
    hxy = (
        v[:, 2:, 2:] - v[:, 2:, :-2] - v[:, :-2, 2:] + v[:, :-2, :-2]
    ) / (4.0 * hx * hy)
    lam = 0.5 * (hxx + hyy) + np.sqrt(0.25 * (hxx - hyy) ** 2 + hxy**2)
    mask = p.inside_mask[1:-1, 1:-1]
    lam_max = float(lam[:, mask].max())
    margin = math.pi**2 - (p.t1 - p.t0) ** 2 * lam_max
    return margin >= 0.0, margin


def rotation_matrix(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rigid_rotation_solution(
    omega, t0, t1, *, n_nodes=64, n_times=9, n_samples=200
):
    """Rigid rotation of the unit disk and its pressure omega^2 |x|^2 / 2
    (zero-meaned); returns (endpoints, pressure)."""
    dom = ConvexDomain("disk")
    starts, weights = dom.sample_points(n_samples)
    ends = starts @ rotation_matrix(omega * (t1 - t0)).T
    endpoints = ParticleEndpoints(starts=starts, ends=ends, weights=weights, domain=dom)
    pressure = PressureField.from_function(
        dom,
        lambda t, X, Y: 0.5 * omega**2 * (X**2 + Y**2),
        t0,
        t1,
        n_nodes=n_nodes,
        n_times=n_times,
    )
    return endpoints, pressure


def rotation_euler_residual(omega, p: PressureField, *, n_samples=100, n_steps=100):
    """Max |d^2 g / dt^2 + grad p| along rotation trajectories, with the
    acceleration from central time differences and grad p interpolated
    from the grid; O(dt^2 + dx^2) for the analytic pair."""
    dom = p.domain
    pts, _ = dom.sample_points(n_samples)
    times = np.linspace(p.t0, p.t1, n_steps + 1)
    dt = times[1] - times[0]
    traj = np.stack(
        [pts @ rotation_matrix(omega * (t - p.t0)).T for t in times]
    )  # (n_steps+1, n_samples, 2)
    acc = (traj[2:] - 2 * traj[1:-1] + traj[:-2]) / dt**2
    worst = 0.0
    for k in range(1, n_steps):
        g = p.grad_paths(
            np.array([times[k]]), traj[k][:, None, :]
        )[:, 0, :]
        res = acc[k - 1] + g
        worst = max(worst, float(np.sqrt(np.sum(res * res, axis=1)).max()))
    return worst


# ---------------------------------------------------------------------------
# maximizer margin
# ---------------------------------------------------------------------------


@dataclass
class MaximizerReport:
    margin: float
    eps_disc: float
    value_at_p: float
    perturbed_values: list
    n_seg: int


def maximizer_margin(
    p: PressureField,
    perturbations,
    endpoints: ParticleEndpoints,
    *,
    n_seg=16,
    gtol=1e-8,
    max_iter=600,
):
    """min over perturbations of F(p) - F(p + delta), with the reported
    discretization tolerance eps_disc (path-refinement delta of F(p) plus
    a solver floor).  Requires the smallness check to pass."""
    ok, margin_small = smallness_check(p)
    if not ok:
        raise ValueError(
            f"smallness condition fails (margin {margin_small:.3e}); "
            "the maximization principle is not applicable"
        )
    f_p = functional_value(p, endpoints, n_seg=n_seg, gtol=gtol, max_iter=max_iter)
    f_p_fine = functional_value(
        p, endpoints, n_seg=2 * n_seg, gtol=gtol, max_iter=max_iter
    )
    eps_disc = abs(f_p - f_p_fine) + 1e-6
    values = []
    for delta in perturbations:
        q = p.perturbed(delta)
        values.append(
            functional_value(q, endpoints, n_seg=n_seg, gtol=gtol, max_iter=max_iter)
        )
    margin = min((f_p - v for v in values), default=0.0)
    return MaximizerReport(
        margin=float(margin),
        eps_disc=float(eps_disc),
        value_at_p=float(f_p),
        perturbed_values=values,
        n_seg=n_seg,
    )


def random_zero_mean_perturbations(
    p: PressureField, n_fields, amplitude, rng
):
    """Smooth zero-mean perturbation arrays matching the field's grid:
    a few low Fourier modes in space with a mild time modulation, scaled
    to the requested max amplitude."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    lo, hi = p.domain.bounds
    X, Y = np.meshgrid(p.xs, p.ys, indexing="ij")
    U = (X - lo[0]) / (hi[0] - lo[0])
    V = (Y - lo[1]) / (hi[1] - lo[1])
    out = []
    for _ in range(n_fields):
        f = np.zeros_like(X)
        for _m in range(3):
            kx, ky = rng.integers(1, 4, size=2)
            a, b = rng.normal(size=2)
            f += a * np.sin(2 * np.pi * (kx * U + ky * V)) + b * np.cos(
                2 * np.pi * (kx * U - ky * V)
            )
        phase = rng.uniform(0.0, 2.0 * np.pi)
        mod = 1.0 + 0.3 * np.sin(
            np.pi * (p.times - p.t0) / (p.t1 - p.t0) + phase
        )
        field3 = mod[:, None, None] * f[None, :, :]
        field3 *= amplitude / max(np.abs(field3).max(), 1e-300)
        out.append(field3)
    return out
