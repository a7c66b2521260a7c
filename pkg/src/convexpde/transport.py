"""Exact discrete optimal transport with inner-product (quadratic-type) cost.

Measures are weighted point clouds.  The solver computes a coupling that
maximizes ``sum_ij gamma_ij <x_i, y_j>`` over the transport polytope,
which is equivalent to minimizing the quadratic cost, together with the
optimal dual potentials (samples of a convex potential and its conjugate).

The LP is solved exactly by a network simplex on the bipartite
transportation graph: a big-M artificial root gives the initial spanning
tree, pricing runs over row blocks with a candidate list, and a Bland
fallback guarantees termination under degeneracy.  1D instances start
from the sorted (comonotone) matching, which is already optimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _simplex

DUPLICATE_TOL = 1e-12
MARGINAL_RTOL = 1e-9
DUAL_FEAS_ATOL = 1e-9
SLACKNESS_ATOL = 1e-8


class MassMismatch(ValueError):
    """Total masses of the two measures differ beyond tolerance."""


class DimensionMismatch(ValueError):
    """Measures live in different ambient dimensions."""


class EmptySupport(ValueError):
    """Operation requires at least one support point."""


class InfeasiblePotentials(ValueError):
    """Potential samples violate dual feasibility beyond tolerance."""


class ZeroRowMass(ValueError):
    """Barycentric map undefined for a zero-mass source atom."""


class SolverFailure(RuntimeError):
    """Network simplex failed to reach a verified optimum."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud in R^d with positive masses.

    Points closer than ``DUPLICATE_TOL`` in every coordinate are merged at
    construction (weights added) so the transport LP stays nondegenerate.
    """

    points: np.ndarray
    weights: np.ndarray
    dim: int = field(init=False)
    total_mass: float = field(init=False)
    second_moment: float = field(init=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights length mismatch")
        if pts.shape[0] == 0:
            raise EmptySupport("measure needs at least one atom")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        pts, w = _merge_duplicates(pts, w)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim", pts.shape[1])
        object.__setattr__(self, "total_mass", float(w.sum()))
        object.__setattr__(
            self, "second_moment", float(np.dot(w, np.sum(pts * pts, axis=1)))
        )

    def __len__(self):
        return self.points.shape[0]


def _merge_duplicates(pts, w):
    order = np.lexsort(pts.T[::-1])
    pts, w = pts[order].copy(), w[order].copy()
    keep = [0]
    for k in range(1, len(w)):
        if np.all(np.abs(pts[k] - pts[keep[-1]]) <= DUPLICATE_TOL):
            w[keep[-1]] += w[k]
        else:
            keep.append(k)
    kept = np.array(keep)
    back = np.argsort(order[kept], kind="stable")  # original relative order
    return pts[kept][back], w[kept][back]


@dataclass
class TransportPlan:
    """Sparse nonnegative coupling with prescribed marginals.

    Entries are stored as triplets; ``gamma`` materializes the dense
    matrix (intended for desk-scale instances only).
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("coupling entries must be nonnegative")
        res = self.marginal_residuals()
        if max(res) > MARGINAL_RTOL:
            raise ValueError(f"marginals violated: relative residuals {res}")

    @property
    def gamma(self):
        g = np.zeros((len(self.source), len(self.target)))
        g[self.rows, self.cols] = self.values
        return g

    def row_sums(self):
        out = np.zeros(len(self.source))
        np.add.at(out, self.rows, self.values)
        return out

    def col_sums(self):
        out = np.zeros(len(self.target))
        np.add.at(out, self.cols, self.values)
        return out

    def marginal_residuals(self):
        """Max relative row- and column-sum errors."""
        scale_r = np.maximum(self.source.weights, 1e-300)
        scale_c = np.maximum(self.target.weights, 1e-300)
        r = np.max(np.abs(self.row_sums() - self.source.weights) / scale_r)
        c = np.max(np.abs(self.col_sums() - self.target.weights) / scale_c)
        return float(r), float(c)

    def inner_product_value(self):
        """sum_ij gamma_ij <x_i, y_j> (the maximized objective)."""
        dots = np.sum(
            self.source.points[self.rows] * self.target.points[self.cols], axis=1
        )
        return float(np.dot(self.values, dots))

    def quadratic_cost(self):
        """sum_ij gamma_ij |x_i - y_j|^2 / 2, for reporting."""
        d = self.source.points[self.rows] - self.target.points[self.cols]
        return float(np.dot(self.values, 0.5 * np.sum(d * d, axis=1)))

    def support_pairs(self, tol=0.0):
        keep = self.values > tol
        return self.rows[keep], self.cols[keep]


@dataclass(frozen=True)
class PotentialSamples:
    """Samples phi = Psi(x_i) and psi = Psi*(y_j) of a dual-feasible pair."""

    phi: np.ndarray
    psi: np.ndarray

    def feasibility_violation(self, source: DiscreteMeasure, target: DiscreteMeasure):
        """Max of <x_i, y_j> - phi_i - psi_j over all pairs (<= 0 when feasible)."""
        phi = np.asarray(self.phi, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        worst = -np.inf
        chunk = max(1, 2_000_000 // max(len(target), 1))
        for lo in range(0, len(source), chunk):
            hi = min(lo + chunk, len(source))
            dots = source.points[lo:hi] @ target.points.T
            slack = dots - phi[lo:hi, None] - psi[None, :]
            worst = max(worst, float(slack.max()))
        return worst


# ---------------------------------------------------------------------------
# network simplex on the transportation graph
# ---------------------------------------------------------------------------


class _Basis:
    """Spanning-tree basis in flat arrays; nodes 0..n-1 sources, n..n+m-1
    targets, root n+m.  Children are a doubly linked sibling list so the
    compiled pivot kernel can rewire them in O(1)."""

    def __init__(self, n, m):
        N = n + m + 1
        self.n, self.m, self.root = n, m, n + m
        self.parent = np.full(N, -1, dtype=np.int64)
        self.depth = np.zeros(N, dtype=np.int64)
        self.flow = np.zeros(N)  # flow on arc (node, parent)
        self.first_child = np.full(N, -1, dtype=np.int64)
        self.next_sib = np.full(N, -1, dtype=np.int64)
        self.prev_sib = np.full(N, -1, dtype=np.int64)

    def link(self, v, p):
        c = self.first_child[p]
        self.next_sib[v] = c
        if c != -1:
            self.prev_sib[c] = v
        self.prev_sib[v] = -1
        self.first_child[p] = v
        self.parent[v] = p

    def attach_all_to_root(self, a, b):
        for i in range(self.n):
            self.link(i, self.root)
            self.depth[i] = 1
            self.flow[i] = a[i]
        for j in range(self.m):
            t = self.n + j
            self.link(t, self.root)
            self.depth[t] = 1
            self.flow[t] = b[j]


def _northwest_sorted_arcs(X, a, Y, b):
    """North-west corner rule on atoms sorted by first coordinate.

    Sort ties and simultaneous exhaustion both resolve by index order; in
    1D the result is the comonotone (optimal) coupling.
    """
    n, m = len(a), len(b)
    si = np.argsort(X[:, 0], kind="stable")
    sj = np.argsort(Y[:, 0], kind="stable")
    arcs = []
    ia = ja = 0
    ra, rb = a[si[0]], b[sj[0]]
    while True:
        fl = min(ra, rb)
        arcs.append((int(si[ia]), int(sj[ja]), fl))
        ra -= fl
        rb -= fl
        if ia == n - 1 and ja == m - 1:
            break
        if ra <= 0.0 and ia < n - 1:
            ia += 1
            ra = a[si[ia]]
        else:
            ja += 1
            rb = b[sj[ja]]
    return arcs


def _warm_start_sorted(tree, pi, big_m, X, a, Y, b):
    """Build the basis tree from the north-west chain; one artificial arc."""
    n = tree.n
    arcs = _northwest_sorted_arcs(X, a, Y, b)

    first_src = arcs[0][0]
    tree.link(first_src, tree.root)
    tree.depth[first_src] = 1
    tree.flow[first_src] = 0.0
    pi[first_src] = big_m  # keeps the basic artificial arc tight

    prev_j = None
    for i, j, fl in arcs:
        tn = n + j
        if j != prev_j:
            tree.link(tn, i)
            tree.depth[tn] = tree.depth[i] + 1
            tree.flow[tn] = fl
            pi[tn] = -float(np.dot(X[i], Y[j])) - pi[i]
            prev_j = j
        else:
            tree.link(i, tn)
            tree.depth[i] = tree.depth[tn] + 1
            tree.flow[i] = fl
            pi[i] = -float(np.dot(X[i], Y[j])) - pi[tn]


def _solve_transport_lp(X, a, Y, b, *, tol=None, max_pivots=None):
    """Min sum gamma_ij c_ij with c_ij = -<x_i,y_j>; triplets plus duals.

    Node potentials satisfy ``c_ij = pi[i] + pi[n+j]`` on basic arcs, so
    ``r = c - pi_i - pi_j`` prices candidate arcs.  The pivot loop runs in
    the compiled kernel from ``_simplex``.
    """
    n, m = len(a), len(b)
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    scale = 1.0 + float(
        np.linalg.norm(X, axis=1).max() * np.linalg.norm(Y, axis=1).max()
    )
    if tol is None:
        tol = 1e-11 * scale
    big_m = 10.0 * scale

    tree = _Basis(n, m)
    pi = np.full(n + m + 1, big_m)
    pi[tree.root] = 0.0
    if X.shape[1] == 1:
        _warm_start_sorted(tree, pi, big_m, X, a, Y, b)
    else:
        tree.attach_all_to_root(a, b)

    if max_pivots is None:
        max_pivots = 400 * (n + m) + 10_000

    status, pivots = _simplex._pivot_loop(
        X,
        Y,
        pi,
        tree.parent,
        tree.depth,
        tree.flow,
        tree.first_child,
        tree.next_sib,
        tree.prev_sib,
        tol,
        max_pivots,
    )
    if status != _simplex.STATUS_OPTIMAL:
        raise SolverFailure(f"pivot limit exceeded after {pivots} pivots")

    root = tree.root
    art_flow = 0.0
    for x in range(n + m):
        if tree.parent[x] == root:
            art_flow = max(art_flow, tree.flow[x])
    if art_flow > 1e-9 * max(float(a.sum()), 1.0):
        raise SolverFailure(f"artificial arc retains flow {art_flow}")

    rows, cols, vals = [], [], []
    for x in range(n + m):
        p = tree.parent[x]
        if p == root or p == -1:
            continue
        fl = tree.flow[x]
        if fl <= 0.0:
            continue
        if x < n:
            rows.append(x)
            cols.append(p - n)
        else:
            rows.append(p)
            cols.append(x - n)
        vals.append(fl)
    return (
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(vals),
        pi[:n].copy(),
        pi[n : n + m].copy(),
        pivots,
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def solve_discrete_ot(alpha: DiscreteMeasure, beta: DiscreteMeasure):
    """Solve the exact transport LP between two discrete measures.

    Returns the optimal plan (maximizing the inner-product objective) and
    dual potential samples with complementary slackness on the support.

    Raises ``MassMismatch`` / ``DimensionMismatch`` on invalid input and
    ``SolverFailure`` when the final optimality audit fails.
    """
    if alpha.dim != beta.dim:
        raise DimensionMismatch(f"dim {alpha.dim} vs {beta.dim}")
    rel = abs(alpha.total_mass - beta.total_mass) / max(alpha.total_mass, 1e-300)
    if rel > MARGINAL_RTOL:
        raise MassMismatch(f"total masses differ by relative {rel:.3e}")

    a = alpha.weights.astype(float)
    # rescale the target side so the LP is balanced to machine precision
    b = beta.weights.astype(float) * (alpha.total_mass / beta.total_mass)
    rows, cols, vals, u, v, _ = _solve_transport_lp(alpha.points, a, beta.points, b)
    plan = TransportPlan(rows, cols, vals, alpha, beta)
    pot = PotentialSamples(phi=-u, psi=-v)

    viol = pot.feasibility_violation(alpha, beta)
    if viol > DUAL_FEAS_ATOL:
        raise SolverFailure(f"dual feasibility violated by {viol:.3e}")
    value = plan.inner_product_value()
    gap = evaluate_J(pot, alpha, beta) - value
    if abs(gap) > 1e-8 * max(1.0, abs(value)):
        raise SolverFailure(f"duality gap {gap:.3e}")
    return plan, pot


def legendre_transform(points, phi, queries):
    """Pointwise conjugate max_i (<x_i, y> - phi_i) at each query y."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ph = np.asarray(phi, dtype=float).ravel()
    if pts.shape[0] == 0 or ph.shape[0] == 0:
        raise EmptySupport("conjugate of an empty sample set")
    qs = np.atleast_2d(np.asarray(queries, dtype=float))
    return np.max(qs @ pts.T - ph[None, :], axis=1)


def evaluate_J(pot: PotentialSamples, alpha: DiscreteMeasure, beta: DiscreteMeasure):
    """Primal convex functional sum w_i phi_i + sum v_j psi_j.

    Weak duality: for any dual-feasible pair this dominates the optimal
    plan's inner-product value, with equality at the optimum.
    """
    viol = pot.feasibility_violation(alpha, beta)
    if viol > DUAL_FEAS_ATOL:
        raise InfeasiblePotentials(f"dual feasibility violated by {viol:.3e}")
    return float(np.dot(alpha.weights, pot.phi) + np.dot(beta.weights, pot.psi))


def barycentric_map(plan: TransportPlan):
    """T_i = (sum_j gamma_ij y_j) / w_i, the discrete transport map."""
    w = plan.row_sums()
    if np.any(w <= 0):
        raise ZeroRowMass("source atom with zero coupled mass")
    num = np.zeros_like(plan.source.points)
    np.add.at(num, plan.rows, plan.values[:, None] * plan.target.points[plan.cols])
    return num / w[:, None]


def pushforward_residual(plan: TransportPlan, f_family, use_barycentric_map=False):
    """Max discrepancy of the pushforward identity over test functions.

    The default form compares the plan-weighted target values with the
    target marginal (zero by the marginal identity).  With
    ``use_barycentric_map`` the source side is pushed through the
    barycentric map instead, exact whenever the plan is a (weighted)
    permutation.
    """
    v = plan.target.weights
    ys = plan.target.points
    worst = 0.0
    if use_barycentric_map:
        T = barycentric_map(plan)
        w = plan.source.weights
        for f in f_family:
            lhs = float(np.dot(w, np.asarray(f(T), dtype=float)))
            rhs = float(np.dot(v, np.asarray(f(ys), dtype=float)))
            worst = max(worst, abs(lhs - rhs))
        return worst
    col = plan.col_sums()
    for f in f_family:
        fy = np.asarray(f(ys), dtype=float)
        worst = max(worst, abs(float(np.dot(col - v, fy))))
    return worst


def cyclical_monotonicity_violations(
    plan: TransportPlan, n_cycles=1000, max_len=4, rng=None, tol=1e-10
):
    """Count sampled support cycles violating cyclical monotonicity.

    For a cycle of support pairs the realized assignment must beat its
    cyclic shift: sum_m <x_m, y_m> >= sum_m <x_{m+1}, y_m>.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ri, ci = plan.support_pairs()
    if len(ri) < 2:
        return 0
    xs = plan.source.points
    ys = plan.target.points
    scale = 1.0 + float(
        np.linalg.norm(xs, axis=1).max() * np.linalg.norm(ys, axis=1).max()
    )
    violations = 0
    for _ in range(n_cycles):
        k = min(int(rng.integers(2, max_len + 1)), len(ri))
        pick = rng.choice(len(ri), size=k, replace=False)
        xi = xs[ri[pick]]
        yi = ys[ci[pick]]
        own = np.sum(xi * yi)
        shifted = np.sum(np.roll(xi, -1, axis=0) * yi)
        if own - shifted < -tol * scale:
            violations += 1
    return violations


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------


def read_measure_csv(path):
    """Measure from rows ``x1,...,xd,weight`` (header optional)."""
    raw = np.genfromtxt(path, delimiter=",", skip_header=_has_header(path))
    raw = np.atleast_2d(raw)
    if raw.shape[1] < 2:
        raise ValueError("measure CSV needs at least one coordinate and a weight")
    return DiscreteMeasure(points=raw[:, :-1], weights=raw[:, -1])


def _has_header(path):
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(tok) for tok in first.strip().split(",")]
        return 0
    except ValueError:
        return 1


def write_measure_csv(path, measure: DiscreteMeasure):
    header = ",".join(f"x{k + 1}" for k in range(measure.dim)) + ",weight"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for p, w in zip(measure.points, measure.weights):
            fh.write(",".join(f"{c:.17g}" for c in p) + f",{w:.17g}\n")


def write_plan_csv(path, plan: TransportPlan):
    with open(path, "w") as fh:
        fh.write("i,j,gamma\n")
        for i, j, g in zip(plan.rows, plan.cols, plan.values):
            fh.write(f"{i},{j},{g:.17g}\n")


def write_potentials_csv(path, pot: PotentialSamples):
    with open(path, "w") as fh:
        fh.write("side,index,value\n")
        for k, val in enumerate(pot.phi):
            fh.write(f"source,{k},{val:.17g}\n")
        for k, val in enumerate(pot.psi):
            fh.write(f"target,{k},{val:.17g}\n")
