"""Fermat-Torricelli (geometric median) solvers for small point sets in R^3.

The joint-measurability criterion for a triplet of qubit observables reduces
to the minimal total distance from four diagonal vectors to a single point,
so the rest of the package leans on an exact minimizer of

    f(p) = sum_i |x_i - p|

over a finite point set.  The objective is convex but not differentiable at
the input points themselves, and the degenerate configurations (minimizer
sitting on an input point, coincident input points) occur for physically
meaningful triplets, so they are handled exactly rather than by perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidInputError

__all__ = ["FTResult", "fermat_torricelli", "ft_oracle"]

# Input points closer than this are treated as one point with multiplicity.
MERGE_TOL = 1e-12

_MAX_ITERATIONS = 10_000
_VERTEX_SLACK = 1e-12


@dataclass(frozen=True)
class FTResult:
    """Minimizer of the total distance to a finite point set.

    point: minimizing location.
    total_distance: sum of distances from all input points to ``point``.
    at_vertex: index of the input point the minimizer coincides with, else None.
    iterations: iterative steps taken (0 when a vertex test settles the problem).
    """

    point: np.ndarray
    total_distance: float
    at_vertex: int | None
    iterations: int


def _validate_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] != 3:
        raise InvalidInputError("expected a nonempty (n, 3) array of points")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points must be finite")
    return pts


def _merge_points(pts: np.ndarray):
    """Group coincident points into distinct points with integer weights."""
    distinct: list[np.ndarray] = []
    weights: list[float] = []
    first_index: list[int] = []
    for i, p in enumerate(pts):
        for g, q in enumerate(distinct):
            if np.linalg.norm(p - q) <= MERGE_TOL:
                weights[g] += 1.0
                break
        else:
            distinct.append(p.copy())
            weights.append(1.0)
            first_index.append(i)
    return np.array(distinct), np.array(weights), first_index


def _pull(distinct: np.ndarray, weights: np.ndarray, v: np.ndarray, skip: int | None):
    """Weighted sum of unit vectors from v toward the other distinct points."""
    r = np.zeros(3)
    for i in range(len(distinct)):
        if i == skip:
            continue
        diff = distinct[i] - v
        r += weights[i] * diff / np.linalg.norm(diff)
    return r


def _near_vertex(distinct: np.ndarray, p: np.ndarray) -> int | None:
    d = np.linalg.norm(distinct - p, axis=1)
    i = int(np.argmin(d))
    return i if d[i] <= MERGE_TOL else None


def fermat_torricelli(points, tol: float = 1e-12, trace: list | None = None) -> FTResult:
    """Minimize the total distance to ``points``.

    Vertex optima are resolved exactly: input point v with multiplicity w is
    the minimizer iff the weighted resultant of unit vectors toward the other
    points has norm <= w.  Away from vertices the iteration is a monotone
    Weiszfeld scheme with a guarded Newton polish; an iterate landing on a
    non-optimal vertex is moved off along the descent direction.  Stops when
    the objective improves by less than ``tol`` per step and the gradient has
    essentially vanished (the latter keeps the position itself accurate, not
    just the objective, which downstream saturation identities rely on).

    ``trace``, when given, collects the objective value of every accepted
    iterate (used by the monotonicity checks).
    """
    pts = _validate_points(points)
    distinct, weights, first_index = _merge_points(pts)

    def f(p: np.ndarray) -> float:
        return float(np.sum(np.linalg.norm(pts - p, axis=1)))

    if len(distinct) == 1:
        v = pts[first_index[0]].copy()
        return FTResult(v, f(v), first_index[0], 0)

    # A vertex is optimal iff the pull of the remaining points does not
    # exceed its own multiplicity; this test is exact and runs first.
    for g in range(len(distinct)):
        r = _pull(distinct, weights, distinct[g], skip=g)
        if np.linalg.norm(r) <= weights[g] + _VERTEX_SLACK:
            v = pts[first_index[g]].copy()
            return FTResult(v, f(v), first_index[g], 0)

    p = np.average(distinct, axis=0, weights=weights)
    g = _near_vertex(distinct, p)
    if g is not None:
        p = _push_off_vertex(distinct, weights, g)
    fp = f(p)
    if trace is not None:
        trace.append(fp)

    iterations = 0
    for iterations in range(1, _MAX_ITERATIONS + 1):
        q = _newton_step(distinct, weights, p)
        if q is None or _near_vertex(distinct, q) is not None or f(q) >= fp:
            q = _weiszfeld_step(distinct, weights, p)
            g = _near_vertex(distinct, q)
            if g is not None:
                q = _push_off_vertex(distinct, weights, g)
        fq = f(q)
        if fq > fp:
            # Keep the iteration monotone: shrink the step toward p.
            for _ in range(60):
                q = 0.5 * (q + p)
                fq = f(q)
                if fq <= fp:
                    break
            else:
                break
        improvement = fp - fq
        p, fp = q, fq
        if trace is not None:
            trace.append(fp)
        if improvement < tol:
            break

    # Objective improvements vanish in round-off while the position is still
    # ~1e-8 off (f - f* grows quadratically in the offset), so polish the
    # stationarity condition itself: Newton steps on the gradient, accepted
    # on gradient-norm decrease.  Saturation identities downstream need the
    # point, not just the value, at full precision.
    gradient_tol = 1e-13 * np.sum(weights)
    g_now = np.linalg.norm(_pull(distinct, weights, p, skip=None))
    for _ in range(30):
        if g_now <= gradient_tol:
            break
        q = _newton_step(distinct, weights, p)
        if q is None or _near_vertex(distinct, q) is not None:
            break
        g_q = np.linalg.norm(_pull(distinct, weights, q, skip=None))
        fq = f(q)
        if g_q >= g_now or fq > fp + 1e-15 * max(1.0, abs(fp)):
            break
        p, fp, g_now = q, min(fq, fp), g_q
        iterations += 1
        if trace is not None:
            trace.append(fp)

    return FTResult(p, fp, None, iterations)


def _weiszfeld_step(distinct, weights, p):
    d = np.linalg.norm(distinct - p, axis=1)
    w = weights / d
    return w @ distinct / np.sum(w)


def _push_off_vertex(distinct, weights, g):
    """Move off a non-optimal vertex along the steepest-descent direction."""
    v = distinct[g]
    r = _pull(distinct, weights, v, skip=g)
    rn = np.linalg.norm(r)
    d = np.linalg.norm(np.delete(distinct, g, axis=0) - v, axis=1)
    w = np.delete(weights, g) / d
    t = (rn - weights[g]) / np.sum(w)
    return v + (t / rn) * r


def _newton_step(distinct, weights, p):
    diff = distinct - p
    d = np.linalg.norm(diff, axis=1)
    u = diff / d[:, None]
    grad = -np.sum(weights[:, None] * u, axis=0)
    if np.linalg.norm(grad) < 1e-15 * np.sum(weights):
        return None
    hess = np.zeros((3, 3))
    for i in range(len(distinct)):
        hess += (weights[i] / d[i]) * (np.eye(3) - np.outer(u[i], u[i]))
    try:
        step = np.linalg.solve(hess, -grad)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(step)):
        return None
    return p + step


def ft_oracle(points, grid: int = 21) -> np.ndarray:
    """Independent estimate of the Fermat-Torricelli point.

    Coarse grid search over the (padded) bounding box, derivative-free local
    refinement from the best cell, with the input points themselves kept as
    candidates so vertex optima are represented exactly.  Intended for
    cross-checks, not production use.
    """
    pts = _validate_points(points)

    def f(p: np.ndarray) -> float:
        return float(np.sum(np.linalg.norm(pts - p, axis=1)))

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = 0.05 * (hi - lo) + 1e-9
    axes = [np.linspace(lo[k] - pad[k], hi[k] + pad[k], grid) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    cells = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    totals = np.sum(
        np.linalg.norm(cells[:, None, :] - pts[None, :, :], axis=2), axis=1
    )
    start = cells[int(np.argmin(totals))]

    res = minimize(
        f,
        start,
        method="Nelder-Mead",
        options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 5000, "maxfev": 5000},
    )
    candidates = [np.asarray(res.x)] + [pts[i] for i in range(len(pts))]
    values = [f(c) for c in candidates]
    return candidates[int(np.argmin(values))].copy()
