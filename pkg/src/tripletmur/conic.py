"""Primal-dual interior-point solver for second-order cone programs.

Solves the conic pair

    minimize    c'x                 maximize    -b'y - h'z
    subject to  Ax = b              subject to  A'y + G'z + c = 0
                Gx + s = h,                     z in K
                s in K

where K is a product of second-order cones { (u0, u1) : u0 >= |u1| };
a one-dimensional block is the nonnegative half-line.  The implementation
is a standard Nesterov-Todd scaled path-following method with a Mehrotra
predictor-corrector step, dense linear algebra, and iterative refinement
of the KKT solves.  Problems in this package have at most a few dozen
variables, so no sparsity is exploited.

The exact-value computations downstream require certified small duality
gaps (1e-9 and below); the solver therefore reports its final residuals
rather than clipping or hiding them.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import InvalidInputError

__all__ = ["SolveStatus", "ConicSolution", "solve_cone_lp", "max_step"]

_STEP_BACKOFF = 0.99
_MAX_REFINEMENTS = 2
# Consecutive feasible iterations without gap progress before giving up;
# degenerate optima (whole cone blocks at the tip) close the gap by less
# than a percent per step near the floor, so this is deliberately patient.
_STALL_LIMIT = 12


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max-iterations"
    INFEASIBLE_INPUT = "infeasible-input"


@dataclass
class ConicSolution:
    """Terminal iterate of the interior-point method with its residuals."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    z: np.ndarray
    status: SolveStatus
    iterations: int
    gap: float
    primal_residual: float
    dual_residual: float
    primal_objective: float
    dual_objective: float


def _cone_slices(dims):
    slices = []
    start = 0
    for d in dims:
        if d < 1:
            raise InvalidInputError("cone dimensions must be positive")
        slices.append(slice(start, start + d))
        start += d
    return slices, start


def _cone_e(dims, total):
    e = np.zeros(total)
    start = 0
    for d in dims:
        e[start] = 1.0
        start += d
    return e


def _jdot(u):
    """J-inner product u0^2 - |u1|^2 (the cone determinant)."""
    return u[0] * u[0] - float(u[1:] @ u[1:])


def _jordan_product(u, v):
    out = np.empty_like(u)
    out[0] = float(u @ v)
    out[1:] = u[0] * v[1:] + v[0] * u[1:]
    return out


def _jordan_solve(u, v):
    """Solve u o x = v for x (arrow-matrix inverse applied to v)."""
    det = _jdot(u)
    x0 = (u[0] * v[0] - float(u[1:] @ v[1:])) / det
    out = np.empty_like(u)
    out[0] = x0
    out[1:] = (v[1:] - x0 * u[1:]) / u[0]
    return out


def max_step(u: np.ndarray, d: np.ndarray, dims) -> float:
    """Largest alpha >= 0 with u + alpha d still in the cone product.

    u must lie in the interior.  Uses the spectral decomposition of the
    direction in the scaled frame: with w = P(u^{-1/2}) d the blockwise step
    limit is 1 / max(0, |w1| - w0).
    """
    slices, total = _cone_slices(dims)
    if u.shape != (total,) or d.shape != (total,):
        raise InvalidInputError("vector length does not match cone dimensions")
    alpha = np.inf
    for sl in slices:
        ub, db = u[sl], d[sl]
        if ub.shape[0] == 1:
            if db[0] < 0.0:
                alpha = min(alpha, ub[0] / -db[0])
            continue
        det = _jdot(ub)
        if det <= 0.0 or ub[0] <= 0.0:
            raise InvalidInputError("base point is not interior to the cone")
        sqrt_det = np.sqrt(det)
        half0 = np.sqrt((ub[0] + sqrt_det) / 2.0)
        root = np.empty_like(ub)  # u^{1/2}
        root[0] = half0
        root[1:] = ub[1:] / (2.0 * half0)
        inv_root = np.empty_like(root)  # u^{-1/2} = J u^{1/2} / sqrt(det)
        inv_root[0] = root[0] / sqrt_det
        inv_root[1:] = -root[1:] / sqrt_det
        w = 2.0 * inv_root * float(inv_root @ db) - _jdot(inv_root) * _j_apply(db)
        shrink = float(np.linalg.norm(w[1:])) - w[0]
        if shrink > 0.0:
            alpha = min(alpha, 1.0 / shrink)
    return alpha


def _j_apply(u):
    out = u.copy()
    out[1:] = -out[1:]
    return out


def _nt_scaling(s, z, dims, slices):
    """Blockwise NT scaling matrices W with lambda = W z = W^{-1} s."""
    blocks = []
    lam = np.empty_like(s)
    for sl in slices:
        sb, zb = s[sl], z[sl]
        d = sb.shape[0]
        if d == 1:
            w = np.sqrt(sb[0] / zb[0])
            blocks.append(np.array([[w]]))
            lam[sl] = np.sqrt(sb[0] * zb[0])
            continue
        det_s = _jdot(sb)
        det_z = _jdot(zb)
        if det_s <= 0.0 or det_z <= 0.0:
            return None, None
        ns, nz = np.sqrt(det_s), np.sqrt(det_z)
        sbar, zbar = sb / ns, zb / nz
        gamma = np.sqrt((1.0 + float(sbar @ zbar)) / 2.0)
        wbar = (sbar + _j_apply(zbar)) / (2.0 * gamma)
        eta = np.sqrt(ns / nz)
        wmat = np.empty((d, d))
        wmat[0, 0] = wbar[0]
        wmat[0, 1:] = wbar[1:]
        wmat[1:, 0] = wbar[1:]
        wmat[1:, 1:] = np.eye(d - 1) + np.outer(wbar[1:], wbar[1:]) / (1.0 + wbar[0])
        wmat *= eta
        blocks.append(wmat)
        lam[sl] = wmat @ zb
    return blocks, lam


def _block_apply(blocks, slices, v, inverse=False):
    out = np.empty_like(v)
    for wmat, sl in zip(blocks, slices):
        if inverse:
            out[sl] = np.linalg.solve(wmat, v[sl])
        else:
            out[sl] = wmat @ v[sl]
    return out


def solve_cone_lp(
    c,
    G,
    h,
    dims,
    A=None,
    b=None,
    tol: float = 1e-9,
    feastol: float | None = None,
    max_iterations: int = 200,
) -> ConicSolution:
    """Solve the cone program; see the module docstring for the format.

    ``tol`` bounds the duality gap s'z at termination (absolutely, or
    relative to the primal objective); ``feastol`` (default: min(1e-10,
    tol)) bounds the scaled primal and dual residuals.  On hitting
    ``max_iterations``, or when the gap stops improving at the level where
    round-off dominates, the current iterate is returned with status
    MAX_ITERATIONS and honest residuals.
    """
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.shape[0]
    if A is None:
        A = np.zeros((0, n))
        b = np.zeros(0)
    else:
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
    slices, m = _cone_slices(dims)
    p = A.shape[0]
    if G.shape != (m, n) or h.shape != (m,) or A.shape != (p, n) or b.shape != (p,):
        raise InvalidInputError("conic problem dimensions are inconsistent")
    if not all(np.all(np.isfinite(arr)) for arr in (c, G, h, A, b)):
        raise InvalidInputError("conic problem data must be finite")
    if feastol is None:
        feastol = min(1e-10, tol)

    e = _cone_e(dims, m)
    nu = len(dims)
    x = np.zeros(n)
    y = np.zeros(p)
    s = e.copy()
    z = e.copy()

    b_scale = 1.0 + float(np.linalg.norm(b, np.inf)) if p else 1.0
    h_scale = 1.0 + float(np.linalg.norm(h, np.inf))
    c_scale = 1.0 + float(np.linalg.norm(c, np.inf))

    status = SolveStatus.MAX_ITERATIONS
    iterations = 0
    tiny_steps = 0
    stalled = 0
    best = None  # (gap, x, y, s, z) of the best feasible iterate so far
    for iterations in range(1, max_iterations + 1):
        r_x = A.T @ y + G.T @ z + c
        r_y = A @ x - b
        r_z = G @ x + s - h
        gap = float(s @ z)
        mu = gap / nu

        pres = max(
            float(np.linalg.norm(r_y, np.inf)) / b_scale if p else 0.0,
            float(np.linalg.norm(r_z, np.inf)) / h_scale,
        )
        dres = float(np.linalg.norm(r_x, np.inf)) / c_scale
        pcost = float(c @ x)
        if (
            pres <= feastol
            and dres <= feastol
            and (gap <= tol or gap <= tol * abs(pcost))
        ):
            status = SolveStatus.OPTIMAL
            iterations -= 1
            break
        # Once feasible, the only remaining work is closing the gap.  Near
        # the numerical floor the gap oscillates, so progress is measured
        # against the best feasible iterate, which is also what a failed run
        # returns.
        if pres <= feastol and dres <= feastol:
            if best is None or gap < 0.99 * best[0]:
                best = (gap, x.copy(), y.copy(), s.copy(), z.copy())
                stalled = 0
            else:
                stalled += 1
                if stalled >= _STALL_LIMIT:
                    break
        else:
            stalled = 0

        blocks, lam = _nt_scaling(s, z, dims, slices)
        if blocks is None:
            break  # boundary collapse; report the current iterate

        kkt = np.zeros((n + p + m, n + p + m))
        kkt[:n, n:n + p] = A.T
        kkt[:n, n + p:] = G.T
        kkt[n:n + p, :n] = A
        kkt[n + p:, :n] = G
        for wmat, sl in zip(blocks, slices):
            block = wmat @ wmat
            kkt[n + p + sl.start:n + p + sl.stop,
                n + p + sl.start:n + p + sl.stop] = -block
        try:
            with warnings.catch_warnings():
                # an exactly singular factor shows up as non-finite directions
                warnings.simplefilter("ignore", LinAlgWarning)
                lu = lu_factor(kkt)
        except (ValueError, np.linalg.LinAlgError):
            break

        def kkt_solve(rhs):
            sol = lu_solve(lu, rhs)
            if not np.all(np.isfinite(sol)):
                return sol  # singular factor; caller checks finiteness
            for _ in range(_MAX_REFINEMENTS):
                resid = rhs - kkt @ sol
                if float(np.linalg.norm(resid, np.inf)) < 1e-14 * (
                    1.0 + float(np.linalg.norm(rhs, np.inf))
                ):
                    break
                sol = sol + lu_solve(lu, resid)
            return sol

        def directions(d_c):
            # Eliminate ds via the linearized complementarity equation
            # lambda o (W dz + W^{-1} ds) = d_c.
            v = np.empty(m)
            for sl in slices:
                v[sl] = _jordan_solve(lam[sl], d_c[sl])
            rhs = np.concatenate([-r_x, -r_y, -r_z - _block_apply(blocks, slices, v)])
            sol = kkt_solve(rhs)
            dx, dy, dz = sol[:n], sol[n:n + p], sol[n + p:]
            ds = -r_z - G @ dx
            return dx, dy, dz, ds

        lam_sq = np.empty(m)
        for sl in slices:
            lam_sq[sl] = _jordan_product(lam[sl], lam[sl])

        dx_a, dy_a, dz_a, ds_a = directions(-lam_sq)
        if not all(np.all(np.isfinite(v)) for v in (dx_a, dy_a, dz_a, ds_a)):
            break
        alpha_aff = min(
            1.0, max_step(s, ds_a, dims), max_step(z, dz_a, dims)
        )
        gap_aff = float((s + alpha_aff * ds_a) @ (z + alpha_aff * dz_a))
        sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3

        correction = np.empty(m)
        ws = _block_apply(blocks, slices, ds_a, inverse=True)
        wz = _block_apply(blocks, slices, dz_a)
        for sl in slices:
            correction[sl] = _jordan_product(ws[sl], wz[sl])
        d_c = -lam_sq - correction + sigma * mu * e

        dx, dy, dz, ds = directions(d_c)
        if not all(np.all(np.isfinite(v)) for v in (dx, dy, dz, ds)):
            break
        alpha = _STEP_BACKOFF * min(
            max_step(s, ds, dims), max_step(z, dz, dims)
        )
        alpha = min(1.0, alpha)
        if alpha < 1e-13:
            tiny_steps += 1
            if tiny_steps >= 3:
                break
        else:
            tiny_steps = 0

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz

    if status is not SolveStatus.OPTIMAL and best is not None:
        _, x, y, s, z = best

    r_x = A.T @ y + G.T @ z + c
    r_y = A @ x - b
    r_z = G @ x + s - h
    return ConicSolution(
        x=x,
        y=y,
        s=s,
        z=z,
        status=status,
        iterations=iterations,
        gap=float(s @ z),
        primal_residual=max(
            float(np.linalg.norm(r_y, np.inf)) if p else 0.0,
            float(np.linalg.norm(r_z, np.inf)),
        ),
        dual_residual=float(np.linalg.norm(r_x, np.inf)),
        primal_objective=float(c @ x),
        dual_objective=float(-b @ y - h @ z),
    )
