"""Joint-measurability criterion and uncertainty lower bound for triplets.

For an unbiased triplet with Bloch vectors m_j the four diagonal vectors

    p_k = sum_j gamma_jk m_j,      gamma_jk = (-1)^(k floor(j/2) + j floor(k/2))

carry the whole compatibility structure: the triplet is jointly measurable
iff the total distance from the p_k to their Fermat-Torricelli point p_f is
at most 4.  The same quantity yields a lower bound on the worst-case
approximation error of any jointly measurable triplet,

    Delta >= 2 delta,   delta = (1/4) sum_k |p_k - p_f| - 1,

and the bound is attained exactly when delta <= min_k |p_k - p_f|, in which
case moving every p_k a distance delta toward p_f produces the Bloch vectors
of an optimal approximating triplet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    PreconditionError,
    UnsupportedInputError,
)
from .geometry import FTResult, fermat_torricelli
from .qubit import Triplet

__all__ = [
    "GAMMA",
    "MurReport",
    "gamma",
    "diagonal_vectors",
    "recover_bloch",
    "analyze",
    "optimal_triplet_thm1",
]

# Compatibility boundary: lhs <= 4 + this slack counts as jointly measurable.
BOUNDARY_TOL = 1e-9
_UNBIASED_TOL = 1e-12
_DEGENERATE_TOL = 1e-12

_J = np.arange(1, 4)[:, None]
_K = np.arange(4)[None, :]
GAMMA = (-1) ** (_K * (_J // 2) + _J * (_K // 2))
GAMMA.flags.writeable = False


def gamma() -> np.ndarray:
    """The 3x4 sign matrix relating Bloch vectors to diagonal vectors."""
    return GAMMA


def diagonal_vectors(triplet: Triplet) -> np.ndarray:
    """The four diagonal vectors p_k, stacked as rows of a (4, 3) array."""
    _require_unbiased(triplet)
    return GAMMA.T @ triplet.bloch_vectors()


def recover_bloch(p: np.ndarray) -> np.ndarray:
    """Invert diagonal_vectors: m_j = (1/4) sum_k gamma_jk p_k."""
    p = np.asarray(p, dtype=float)
    if p.shape != (4, 3):
        raise UnsupportedInputError("expected four diagonal vectors of dimension 3")
    return GAMMA @ p / 4.0


@dataclass(frozen=True)
class MurReport:
    """Compatibility analysis of an unbiased triplet.

    p: diagonal vectors (4, 3).
    ft_point: their Fermat-Torricelli point.
    distances: |p_k - ft_point| per k.
    lhs: total distance (compatible iff lhs <= 4).
    jointly_measurable: the criterion evaluated with a 1e-9 boundary slack.
    delta: lhs / 4 - 1 (raw, sign carries compatibility information).
    lower_bound: max(0, 2 delta), the reporting form of the bound.
    attainable: whether delta <= min_k |p_k - ft_point|, i.e. whether the
        bound is achieved by an explicit approximating triplet.
    """

    p: np.ndarray
    ft_point: np.ndarray
    distances: np.ndarray
    lhs: float
    jointly_measurable: bool
    delta: float
    lower_bound: float
    attainable: bool


def analyze(triplet: Triplet, ft_tol: float = 1e-12) -> MurReport:
    """Evaluate the compatibility criterion and the uncertainty bound."""
    p = diagonal_vectors(triplet)
    ft = fermat_torricelli(p, tol=ft_tol)
    distances = np.linalg.norm(p - ft.point, axis=1)
    lhs = float(ft.total_distance)
    delta = lhs / 4.0 - 1.0
    return MurReport(
        p=p,
        ft_point=ft.point,
        distances=distances,
        lhs=lhs,
        jointly_measurable=bool(lhs <= 4.0 + BOUNDARY_TOL),
        delta=delta,
        lower_bound=max(0.0, 2.0 * delta),
        attainable=bool(delta <= float(np.min(distances)) + BOUNDARY_TOL),
    )


def optimal_triplet_thm1(triplet: Triplet) -> Triplet:
    """Approximating triplet that attains the lower bound.

    Each diagonal vector is moved a distance delta toward the
    Fermat-Torricelli point, which both saturates the compatibility
    criterion and (by stationarity of the FT point) makes the worst-case
    error equal 2 delta.  Compatible inputs are their own optimal
    approximation and are returned unchanged.
    """
    report = analyze(triplet)
    if report.delta <= 0.0:
        return triplet
    if not report.attainable:
        raise PreconditionError(
            "the lower bound is not attainable for this triplet: "
            "delta exceeds the smallest |p_k - p_f|"
        )
    if np.any(report.distances <= _DEGENERATE_TOL):
        raise DegenerateGeometryError(
            "a diagonal vector coincides with the Fermat-Torricelli point"
        )
    units = (report.ft_point - report.p) / report.distances[:, None]
    q = report.p + report.delta * units
    return Triplet.from_vectors(*recover_bloch(q))


def _require_unbiased(triplet: Triplet):
    if not triplet.is_unbiased(_UNBIASED_TOL):
        raise UnsupportedInputError(
            "the diagonal-vector analysis applies to unbiased triplets only"
        )
