"""Physical parent measurement for a jointly measurable unbiased triplet.

A compatible unbiased triplet n_1, n_2, n_3 can be realized by first
performing a single four-setting parent measurement and then post-processing
its classical outcome.  The construction works in the diagonal picture: with
q_k the four diagonal vectors of the triplet and v a base point satisfying
sum_k |q_k - v| = 4, setting

    P_k = |q_k - v| / 4,      u_k = (q_k - v) / |q_k - v|,

the effects R_(k,mu) = P_k (1 + mu u_k.sigma)/2 form an eight-outcome POVM
whose deterministic readout p_j(+|k,mu) = (1 + gamma_jk mu)/2 reproduces the
triplet exactly.  The identity holds for every admissible base point because
the rows of gamma sum to zero; when the compatibility criterion saturates the
Fermat-Torricelli point of the q_k is the canonical choice, and for strictly
compatible triplets the base point is slid along +z until the distance sum
reaches 4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionError
from .geometry import fermat_torricelli
from .incompatibility import GAMMA, diagonal_vectors
from .qubit import Effect, ParentPOVM, PostProcessing, Triplet, marginalize

__all__ = ["ParentDesign", "ParentReport", "build_parent", "verify_parent"]

# Inputs may overshoot the compatibility boundary by solver round-off; beyond
# this the triplet is treated as genuinely incompatible.
_SATURATION_TOL = 1e-7
# Outcomes lighter than this are dropped (their direction is undefined).
_WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class ParentDesign:
    """Parent measurement with its readout rule.

    probabilities: the four setting weights P_k (sum to 1).
    directions: unit vectors u_k, or None where the setting was dropped.
    parent: the POVM with labels (k, mu), mu in {+1, -1}.
    post: deterministic readout p_j(+|k, mu) = (1 + gamma_jk mu)/2.
    """

    probabilities: np.ndarray
    directions: tuple
    parent: ParentPOVM
    post: PostProcessing


@dataclass(frozen=True)
class ParentReport:
    """Residuals of a parent design checked against a target triplet."""

    completeness_residual: float
    positivity_residual: float
    direction_residual: float
    consistency_residual: float
    marginal_residual: float
    max_residual: float


def _base_point(q: np.ndarray, lhs: float, ft_point: np.ndarray) -> np.ndarray:
    """Base point v with sum_k |q_k - v| = 4, given lhs <= 4 at the FT point."""
    if lhs >= 4.0 - 1e-12:
        return ft_point
    z_hat = np.array([0.0, 0.0, 1.0])

    def excess(s: float) -> float:
        return float(np.sum(np.linalg.norm(q - (ft_point + s * z_hat), axis=1))) - 4.0

    # excess(0) = lhs - 4 < 0 and excess(3) >= 4*3 - lhs - 4 > 0
    s = brentq(excess, 0.0, 3.0, xtol=1e-14)
    return ft_point + s * z_hat


def build_parent(n: Triplet) -> ParentDesign:
    """Construct the parent measurement realizing a compatible triplet.

    Raises PreconditionError when the triplet is incompatible beyond a 1e-7
    slack; a slight overshoot of the boundary (solver round-off) is projected
    back onto it by rescaling the diagonal vectors.
    """
    q = diagonal_vectors(n)
    ft = fermat_torricelli(q)
    lhs = float(ft.total_distance)
    if lhs > 4.0 + _SATURATION_TOL:
        raise PreconditionError(
            f"triplet is not jointly measurable: distance sum {lhs!r} exceeds 4"
        )
    if lhs > 4.0:
        q = q * (4.0 / lhs)
        ft = fermat_torricelli(q)
        lhs = float(ft.total_distance)
    v = _base_point(q, lhs, ft.point)

    dists = np.linalg.norm(q - v, axis=1)
    probs = dists / 4.0
    probs = probs / probs.sum()
    probs.flags.writeable = False

    directions = []
    effects = []
    labels = []
    table = {}
    for k in range(4):
        if probs[k] <= _WEIGHT_FLOOR:
            directions.append(None)
            continue
        u = (q[k] - v) / dists[k]
        directions.append(u)
        for mu in (1, -1):
            effects.append(Effect(probs[k], mu * probs[k] * u))
            labels.append((k, mu))
            table[(k, mu)] = tuple((1.0 + GAMMA[j, k] * mu) / 2.0 for j in range(3))

    return ParentDesign(
        probabilities=probs,
        directions=tuple(directions),
        parent=ParentPOVM(tuple(effects), tuple(labels)),
        post=PostProcessing(table),
    )


def verify_parent(design: ParentDesign, n: Triplet) -> ParentReport:
    """Recompute the defining properties of a design against its target.

    Checks completeness (from both the setting weights and the stored
    effects), effect positivity, unit directions, agreement between the
    stored effects and the (P_k, u_k) data, and reconstruction of the target
    triplet through the readout rule.
    """
    probs = np.asarray(design.probabilities, dtype=float)
    completeness = abs(2.0 * float(probs.sum()) - 2.0)
    a_sum = sum(e.a for e in design.parent.effects)
    b_sum = np.sum([e.b for e in design.parent.effects], axis=0)
    completeness = max(
        completeness, abs(a_sum - 2.0), float(np.linalg.norm(b_sum))
    )

    positivity = max(0.0, float(-probs.min()))
    for e in design.parent.effects:
        bn = float(np.linalg.norm(e.b))
        positivity = max(positivity, bn - e.a, bn - (2.0 - e.a))
    positivity = max(0.0, positivity)

    direction = 0.0
    consistency = 0.0
    for label, effect in zip(design.parent.labels, design.parent.effects):
        k, mu = label
        u = design.directions[k]
        if u is None:
            continue
        direction = max(direction, abs(float(np.linalg.norm(u)) - 1.0))
        consistency = max(
            consistency,
            abs(effect.a - probs[k]),
            float(np.max(np.abs(effect.b - mu * probs[k] * u))),
        )

    reconstructed = marginalize(design.parent, design.post)
    marginal = 0.0
    for target, rebuilt in zip(n.measurements, reconstructed.measurements):
        marginal = max(marginal, abs(rebuilt.x - target.x))
        marginal = max(marginal, float(np.max(np.abs(rebuilt.m - target.m))))

    residuals = (completeness, positivity, direction, consistency, marginal)
    return ParentReport(*residuals, max_residual=float(max(residuals)))
