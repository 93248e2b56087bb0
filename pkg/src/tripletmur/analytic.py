"""Closed-form incompatibility curves for three symmetric triplet families.

Three families of unbiased qubit observables admit analytic values: scaled
orthogonal axes, a pair at +-gamma from x plus the z axis, and a tripod of
three arms tilted by gamma off the z axis.  The latter two curves are
piecewise with thresholds recomputed here rather than hard-coded: the first
threshold is the angle where the lower bound stops being attainable, the
second is the tangency of the adjacent closed-form pieces.  The module also
detects graded symmetries (reflections permuting the measurement directions
up to sign) and averages a triplet over the group they generate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .errors import InvalidInputError, InvalidSymmetryError, NumericError, PreconditionError
from .incompatibility import analyze
from .qubit import Triplet

__all__ = [
    "GradedSymmetry",
    "delta_orthogonal",
    "delta_perp",
    "delta_y",
    "detect_graded_symmetries",
    "symmetrize",
    "threshold_angles_perp",
    "threshold_angles_y",
]

_DETECT_TOL = 1e-8
_GROUP_CAP = 48  # |S3 x {+-1}^3|, the most graded symmetries a triplet admits


def _check_domain(gamma_deg: float) -> float:
    g = float(gamma_deg)
    if not np.isfinite(g) or g < 0.0 or g > 90.0:
        raise PreconditionError("angle must lie in [0, 90] degrees")
    return g


def _perp_triplet(gamma_deg: float) -> Triplet:
    c, s = np.cos(np.radians(gamma_deg)), np.sin(np.radians(gamma_deg))
    return Triplet.from_vectors((c, s, 0), (c, -s, 0), (0, 0, 1))


def _y_triplet(gamma_deg: float) -> Triplet:
    c, s = np.cos(np.radians(gamma_deg)), np.sin(np.radians(gamma_deg))
    arms = np.array([[-0.5, np.sqrt(3) / 2, 0], [-0.5, -np.sqrt(3) / 2, 0], [1, 0, 0]])
    return Triplet.from_vectors(*(np.array([0.0, 0.0, c]) + s * arms))


def delta_orthogonal(gamma_deg: float) -> float:
    """Incompatibility of three orthogonal axes scaled by cos(gamma)."""
    g = _check_domain(gamma_deg)
    return max(0.0, 2.0 * (np.sqrt(3.0) * np.cos(np.radians(g)) - 1.0))


# -- pair at +-gamma from x plus the z axis ---------------------------------


def _perp_piece1(g: float) -> float:
    return 2.0 * np.sqrt(2.0 + np.sin(np.radians(2 * g))) - 2.0


def _perp_piece2(g: float) -> float:
    s2 = np.sin(np.radians(2 * g))
    c2 = abs(np.cos(np.radians(2 * g)))
    return 2.0 * np.sqrt(3.0 + s2 - 2.0 * np.sqrt(s2) - 2.0 * c2)


def _perp_piece3(g: float) -> float:
    target = abs(np.cos(np.radians(2 * g)))

    def residual(t: float) -> float:
        return (np.tan(t) ** 2) * (1.0 + 3.0 * np.cos(t)) ** 2 / 8.0 - 1.0 - target

    lo, hi = 1e-12, np.pi / 2 - 1e-12
    if not (residual(lo) < 0.0 < residual(hi)):
        raise NumericError(
            f"bisection bracket does not straddle the root: "
            f"f({lo}) = {residual(lo)!r}, f({hi}) = {residual(hi)!r}"
        )
    t = bisect(residual, lo, hi, xtol=1e-12)
    return (1.0 - np.cos(t)) * np.sqrt(1.0 / np.cos(t) ** 2 + 3.0)


def _attainability_margin(triplet: Triplet) -> float:
    """Negative when the lower bound is attained, positive when it is not."""
    report = analyze(triplet)
    return report.delta - float(np.min(report.distances))


def _tangency_angle(difference, lo: float, hi: float) -> float:
    """Angle minimizing |difference|; the pieces touch rather than cross."""
    res = minimize_scalar(
        lambda g: abs(difference(g)), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


@lru_cache(maxsize=1)
def threshold_angles_perp() -> tuple[float, float]:
    """Piece boundaries (in degrees of |gamma - 45|) of the perpendicular curve.

    The first is the attainability root of the lower bound along the family,
    the second the tangency of the middle and outer closed forms.
    """

    def margin(offset: float) -> float:
        return _attainability_margin(_perp_triplet(45.0 + offset))

    lo, hi = 0.0, 44.5
    if not (margin(lo) < 0.0 < margin(hi)):
        raise NumericError(
            f"attainability bracket failed: f({lo}) = {margin(lo)!r}, "
            f"f({hi}) = {margin(hi)!r}"
        )
    gamma0 = bisect(margin, lo, hi, xtol=1e-10)
    gamma1 = _tangency_angle(
        lambda s: _perp_piece2(45.0 + s) - _perp_piece3(45.0 + s), gamma0, 44.5
    )
    return float(gamma0), float(gamma1)


def delta_perp(gamma_deg: float) -> float:
    """Incompatibility of the pair at +-gamma from x plus the z axis."""
    g = _check_domain(gamma_deg)
    offset = abs(g - 45.0)
    gamma0, gamma1 = threshold_angles_perp()
    if offset <= gamma0:
        return _perp_piece1(g)
    if offset < gamma1:
        return _perp_piece2(g)
    return _perp_piece3(g)


# -- tripod of three arms tilted by gamma off the z axis ---------------------


def _y_piece1(g: float) -> float:
    r = np.radians(g)
    return 2.0 * np.cos(r) + 2.0 * np.sqrt(2.0) * np.sin(r) - 2.0


def _y_piece2(g: float) -> float:
    r = np.radians(g)
    inner = 2.0 / 3.0 - (np.sin(r) - np.sqrt(2.0) * np.cos(r)) ** 2
    return np.sqrt(2.0) * np.sin(r) + 4.0 * np.cos(r) - 2.0 * np.sqrt(max(inner, 0.0))


def _y_piece3(g: float) -> float:
    r = np.radians(g)
    c, s = np.cos(r), np.sin(r)

    def err(theta: float) -> float:
        x, y = np.cos(theta) / 3.0, np.sin(theta) / 3.0
        return 2.0 * np.sqrt((c - x) ** 2 + 4.0 * (s - 2.0 * y) ** 2)

    thetas = np.linspace(0.0, 2.0 * np.pi, 721)
    coarse = thetas[int(np.argmin([err(t) for t in thetas]))]
    step = thetas[1] - thetas[0]
    res = minimize_scalar(
        err, bounds=(coarse - step, coarse + step), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.fun)


@lru_cache(maxsize=1)
def threshold_angles_y() -> tuple[float, float]:
    """Piece boundaries (degrees) of the tripod curve, recomputed."""

    def margin(g: float) -> float:
        return _attainability_margin(_y_triplet(g))

    lo, hi = 10.0, 89.5
    if not (margin(lo) < 0.0 < margin(hi)):
        raise NumericError(
            f"attainability bracket failed: f({lo}) = {margin(lo)!r}, "
            f"f({hi}) = {margin(hi)!r}"
        )
    gamma0 = bisect(margin, lo, hi, xtol=1e-10)
    gamma1 = _tangency_angle(
        lambda g: _y_piece2(g) - _y_piece3(g), gamma0 + 0.5, 89.5
    )
    return float(gamma0), float(gamma1)


def delta_y(gamma_deg: float) -> float:
    """Incompatibility of three arms tilted by gamma off the z axis."""
    g = _check_domain(gamma_deg)
    gamma0, gamma1 = threshold_angles_y()
    if g <= gamma0:
        return _y_piece1(g)
    if g <= gamma1:
        return _y_piece2(g)
    return _y_piece3(g)


# -- graded symmetries --------------------------------------------------------


@dataclass(frozen=True)
class GradedSymmetry:
    """Reflection g with g m[j] = signs[j] * m[permutation[j]] for a triplet."""

    reflection: np.ndarray
    permutation: tuple[int, int, int]
    signs: tuple[int, int, int]

    def __post_init__(self):
        g = np.array(self.reflection, dtype=float)
        if g.shape != (3, 3):
            raise InvalidInputError("reflection must be a 3x3 matrix")
        if np.max(np.abs(g @ g.T - np.eye(3))) > 1e-10:
            raise InvalidInputError("reflection must be orthogonal")
        if abs(np.linalg.det(g) + 1.0) > 1e-10:
            raise InvalidInputError("reflection must have determinant -1")
        g.flags.writeable = False
        object.__setattr__(self, "reflection", g)
        object.__setattr__(self, "permutation", tuple(int(p) for p in self.permutation))
        object.__setattr__(self, "signs", tuple(int(w) for w in self.signs))
        if sorted(self.permutation) != [0, 1, 2]:
            raise InvalidInputError("permutation must rearrange (0, 1, 2)")
        if any(w not in (-1, 1) for w in self.signs):
            raise InvalidInputError("signs must be +-1")


def _reflection_procrustes(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Best orthogonal map with determinant -1 taking source rows to target rows."""
    u, _, vt = np.linalg.svd(target.T @ source)
    d = np.linalg.det(u) * np.linalg.det(vt)
    # flip along the least-significant singular direction to force det -1
    return u @ np.diag([1.0, 1.0, -d]) @ vt


def detect_graded_symmetries(t: Triplet, tol: float = _DETECT_TOL) -> list[GradedSymmetry]:
    """All reflections mapping the triplet onto itself up to signed relabeling."""
    if not t.is_ideal():
        raise PreconditionError("graded symmetries are detected on ideal triplets")
    m = t.bloch_vectors()
    found = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            if perm == (0, 1, 2) and signs == (-1, -1, -1):
                # the point inversion satisfies this pattern for every
                # triplet and acts trivially on it, so it carries no
                # constraint worth reporting
                continue
            target = np.array([signs[j] * m[perm[j]] for j in range(3)])
            g = _reflection_procrustes(m, target)
            if np.max(np.linalg.norm(m @ g.T - target, axis=1)) <= tol:
                found.append(GradedSymmetry(g, perm, signs))
    return found


def _compose(second, first):
    """Group product: apply `first`, then `second`."""
    perm1, signs1, g1 = first
    perm2, signs2, g2 = second
    perm = tuple(perm2[perm1[j]] for j in range(3))
    signs = tuple(signs1[j] * signs2[perm1[j]] for j in range(3))
    return perm, signs, g2 @ g1


def _element_key(element):
    perm, signs, g = element
    return perm, signs, tuple(np.round(g, 9).ravel())


def _generate_group(syms: list[GradedSymmetry]):
    identity = ((0, 1, 2), (1, 1, 1), np.eye(3))
    generators = [(s.permutation, s.signs, np.asarray(s.reflection)) for s in syms]
    group = {_element_key(identity): identity}
    frontier = [identity]
    while frontier:
        element = frontier.pop()
        for gen in generators:
            product = _compose(gen, element)
            key = _element_key(product)
            if key not in group:
                group[key] = product
                frontier.append(product)
                if len(group) > _GROUP_CAP:
                    raise InvalidSymmetryError(
                        "the given symmetries do not generate a closed group "
                        f"of at most {_GROUP_CAP} elements"
                    )
    return list(group.values())


def symmetrize(n: Triplet, syms: list[GradedSymmetry]) -> Triplet:
    """Average a triplet over the group generated by graded symmetries.

    Each symmetry acts by out[perm[j]] = signs[j] * g @ n[j]; a triplet obeying
    all the symmetries is a fixed point, and averaging projects onto the
    fixed-point subspace, so every input symmetry holds exactly on the output.
    """
    if not n.is_unbiased():
        raise PreconditionError("symmetrization is defined for unbiased triplets")
    vectors = n.bloch_vectors()
    group = _generate_group(syms)
    acc = np.zeros((3, 3))
    for perm, signs, g in group:
        image = np.empty((3, 3))
        for j in range(3):
            image[perm[j]] = signs[j] * (g @ vectors[j])
        acc += image
    return Triplet.from_vectors(*(acc / len(group)))
