"""Qubit states, binary measurements, and error measures in Bloch form.

Every operator here is parametrized by its Bloch components and never
materialized as a matrix: a state is (1 + r.sigma)/2, a binary measurement
has effects (1 +- (x + m.sigma))/2, and a general effect is (a + b.sigma)/2.
Validity conditions become norm inequalities on the parameters and are
enforced at construction time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "QubitState",
    "BinaryMeasurement",
    "Triplet",
    "Effect",
    "ParentPOVM",
    "PostProcessing",
    "WorstCaseResult",
    "outcome_probabilities",
    "povm_distribution",
    "marginalize",
    "statistical_distance",
    "combined_error",
    "worst_case_error",
]

_NORM_SLACK = 1e-12
_COMPLETENESS_TOL = 1e-10

# Sign patterns in lexicographic order with + before -; ties in the
# worst-case search resolve to the earliest pattern.
SIGN_PATTERNS = tuple(itertools.product((1, -1), repeat=3))


def _vec3(v, name: str) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.shape != (3,):
        raise InvalidInputError(f"{name} must be a length-3 vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class QubitState:
    """State (1 + r.sigma)/2; valid iff |r| <= 1."""

    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _vec3(self.r, "r"))
        if np.linalg.norm(self.r) > 1.0 + _NORM_SLACK:
            raise InvalidInputError("state vector must satisfy |r| <= 1")


@dataclass(frozen=True)
class BinaryMeasurement:
    """Effects (1 +- (x + m.sigma))/2; valid iff |x| + |m| <= 1."""

    x: float
    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "m", _vec3(self.m, "m"))
        if not np.isfinite(self.x):
            raise InvalidInputError("bias x must be finite")
        if abs(self.x) + np.linalg.norm(self.m) > 1.0 + _NORM_SLACK:
            raise InvalidInputError("measurement must satisfy |x| + |m| <= 1")


@dataclass(frozen=True)
class Triplet:
    """Three binary measurements considered jointly."""

    measurements: tuple[BinaryMeasurement, BinaryMeasurement, BinaryMeasurement]

    def __post_init__(self):
        ms = tuple(self.measurements)
        if len(ms) != 3 or not all(isinstance(m, BinaryMeasurement) for m in ms):
            raise InvalidInputError("a triplet holds exactly three binary measurements")
        object.__setattr__(self, "measurements", ms)

    @classmethod
    def from_vectors(cls, m1, m2, m3) -> "Triplet":
        """Unbiased triplet from three Bloch vectors."""
        return cls(tuple(BinaryMeasurement(0.0, m) for m in (m1, m2, m3)))

    def bloch_vectors(self) -> np.ndarray:
        return np.array([m.m for m in self.measurements])

    def biases(self) -> np.ndarray:
        return np.array([m.x for m in self.measurements])

    def is_unbiased(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.biases()) <= tol))

    def is_ideal(self, tol: float = 1e-9) -> bool:
        """Unbiased with unit Bloch vectors (sharp projective observables)."""
        norms = np.linalg.norm(self.bloch_vectors(), axis=1)
        return self.is_unbiased(tol) and bool(np.all(np.abs(norms - 1.0) <= tol))


@dataclass(frozen=True)
class Effect:
    """Operator (a + b.sigma)/2; an effect iff |b| <= a and |b| <= 2 - a."""

    a: float
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", _vec3(self.b, "b"))
        bn = np.linalg.norm(self.b)
        if self.a < bn - _NORM_SLACK:
            raise InvalidInputError("effect is not positive semidefinite: a < |b|")
        if 2.0 - self.a < bn - _NORM_SLACK:
            raise InvalidInputError("effect exceeds the identity: 2 - a < |b|")


@dataclass(frozen=True)
class ParentPOVM:
    """Finite POVM with hashable outcome labels; sums to the identity."""

    effects: tuple[Effect, ...]
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        effects = tuple(self.effects)
        labels = tuple(self.labels)
        if len(effects) == 0:
            raise InvalidInputError("a POVM needs at least one effect")
        if len(effects) != len(labels):
            raise InvalidInputError("labels and effects must align")
        if len(set(labels)) != len(labels):
            raise InvalidInputError("labels must be unique")
        a_sum = sum(e.a for e in effects)
        b_sum = np.sum([e.b for e in effects], axis=0)
        if abs(a_sum - 2.0) > _COMPLETENESS_TOL:
            raise InvalidInputError("completeness violated: scalar parts sum to "
                                    f"{a_sum!r}, expected 2")
        if np.linalg.norm(b_sum) > _COMPLETENESS_TOL:
            raise InvalidInputError("completeness violated: vector parts do not cancel")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class PostProcessing:
    """Per-label probabilities of reporting outcome + for each observable.

    ``table[label]`` is a length-3 sequence: entry j is the probability that
    observable j reports + when the parent produced ``label``.
    """

    table: dict[Hashable, tuple[float, float, float]]

    def __post_init__(self):
        for label, probs in self.table.items():
            arr = np.asarray(probs, dtype=float)
            if arr.shape != (3,):
                raise InvalidInputError(f"post-processing row for {label!r} must have 3 entries")
            if np.any(arr < -_NORM_SLACK) or np.any(arr > 1.0 + _NORM_SLACK):
                raise InvalidInputError("post-processing entries must be probabilities")


@dataclass(frozen=True)
class WorstCaseResult:
    """Maximal combined error and a state attaining it."""

    value: float
    state: QubitState


def outcome_probabilities(measurement: BinaryMeasurement, state: QubitState):
    """Probabilities (p_plus, p_minus) of the measurement on the state."""
    mean = measurement.x + float(measurement.m @ state.r)
    return (1.0 + mean) / 2.0, (1.0 - mean) / 2.0


def povm_distribution(parent: ParentPOVM, state: QubitState) -> np.ndarray:
    """Outcome distribution of the parent POVM on the state.

    Round-off can push a boundary probability a hair below zero; values in
    [-1e-10, 0) are clamped to 0, anything lower is an input inconsistency.
    """
    probs = np.array(
        [(e.a + float(e.b @ state.r)) / 2.0 for e in parent.effects]
    )
    if np.any(probs < -1e-10):
        raise InvalidInputError("parent POVM produced a negative probability")
    probs[probs < 0.0] = 0.0
    return probs


def marginalize(parent: ParentPOVM, post: PostProcessing) -> Triplet:
    """Triplet of marginal binary measurements of a parent under post-processing.

    Observable j has effect  N_{+|j} = sum_label  p_j(+|label) R_label,  so in
    Bloch components  1 + x_j = sum p_j(+|label) a_label  and
    m_j = sum p_j(+|label) b_label.
    """
    if set(post.table.keys()) != set(parent.labels):
        raise InvalidInputError("post-processing labels do not match the parent POVM")
    measurements = []
    for j in range(3):
        a_acc = 0.0
        b_acc = np.zeros(3)
        for label, effect in zip(parent.labels, parent.effects):
            pj = float(post.table[label][j])
            a_acc += pj * effect.a
            b_acc += pj * effect.b
        measurements.append(BinaryMeasurement(a_acc - 1.0, b_acc))
    return Triplet(tuple(measurements))


def statistical_distance(
    m_target: BinaryMeasurement, m_approx: BinaryMeasurement, state: QubitState
) -> float:
    """Twice the total variation distance of the two outcome distributions.

    Equals 2 sum_w |p(w|target) - p(w|approx)| and reduces to
    2 |(m - n).r + (x_target - x_approx)| in Bloch form.
    """
    diff = float((m_target.m - m_approx.m) @ state.r) + (m_target.x - m_approx.x)
    return 2.0 * abs(diff)


def combined_error(target: Triplet, approx: Triplet, state: QubitState) -> float:
    """Sum of the three statistical distances on a common state."""
    return sum(
        statistical_distance(mt, ma, state)
        for mt, ma in zip(target.measurements, approx.measurements)
    )


def worst_case_error(target: Triplet, approx: Triplet) -> WorstCaseResult:
    """Maximize the combined error over all states.

    The objective is a sum of absolute values of affine functions of r, so
    the maximum over the Bloch ball is attained by checking the 8 sign
    patterns s:  value = max_s 2|sum_j s_j c_j| - 2 sum_j s_j xi_j  with
    c_j = m_j - n_j and xi_j = x_approx_j - x_target_j, the maximizer being
    the unit vector along sum_j s_j c_j (the center when that sum vanishes).
    Ties resolve to the earliest sign pattern.
    """
    c = target.bloch_vectors() - approx.bloch_vectors()
    xi = approx.biases() - target.biases()
    best_value = -np.inf
    best_state = None
    for pattern in SIGN_PATTERNS:
        s = np.array(pattern, dtype=float)
        direction = s @ c
        norm = float(np.linalg.norm(direction))
        value = 2.0 * norm - 2.0 * float(s @ xi)
        if value > best_value:
            best_value = value
            best_state = direction / norm if norm > 0.0 else np.zeros(3)
    return WorstCaseResult(float(best_value), QubitState(best_state))
