"""Measurement families and a shot-level simulation of their joint measurement.

Four one-parameter families of unbiased qubit triplets are exposed by name.
For a given triplet the simulator solves for the optimal jointly measurable
approximators, realizes them through their parent measurement, and compares
shot statistics of the ideal observables against the marginals read off one
parent sample stream, all on the worst-case input state.  The reported
estimate converges to the exact incompatibility, with a bootstrap standard
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

from .analytic import delta_orthogonal, delta_perp, delta_y
from .errors import InvalidInputError, PreconditionError
from .incompatibility import analyze
from .parent import build_parent
from .qubit import Triplet
from .solver import solve_bloch_form

__all__ = [
    "FAMILIES",
    "Family",
    "McEstimate",
    "ShotRecord",
    "SweepRow",
    "family_triplet",
    "run_experiment",
    "sweep",
]

_MIN_SHOTS = 100
_BOOTSTRAP_RESAMPLES = 200
_RNG_NAME = "philox"
# below this the triplet is compatible to solver precision and the nominal
# worst-case state is an arbitrary unit vector along numerical noise
_COMPATIBLE_PROBE_TOL = 1e-7


def _vectors_m_o(g: float) -> np.ndarray:
    c = np.cos(np.radians(g))
    return c * np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])


def _vectors_m_perp(g: float) -> np.ndarray:
    c, s = np.cos(np.radians(g)), np.sin(np.radians(g))
    return np.array([[c, s, 0.0], [c, -s, 0.0], [0.0, 0.0, 1.0]])


def _vectors_m_p(g: float) -> np.ndarray:
    c, s = np.cos(np.radians(g)), np.sin(np.radians(g))
    return np.array([[c, s, 0.0], [c, -s, 0.0], [1.0, 0.0, 0.0]])


def _vectors_m_y(g: float) -> np.ndarray:
    c, s = np.cos(np.radians(g)), np.sin(np.radians(g))
    arms = np.array(
        [[-0.5, np.sqrt(3) / 2, 0.0], [-0.5, -np.sqrt(3) / 2, 0.0], [1.0, 0.0, 0.0]]
    )
    return np.array([0.0, 0.0, c]) + s * arms


@dataclass(frozen=True)
class Family:
    """A named one-parameter family of unbiased triplets."""

    name: str
    generator: Callable[[float], np.ndarray]

    def triplet(self, gamma_deg: float) -> Triplet:
        return Triplet.from_vectors(*self.generator(gamma_deg))


FAMILIES = {
    "m_o": Family("m_o", _vectors_m_o),
    "m_perp": Family("m_perp", _vectors_m_perp),
    "m_p": Family("m_p", _vectors_m_p),
    "m_y": Family("m_y", _vectors_m_y),
}

# closed-form curve for each family, when one exists
_ANALYTIC = {
    "m_o": delta_orthogonal,
    "m_perp": delta_perp,
    "m_p": None,
    "m_y": delta_y,
}


def family_triplet(name: str, gamma_deg: float) -> Triplet:
    """Triplet of the named family at an angle in [0, 90] degrees."""
    if name not in FAMILIES:
        raise InvalidInputError(
            f"unknown family {name!r}; choose one of {sorted(FAMILIES)}"
        )
    g = float(gamma_deg)
    if not np.isfinite(g) or g < 0.0 or g > 90.0:
        raise InvalidInputError("family angle must lie in [0, 90] degrees")
    return FAMILIES[name].triplet(g)


@dataclass(frozen=True)
class ShotRecord:
    """Counts of parent-measurement outcomes for one run."""

    counts: dict[Hashable, int]
    shots: int
    seed: int

    def __post_init__(self):
        total = sum(int(c) for c in self.counts.values())
        if total != self.shots:
            raise InvalidInputError(
                f"outcome counts sum to {total}, expected {self.shots}"
            )


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo estimate of the incompatibility with bootstrap errors.

    distances[j] is the estimated worst-case statistical distance for
    observable j; delta_hat is their sum.  rng names the generator so a rerun
    with the same seed reproduces the counts exactly.
    """

    delta_hat: float
    stderr: float
    distances: np.ndarray
    distance_errors: np.ndarray
    record: ShotRecord
    shots: int
    seed: int
    rng: str

    def __post_init__(self):
        for field in ("distances", "distance_errors"):
            arr = np.array(getattr(self, field), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, field, arr)


def _plus_probability(x: float, m: np.ndarray, r: np.ndarray) -> float:
    p = (1.0 + x + float(m @ r)) / 2.0
    return min(1.0, max(0.0, p))


def _distances(ideal_hat: np.ndarray, marginal_hat: np.ndarray) -> np.ndarray:
    # twice the total variation distance per observable, from the
    # plus-outcome frequencies of a binary measurement
    return 4.0 * np.abs(ideal_hat - marginal_hat)


def run_experiment(t: Triplet, shots: int, seed: int) -> McEstimate:
    """Estimate the incompatibility of a triplet from simulated shot counts.

    Stage A measures each ideal observable separately (shots // 3 rounds
    each) on the worst-case state; stage B draws one stream of parent
    outcomes realizing the optimal approximators and reads all three
    marginals off the same records.  The bootstrap resamples both stages.
    """
    if not t.is_unbiased():
        raise PreconditionError("the simulation is defined for unbiased triplets")
    shots = int(shots)
    if shots < _MIN_SHOTS:
        raise InvalidInputError(f"shots must be at least {_MIN_SHOTS}")

    solution = solve_bloch_form(t)
    design = build_parent(solution.approximators)
    r = solution.worst_state.r
    if solution.value <= _COMPATIBLE_PROBE_TOL:
        # a compatible triplet is approximated exactly, so every state is a
        # worst case; probe the maximally mixed one, where all outcome
        # frequencies keep their shot noise
        r = np.zeros(3)
    rng = np.random.Generator(np.random.Philox(seed))

    rounds = shots // 3
    ideal_p = np.array(
        [_plus_probability(m.x, m.m, r) for m in t.measurements]
    )
    ideal_counts = rng.binomial(rounds, ideal_p)

    labels = design.parent.labels
    label_p = np.array(
        [(e.a + float(e.b @ r)) / 2.0 for e in design.parent.effects]
    )
    label_p = np.clip(label_p, 0.0, None)
    label_p /= label_p.sum()
    parent_counts = rng.multinomial(shots, label_p)
    # probability that observable j reads + given each parent label
    readout = np.array([design.post.table[label] for label in labels])

    def estimate(ideal_k: np.ndarray, parent_k: np.ndarray) -> np.ndarray:
        ideal_hat = ideal_k / rounds
        marginal_hat = (parent_k / shots) @ readout
        return _distances(ideal_hat, marginal_hat)

    distances = estimate(ideal_counts, parent_counts)
    boot = np.empty((_BOOTSTRAP_RESAMPLES, 3))
    ideal_hat = ideal_counts / rounds
    parent_hat = parent_counts / shots
    for i in range(_BOOTSTRAP_RESAMPLES):
        boot[i] = estimate(
            rng.binomial(rounds, ideal_hat), rng.multinomial(shots, parent_hat)
        )
    record = ShotRecord(
        counts={label: int(k) for label, k in zip(labels, parent_counts)},
        shots=shots,
        seed=seed,
    )
    return McEstimate(
        delta_hat=float(distances.sum()),
        stderr=float(np.std(boot.sum(axis=1), ddof=1)),
        distances=distances,
        distance_errors=np.std(boot, axis=0, ddof=1),
        record=record,
        shots=shots,
        seed=seed,
        rng=_RNG_NAME,
    )


@dataclass(frozen=True)
class SweepRow:
    """One family angle: bound, exact value, closed form, and shot estimate."""

    gamma_deg: float
    lower_bound: float
    attainable: bool
    exact: float
    analytic: float | None
    mc_estimate: float | None
    mc_stderr: float | None
    jointly_measurable: bool


def sweep(name: str, gamma_grid, shots: int, seed: int) -> list[SweepRow]:
    """Evaluate a family on a grid of angles, optionally with shot estimates.

    Deterministic given the seed; the point at grid index i uses seed + i.
    Pass shots = 0 to skip the Monte-Carlo stage.
    """
    curve = _ANALYTIC.get(name) if name in FAMILIES else None
    rows = []
    for index, gamma_deg in enumerate(gamma_grid):
        t = family_triplet(name, gamma_deg)
        report = analyze(t)
        exact = solve_bloch_form(t).value
        estimate = None
        if shots:
            estimate = run_experiment(t, shots, seed + index)
        rows.append(
            SweepRow(
                gamma_deg=float(gamma_deg),
                lower_bound=report.lower_bound,
                attainable=report.attainable,
                exact=exact,
                analytic=None if curve is None else curve(float(gamma_deg)),
                mc_estimate=None if estimate is None else estimate.delta_hat,
                mc_stderr=None if estimate is None else estimate.stderr,
                jointly_measurable=report.jointly_measurable,
            )
        )
    return rows
