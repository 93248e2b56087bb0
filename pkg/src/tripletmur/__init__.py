"""Exact incompatibility of qubit observable triplets.

Compatibility criterion and measurement-uncertainty lower bound, exact
incompatibility measure by convex conic programming in two independent
formulations, optimal jointly measurable approximators with their parent
measurement, closed-form curves for structured families, graded-symmetry
detection, and a shot-level simulation of the estimation experiment.
"""

from .analytic import (
    GradedSymmetry,
    delta_orthogonal,
    delta_perp,
    delta_y,
    detect_graded_symmetries,
    symmetrize,
    threshold_angles_perp,
    threshold_angles_y,
)
from .conic import SolveStatus
from .errors import (
    DegenerateGeometryError,
    InvalidInputError,
    InvalidSymmetryError,
    NumericError,
    PreconditionError,
    TripletMurError,
    UnsupportedInputError,
)
from .experiment import (
    FAMILIES,
    Family,
    McEstimate,
    ShotRecord,
    SweepRow,
    family_triplet,
    run_experiment,
    sweep,
)
from .geometry import FTResult, fermat_torricelli, ft_oracle
from .incompatibility import (
    GAMMA,
    MurReport,
    analyze,
    diagonal_vectors,
    gamma,
    optimal_triplet_thm1,
    recover_bloch,
)
from .parent import ParentDesign, ParentReport, build_parent, verify_parent
from .qubit import (
    BinaryMeasurement,
    Effect,
    ParentPOVM,
    PostProcessing,
    QubitState,
    Triplet,
    WorstCaseResult,
    combined_error,
    marginalize,
    statistical_distance,
    worst_case_error,
)
from .solver import (
    SolveResult,
    oracle_multistart,
    solve_bloch_form,
    solve_povm_form,
)

__version__ = "0.1.0"
