"""Spin-POVM feasibility checks, minimax POVM fitting and Bohmian arrival-time sampling."""

__version__ = "0.1.0"

from .errors import (
    ArrivalPOVMError,
    DidNotConverge,
    DirectionNotFound,
    GridMismatch,
    InfeasibleGrid,
    InvalidPOVM,
    MissingAxis,
    MissingPerpendicularDirection,
    NodeProximity,
    NonHermitianInput,
    ProblemTooLarge,
    TooFewDirections,
    ZeroVector,
)
from .spin_algebra import Direction, Effect, Spinor, bloch_decompose, expectation, is_psd, spinor_from_direction
from .time_distributions import BinnedDistribution, DirectionFamily, TimeGrid, antipode_lookup, combine, tv_distance
from .povm_model import BinnedSpinPOVM, predict_family, random_povm, validate
from .measurability import CheckReport, axial_defect, chiral_defect, delta, full_report, inversion_defect
from .povm_fit import FitOptions, FitResult, brute_force_fit, certify, fit
