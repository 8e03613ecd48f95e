"""Redundant-record analysis of pure multipartite quantum states."""

from .approx import GhzFitResult, ProductBasisFrame, delta2, epsilon_matrices, fit_ghz
from .darwinism import mutual_information, pointer_from_decomposition, redundancy, sbs_check
from .errors import DarwinscopeError
from .ghz import (
    SemiGHZDecomposition,
    detect_ghz,
    etut_scan,
    fine_grain,
    match_decompositions,
    random_ghz,
    verify_semi_ghz,
)
from .hilbert import (
    DensityOperator,
    HermitianObservable,
    PureState,
    SystemLayout,
    dual_vector,
    partial_trace,
    project_component,
    schmidt,
    von_neumann_entropy,
)
from .partitions import (
    Partition,
    classify_relative,
    comparable_set,
    is_comparable,
    pair_covers,
    sufficient_condition,
)

__version__ = "0.1.0"
