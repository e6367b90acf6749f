"""Shift-locus dynamics, elaminations, sausage trees and degree-3 counts."""
from .bridge import ConsistencyReport, SnapPolicy, consistency_check, snap_angle
from .dynamics import (
    NormalizedPolynomial,
    NumericLeaf,
    bottcher,
    critical_leaf,
    critical_points,
    green_value,
    is_in_shift_locus,
    numeric_elamination,
    trace_flowline,
    trace_ray,
    unicritical_on_ray,
)
from .elamination import (
    CriticalSet,
    DynamicalElamination,
    Elamination,
    Leaf,
    build_dynamical,
    pullback_leaf,
    stretch,
    validate_critical_set,
    validate_elamination,
)
from .errors import *  # noqa: F401,F403
from .sausage import (
    SausageTree,
    assign_tags,
    build_sausage_tree,
    circle_quotient,
    d3_moduli_tree,
    hurwitz_profile,
    nu,
)
from .tautological import CountTable, beta_series, count_table, n30_recursion, taut_lamination

__version__ = "0.1.0"
