"""Multislope rent-or-buy: randomized strategies and their verification."""

from .instance import (
    CoincidentIntersectionWarning,
    Instance,
    InstanceFormatError,
    InvalidInstanceError,
    NonAdditiveInstance,
    Slope,
    UnreachableBudgetError,
    load_instance,
    normalize,
    parse_instance,
)
from .profile import (
    Profile,
    Segment,
    Strategy,
    ValidationReport,
    dump_profile,
    load_profile,
    parse_profile,
    profile_to_dict,
    realized_cost,
    sample_strategy,
    validate_prudent,
    validate_tight,
)
from .decompose import (
    DecomposeResult,
    classical_profile,
    combine,
    reduce_rents,
    solve_decompose,
    split,
)
from .optimal import (
    FeasibilityTrace,
    euler_feasible_oracle,
    feasible,
    segment_solution,
    solve_optimal,
)
from .nonadditive import (
    DoublingSchedule,
    build_schedule,
    doubling_cost,
    doubling_costs_batch,
    expected_ratio_estimate,
)
from .sim import SimReport, default_grid, run_exact, run_monte_carlo, write_csv

__version__ = "0.1.0"
