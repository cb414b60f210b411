"""Simulation and numerical verification of strong-law and series criteria
for U-statistics.

The package turns the summability conditions governing the almost-sure
behavior of normalized U-statistics (and of multidimensional random
series) into executable evaluators: multi-index enumeration, path
simulation with dyadic checkpoints, truncation-constant calibration,
nested conditional-moment membership tests, and property checks of the
underlying quantitative inequalities.
"""

from .indexing import (
    dyadic_blocks,
    enumerate_cube,
    enumerate_increasing,
    new_indices,
    overlap_family,
)
from .model import (
    Distribution,
    Kernel,
    NormalizingSequence,
    certify_regularity,
    indicator_threshold_kernel,
    make_distribution,
    make_kernel,
    make_normalizer,
    pareto_symmetric,
    point_mass,
    power_normalizer,
    constant_normalizer,
    product_kernel,
    product_measure_sample,
    rademacher,
    sum_product_kernel,
    uniform_pm1,
)
from .truncation import TruncationSolution, section_moment, solve_cn, truncated_tail_bound_check
from .engine import (
    MODES,
    PathDiagnostics,
    PathState,
    decoupled_block_embed,
    extend,
    new_path_state,
    run_path,
)
from .conditions import (
    ConditionReport,
    SetMembershipOracle,
    exceedance_terms,
    product_condition_report,
    product_tail_terms,
    section_decomposition,
    summability_verdict,
    two_dim_terms,
)
from .inequalities import (
    BoxSet,
    LemmaInstance,
    intro_example_exact,
    max_inequality_check,
    max_inequality_exact_iid,
    rectangle_instance,
    verify_moment_bounds,
    verify_section_bound,
)
from .series import (
    KernelFamily,
    axis_truncated_sum,
    diagonal_family,
    geometric_product_family,
    make_family,
    multi_dim_series_check,
    three_series_d1,
    two_dim_series_check,
)

__version__ = "0.1.0"
