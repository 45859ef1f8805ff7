"""Dyadic multilinear fractional operators, Morrey-type norms, sparse
domination, and a randomized trace-inequality experiment harness.

Everything lives on finite dyadic grids: inputs are cellwise-constant
functions and atomic measures, so cube integrals, operator sums (with their
geometric tails in closed form) and norm suprema are exact up to floating
rounding, making the measured inequality constants meaningful.
"""

from .dyadic import (
    DyadicCube,
    LevelWindow,
    OutOfWindowError,
    ancestor,
    cell_of,
    children,
    cubes_containing,
    enumerate_cubes,
    parent,
    unit_cube,
)
from .fields import (
    AtomicMeasure,
    GridFunction,
    SubResolutionError,
    VectorFunction,
    atoms_measure,
    constant_function,
    hyperplane_measure,
    indicator_function,
    lebesgue_cell_measure,
    power_profile,
)
from .harness import (
    ConstantReport,
    ExperimentConfig,
    brute_force_oracle,
    doob_maximal_suite,
    embedding_suite,
    emit_report,
    instance_hash,
    oracle_suite,
    out_of_domain_probe,
    ratio_field,
    run_trace_experiment,
    subadditivity_suite,
    trace_sides,
)
from .hedberg import (
    ExponentError,
    ExponentSet,
    exponents,
    hedberg_optimal,
    hedberg_pointwise_bound,
    hypothesis_violations,
    normalize_product_morrey,
    telescoping_split,
)
from .norms import (
    Box,
    CubeSet,
    NormResult,
    lp_norm_on_cube,
    measure_growth_norm,
    morrey_norm,
    product_morrey_norm,
    radon_morrey_norm,
)
from .operators import (
    OperatorField,
    hl_maximal_dyadic,
    integral_continuous,
    integral_dyadic,
    maximal_dyadic,
)
from .sparse import (
    InvalidSparseFamilyError,
    SparseCertificate,
    SparseFamily,
    build_sparse,
    default_threshold,
    sparse_integral_bound,
    sparse_maximal_bound,
    subadditivity_check,
    verify_sparse,
)

__version__ = "0.1.0"
