"""Interacting particle systems on self-similar networks.

Builds IFS attractors with symbolic addressing and self-similar measures,
assembles and integrates Galerkin discretizations of nonlocal evolution
equations on fractal domains, and verifies the convergence theory (continuum
limit, mean-field empirical-measure convergence, and projection rates) at
desk scale.
"""

from .analysis import (
    EmpiricalMeasure,
    ModulusReport,
    RateFit,
    TrajectoryError,
    VlasovConvergenceTable,
    bl_distance_proxy,
    field_lp_norm,
    lipschitz_norm_estimate,
    local_empirical_measure,
    lp_projection_bound,
    modulus_of_continuity,
    modulus_profile,
    projection_error,
    rate_fit,
    traj_error,
    vlasov_self_convergence,
)
from .dynamics import (
    CouplingGraph,
    ModelSpec,
    Trajectory,
    assemble_deterministic,
    builtin_kernels,
    builtin_models,
    consensus_model,
    integrate_ips,
    kuramoto_inertia_model,
    kuramoto_model,
    project_initial,
    project_kernel,
    sample_bernoulli,
)
from .errors import BudgetExceededError, ConfigError, NumericalAbortError
from .geometry import (
    IFS,
    AffineMap,
    AttractorCell,
    Similitude,
    attractor_cell,
    attractor_diameter_bound,
    attractor_points,
    canonical_interval_ifs,
    compose,
    cylinder_diameter_bound,
    fixed_point,
    natural_projection,
    preset,
    similarity_dimension,
    translation_vector,
)
from .quadrature import (
    QuadratureConfig,
    SelfSimilarMeasure,
    cell_average,
    integrate_mc,
    integrate_qmc,
    pairwise_sum,
    stationarity_residual,
)
from .symbolic import (
    ProbabilityVector,
    Word,
    cylinder_measure,
    enumerate_level,
    level_weights,
    shift,
    word_metric,
)
from .transfer import (
    KernelMatrix,
    PiecewiseConstantField,
    PixelImage,
    StepFunction,
    coarsen,
    kernel_to_graphon,
    martingale_level,
    refine,
    transfer_to_interval,
)

__version__ = "0.1.0"
