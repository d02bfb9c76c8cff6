"""Ground states of a fourth-order lattice equation with a nonlocal nonlinearity.

The package tabulates the convolution kernels, assembles the quadratic part
of the energy on finite windows of the integer lattice, minimizes the energy
on its natural constraint set, and compares the large-coupling solutions with
the hard-well limit problem.
"""

from .calculus import (
    PROFILE_CAPPED,
    PROFILE_DISTANCE,
    PROFILE_QUADRATIC,
    PotentialSpec,
    biharmonic,
    bump_field,
    dirichlet_norm_sq,
    energy_norm_sq,
    gradient_form,
    hls_ratio,
    interpolation_check,
    laplacian,
    lp_norm,
    nonlocal_energy,
    w22_norm_sq,
)
from .errors import (
    AccuracyWarning,
    CacheError,
    CacheWarning,
    ChoquardError,
    ConvergenceError,
    DomainError,
    InitializerError,
    InputError,
    InternalError,
    NoProjectionError,
    ParameterError,
    ProbeInconclusiveError,
)
from .fields import Field, align_windows, load_field, save_field
from .kernels import (
    GREEN,
    METHOD_BESSEL,
    METHOD_SPECTRAL,
    RIESZ,
    KernelTable,
    QuadratureSpec,
    asymptotics_bracket,
    build_kernel_table,
    convolve,
    cross_method_deviation,
    fractional_laplacian,
    green_function,
    heat_kernel,
    heat_kernel_spectral,
    heat_semigroup_apply,
    kernel_cache_path,
    load_kernel_table,
    riesz_kernel,
    save_kernel_table,
    scaled_bessel_i,
)
from .lattice import BALL, BOX, LatticeWindow, SiteSet, ball, get_window, vertex_boundary
from .solver import (
    ConvergenceReport,
    IterationRecord,
    SequenceDiagnostics,
    SolveResult,
    SolverConfig,
    SplittingRow,
    SweepRow,
    SweepVerdicts,
    apply_quadratic_operator,
    brezis_lieb_probe,
    cg_solve,
    ground_state,
    lambda_sweep,
    palais_smale_monitor,
    report_to_dict,
    result_to_dict,
    sign_aligned_distance,
    sweep_csv,
)
from .variational import (
    MODE_DIRICHLET,
    MODE_FULL,
    MountainPassProbe,
    ProblemSpec,
    energy,
    euler_lagrange_residual,
    mountain_pass_probe,
    nehari_defect,
    nehari_level,
    nehari_project,
    nonlocal_term,
    norm_sq,
)
from .verify import SUITE_NAMES, SuiteResult, run_suites

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "BALL",
    "BOX",
    "CacheError",
    "CacheWarning",
    "ChoquardError",
    "ConvergenceError",
    "ConvergenceReport",
    "DomainError",
    "Field",
    "GREEN",
    "InitializerError",
    "InputError",
    "InternalError",
    "IterationRecord",
    "KernelTable",
    "LatticeWindow",
    "METHOD_BESSEL",
    "METHOD_SPECTRAL",
    "MODE_DIRICHLET",
    "MODE_FULL",
    "MountainPassProbe",
    "NoProjectionError",
    "PROFILE_CAPPED",
    "PROFILE_DISTANCE",
    "PROFILE_QUADRATIC",
    "ParameterError",
    "PotentialSpec",
    "ProbeInconclusiveError",
    "ProblemSpec",
    "QuadratureSpec",
    "RIESZ",
    "SUITE_NAMES",
    "SequenceDiagnostics",
    "SiteSet",
    "SolveResult",
    "SolverConfig",
    "SplittingRow",
    "SuiteResult",
    "SweepRow",
    "SweepVerdicts",
    "align_windows",
    "apply_quadratic_operator",
    "asymptotics_bracket",
    "ball",
    "biharmonic",
    "brezis_lieb_probe",
    "build_kernel_table",
    "bump_field",
    "cg_solve",
    "convolve",
    "cross_method_deviation",
    "dirichlet_norm_sq",
    "energy",
    "energy_norm_sq",
    "euler_lagrange_residual",
    "fractional_laplacian",
    "get_window",
    "gradient_form",
    "green_function",
    "ground_state",
    "heat_kernel",
    "heat_kernel_spectral",
    "heat_semigroup_apply",
    "hls_ratio",
    "interpolation_check",
    "kernel_cache_path",
    "lambda_sweep",
    "laplacian",
    "load_field",
    "load_kernel_table",
    "lp_norm",
    "mountain_pass_probe",
    "nehari_defect",
    "nehari_level",
    "nehari_project",
    "nonlocal_energy",
    "nonlocal_term",
    "norm_sq",
    "palais_smale_monitor",
    "report_to_dict",
    "result_to_dict",
    "riesz_kernel",
    "run_suites",
    "save_field",
    "save_kernel_table",
    "scaled_bessel_i",
    "sign_aligned_distance",
    "sweep_csv",
    "vertex_boundary",
    "w22_norm_sq",
]
