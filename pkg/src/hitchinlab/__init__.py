"""Numerical laboratory for harmonic metrics on Higgs bundles in the
Hitchin section of rank n, over a hyperbolic coordinate patch.

Modules:
    lie_algebra       principal sl2 triple, section matrices, invariants
    complex_field     patch grid, Wirtinger derivatives, field I/O
    hitchin_solver    baseline metric, residual assembly, the solve
    harmonic_geometry metric splitting, energy density, pulled-back metric
    verification      identity suite, inequality battery, oracles
    cli_runner        command-line front end
"""

from .complex_field import (
    ConfigurationError,
    HyperbolicPatch,
    d_z,
    d_zbar,
    make_patch,
    read_field_csv,
    sample_polynomial,
    write_field_csv,
)
from .harmonic_geometry import (
    GeometryReport,
    SplittingData,
    energy_density,
    killing_normalization,
    pullback_and_hopf,
    splitting_metrics,
)
from .hitchin_solver import (
    COMMUTATOR_SIGN,
    AnsatzError,
    FuchsianBaseline,
    MetricDegeneracyError,
    MetricState,
    SolveConfig,
    SolveReport,
    assemble_phi,
    calibrate_commutator_sign,
    fuchsian_baseline,
    residual,
    residual_diagonal,
    solve,
)
from .lie_algebra import (
    DifferentialTuple,
    PrincipalTriple,
    char_coeffs,
    higgs_matrix,
    highest_weight_vector,
    hitchin_invariants,
    principal_triple,
    section_coefficients,
)
from .verification import (
    CheckResult,
    OracleFailure,
    check_amgm_chain,
    check_identities,
    check_solution,
    vortex_oracle_n2,
)

__version__ = "0.1.0"

__all__ = [
    "COMMUTATOR_SIGN",
    "AnsatzError",
    "CheckResult",
    "ConfigurationError",
    "DifferentialTuple",
    "FuchsianBaseline",
    "GeometryReport",
    "HyperbolicPatch",
    "MetricDegeneracyError",
    "MetricState",
    "OracleFailure",
    "PrincipalTriple",
    "SolveConfig",
    "SolveReport",
    "SplittingData",
    "assemble_phi",
    "calibrate_commutator_sign",
    "char_coeffs",
    "check_amgm_chain",
    "check_identities",
    "check_solution",
    "d_z",
    "d_zbar",
    "energy_density",
    "fuchsian_baseline",
    "higgs_matrix",
    "highest_weight_vector",
    "hitchin_invariants",
    "killing_normalization",
    "make_patch",
    "principal_triple",
    "pullback_and_hopf",
    "read_field_csv",
    "residual",
    "residual_diagonal",
    "sample_polynomial",
    "section_coefficients",
    "solve",
    "splitting_metrics",
    "vortex_oracle_n2",
    "write_field_csv",
]
