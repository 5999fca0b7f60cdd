"""CHSH Bell tests on classically entangled stochastic optical fields.

A partially polarized stochastic beam carries non-separable correlations
between its polarization and amplitude degrees of freedom.  This package
generates such beams, performs polarization tomography on them, runs a
virtual Mach-Zehnder protocol that reconstructs joint projections from
whole-beam intensities alone, and evaluates and optimizes the CHSH Bell
parameter, which exceeds the classical bound of 2 whenever both Schmidt
weights are non-zero.
"""

from .bell import (
    BellResult,
    BellSettings,
    analytic_provider,
    bell_expanded,
    chsh,
    correlation_analytic,
    correlation_from_quad,
    empirical_provider,
    gisin_settings,
    max_bell_value,
    maximize_bell,
    mc_protocol_provider,
    scan_correlation,
    symbolic_protocol_provider,
)
from .ensemble import (
    EnsembleParams,
    FieldEnsemble,
    dump_samples,
    empirical_correlator,
    empirical_fun_inner,
    empirical_joint_quad,
    generate,
    realization_processes,
    subseed,
)
from .field import (
    BeamState,
    DegenerateConfigurationError,
    FunBasisLabel,
    PolVector,
    SchmidtPair,
    UNPOLARIZED,
    project_pol,
    rotate_fun,
    rotate_pol,
    schmidt_beam,
    wrap_angle,
)
from .interferometer import (
    BOTH_OPEN,
    AUXILIARY_ONLY,
    PRIMARY_ONLY,
    DetectorModel,
    MeasurementRecord,
    ProjectionQuad,
    QuadMeasurement,
    ShutterState,
    beam_from_ensemble,
    direct_joint_projection,
    direct_quad,
    measure_joint_projection,
    measure_quad,
    recombine,
    split,
    strip,
    stripping_angle,
)
from .polarimetry import (
    StokesVector,
    coherence_matrix,
    dop,
    schmidt_frame,
    schmidt_from_dop,
    stokes_from_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "AUXILIARY_ONLY",
    "BOTH_OPEN",
    "BeamState",
    "BellResult",
    "BellSettings",
    "DegenerateConfigurationError",
    "DetectorModel",
    "EnsembleParams",
    "FieldEnsemble",
    "FunBasisLabel",
    "MeasurementRecord",
    "PRIMARY_ONLY",
    "PolVector",
    "ProjectionQuad",
    "QuadMeasurement",
    "SchmidtPair",
    "ShutterState",
    "StokesVector",
    "UNPOLARIZED",
    "analytic_provider",
    "beam_from_ensemble",
    "bell_expanded",
    "chsh",
    "coherence_matrix",
    "correlation_analytic",
    "correlation_from_quad",
    "direct_joint_projection",
    "direct_quad",
    "dop",
    "dump_samples",
    "empirical_correlator",
    "empirical_fun_inner",
    "empirical_joint_quad",
    "empirical_provider",
    "generate",
    "gisin_settings",
    "max_bell_value",
    "maximize_bell",
    "mc_protocol_provider",
    "measure_joint_projection",
    "measure_quad",
    "project_pol",
    "realization_processes",
    "recombine",
    "rotate_fun",
    "rotate_pol",
    "scan_correlation",
    "schmidt_beam",
    "schmidt_frame",
    "schmidt_from_dop",
    "split",
    "stokes_from_ensemble",
    "strip",
    "stripping_angle",
    "subseed",
    "symbolic_protocol_provider",
    "wrap_angle",
    "__version__",
]
