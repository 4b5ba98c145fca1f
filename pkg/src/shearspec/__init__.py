"""Spectral toolkit for the Dirichlet Laplacian on sheared planar strips.

The package computes, at desk scale, the spectral objects attached to a
strip of fixed vertical width whose boundary is sheared by a profile
function: essential-spectrum thresholds and dispersion bands for constant
shear, discrete eigenvalues of truncated strips, variational certificates
for the existence of bound states, Hardy-type lower bounds for repulsive
shear with explicitly computed constants, and domain-bracketing stability
estimates for strongly sheared bends.
"""

from .geometry import (
    BallAreaEstimate,
    CosineDeficit,
    Deficit,
    GaussianDeficit,
    IndicatorDeficit,
    ObstructionDeficit,
    PlateauDeficit,
    ScaledDeficit,
    SchemaGeometry,
    ShearProfile,
    StripGeometry,
    SumDeficit,
    TabulatedDeficit,
    ball_intersection_area,
    calibrated_two_level,
    excess_integral,
    schema_points,
    two_level_deficit,
)
from .discretization import (
    AssembledOperator,
    SlabDomain,
    StructuredMesh,
    TriangleDomain,
    VergeDomain,
    assemble_h,
    assemble_potential,
    assemble_qI,
    assemble_qI_parts,
    assemble_tbeta_1d,
    assemble_weighted_mass,
    build_mesh,
    gradient_operators,
    write_coo,
    write_mesh,
)
from .eigensolve import EigOptions, EigResult, dense_oracle, smallest_eigs
from .spectra import (
    ConvergenceStudy,
    DispersionCurve,
    SpectrumReport,
    convergence_study,
    dispersion_curve,
    essential_threshold,
    truncated_spectrum,
)
from .certificates import (
    BracketingReport,
    HardyCertificate,
    HardyVerification,
    VariationalCertificate,
    alpha0_scan,
    bracket_thresholds,
    certify_condition_ii,
    find_alpha0,
    ground_state_identity,
    hardy_constants,
    lambda_I,
    one_d_hardy_check,
    rayleigh_condition_i,
    verify_hardy,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "BallAreaEstimate",
    "CosineDeficit",
    "Deficit",
    "GaussianDeficit",
    "IndicatorDeficit",
    "ObstructionDeficit",
    "PlateauDeficit",
    "ScaledDeficit",
    "SchemaGeometry",
    "ShearProfile",
    "StripGeometry",
    "SumDeficit",
    "TabulatedDeficit",
    "ball_intersection_area",
    "calibrated_two_level",
    "excess_integral",
    "schema_points",
    "two_level_deficit",
    # discretization
    "AssembledOperator",
    "SlabDomain",
    "StructuredMesh",
    "TriangleDomain",
    "VergeDomain",
    "assemble_h",
    "assemble_potential",
    "assemble_qI",
    "assemble_qI_parts",
    "assemble_tbeta_1d",
    "assemble_weighted_mass",
    "build_mesh",
    "gradient_operators",
    "write_coo",
    "write_mesh",
    # eigensolve
    "EigOptions",
    "EigResult",
    "dense_oracle",
    "smallest_eigs",
    # spectra
    "ConvergenceStudy",
    "DispersionCurve",
    "SpectrumReport",
    "convergence_study",
    "dispersion_curve",
    "essential_threshold",
    "truncated_spectrum",
    # certificates
    "BracketingReport",
    "HardyCertificate",
    "HardyVerification",
    "VariationalCertificate",
    "alpha0_scan",
    "bracket_thresholds",
    "certify_condition_ii",
    "find_alpha0",
    "ground_state_identity",
    "hardy_constants",
    "lambda_I",
    "one_d_hardy_check",
    "rayleigh_condition_i",
    "verify_hardy",
]
