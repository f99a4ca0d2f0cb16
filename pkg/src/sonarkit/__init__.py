"""Sphere-mean (sonar) and Radon transforms on the upper half-space.

The package computes the forward sonar transform (integrals over spheres
centered on the boundary hyperplane), the horizontal/vertical/slanted Radon
transforms, the fractional integral and derivative families connecting them,
and a full sonar-to-image reconstruction pipeline in two dimensions.
"""

from .fractional import frac_d1, frac_derivative, frac_integral, op_v, op_w
from .geometry import Ball
from .phantoms import (
    BallIndicator,
    GaussianBump,
    Phantom,
    PhantomFormatError,
    PolyBump,
    format_phantom,
    load_phantom,
    parse_phantom,
    save_phantom,
)
from .quadrature import (
    DEFAULT_SPEC,
    AngularProfile,
    DomainError,
    LimitEstimate,
    QuadratureSpec,
    RadialProfile,
    extrapolate_limit,
    integrate_1d,
    integrate_endpoint_singular,
    integrate_unit_sphere,
    unit_sphere_area,
)
from .radon import (
    CylinderParam,
    Horizontal,
    PowerLaw,
    Reciprocal,
    Slanted,
    Unit,
    Vertical,
    cylinder_transform,
    format_sinogram,
    load_sinogram,
    parse_sinogram,
    radon_centerset,
    radon_h,
    radon_s,
    radon_v,
    radon_weighted,
    save_sinogram,
)
from .relations import (
    IdentityReport,
    PhantomSonarData,
    ReconstructionResult,
    TabulatedSonarData2D,
    TabulatedSonarData3D,
    check_cylinder,
    check_horizontal,
    check_inverse,
    check_john,
    check_semigroup,
    check_slanted_2d,
    check_vertical,
    format_image_dump,
    format_image_pgm,
    format_report,
    radon_from_sonar,
    reconstruct_2d,
    save_report,
    vertical_limit_samples,
)
from .sonar import (
    SonarSample,
    format_sonar_table,
    load_sonar_table,
    parse_sonar_table,
    save_sonar_table,
    sonar_2d,
    sonar_2d_batch,
    sonar_3d,
    sonar_3d_batch,
    sonar_grid,
)

__all__ = [
    "DEFAULT_SPEC",
    "AngularProfile",
    "Ball",
    "BallIndicator",
    "CylinderParam",
    "DomainError",
    "GaussianBump",
    "Horizontal",
    "IdentityReport",
    "LimitEstimate",
    "Phantom",
    "PhantomFormatError",
    "PhantomSonarData",
    "PolyBump",
    "PowerLaw",
    "QuadratureSpec",
    "RadialProfile",
    "Reciprocal",
    "ReconstructionResult",
    "Slanted",
    "SonarSample",
    "TabulatedSonarData2D",
    "TabulatedSonarData3D",
    "Unit",
    "Vertical",
    "check_cylinder",
    "check_horizontal",
    "check_inverse",
    "check_john",
    "check_semigroup",
    "check_slanted_2d",
    "check_vertical",
    "cylinder_transform",
    "extrapolate_limit",
    "format_image_dump",
    "format_image_pgm",
    "format_phantom",
    "format_report",
    "format_sinogram",
    "format_sonar_table",
    "frac_d1",
    "frac_derivative",
    "frac_integral",
    "integrate_1d",
    "integrate_endpoint_singular",
    "integrate_unit_sphere",
    "load_phantom",
    "load_sinogram",
    "load_sonar_table",
    "op_v",
    "op_w",
    "parse_phantom",
    "parse_sinogram",
    "parse_sonar_table",
    "radon_centerset",
    "radon_from_sonar",
    "radon_h",
    "radon_s",
    "radon_v",
    "radon_weighted",
    "reconstruct_2d",
    "save_phantom",
    "save_report",
    "save_sinogram",
    "save_sonar_table",
    "sonar_2d",
    "sonar_2d_batch",
    "sonar_3d",
    "sonar_3d_batch",
    "sonar_grid",
    "unit_sphere_area",
    "vertical_limit_samples",
]

__version__ = "0.1.0"
