"""Linear operators of the reconstruction problem: projector K, discrete
gradient D and norm estimation."""

from .sparse import ApplyMode, SparseOperator, apply, identity
from .projector import (
    Geometry,
    GeometryMode,
    build_projector,
    fan_geometry,
    parallel_geometry,
    siddon_ray,
)
from .gradient import (
    Boundary,
    GradientField,
    dhat,
    difference_matrix,
    gradient,
    gradient_magnitude,
    gradient_operator,
    norm21,
    total_variation,
)
from .power import NormEstimate, power_method_norm


__all__ = [
    "ApplyMode",
    "SparseOperator",
    "apply",
    "identity",
    "Geometry",
    "GeometryMode",
    "build_projector",
    "fan_geometry",
    "parallel_geometry",
    "siddon_ray",
    "Boundary",
    "GradientField",
    "dhat",
    "difference_matrix",
    "gradient",
    "gradient_magnitude",
    "gradient_operator",
    "norm21",
    "total_variation",
    "NormEstimate",
    "power_method_norm",
]
