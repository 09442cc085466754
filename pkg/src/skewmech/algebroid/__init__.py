"""Skew-symmetric algebroids and the almost differential d^D.

This package provides:
- Algebroid realizations (expression tables, adapted frames, restrictions to D)
- Sections of D* used as Hamilton-Jacobi candidates
- d^D on functions, 1-forms and k-forms, and the (d^D)^2 obstruction
- Recovery of structure functions from a linear bracket
"""

from .constrained import restrict_constrained
from .extraction import CoordinateBracket, ExtractedStructure, extract_structure
from .forms import (
    KForm,
    KFormValue,
    base_gradient,
    bracket_defect_fields,
    cocycle_residual,
    curvature_of_function,
    d_function,
    d_kform,
    d_oneform,
    wedge,
)
from .sections import DualSection, ExactSection, NumericSection, Section1Form, constant_section
from .structure import (
    BasePoint,
    ChartDomain,
    ExpressionAlgebroid,
    FramedAlgebroid,
    PointLike,
    RestrictedAlgebroid,
    SkewAlgebroid,
    as_array,
    standard_tangent,
)

__all__ = [
    "BasePoint",
    "ChartDomain",
    "CoordinateBracket",
    "DualSection",
    "ExactSection",
    "ExpressionAlgebroid",
    "ExtractedStructure",
    "FramedAlgebroid",
    "KForm",
    "KFormValue",
    "NumericSection",
    "PointLike",
    "RestrictedAlgebroid",
    "Section1Form",
    "SkewAlgebroid",
    "as_array",
    "base_gradient",
    "bracket_defect_fields",
    "cocycle_residual",
    "constant_section",
    "curvature_of_function",
    "d_function",
    "d_kform",
    "d_oneform",
    "extract_structure",
    "restrict_constrained",
    "standard_tangent",
    "wedge",
]
