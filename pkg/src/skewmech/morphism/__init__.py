"""Bundle morphisms between dual bundles, morphism checks and reduction of HJ solutions."""

from .bundle_map import BundleMorphism, identity_morphism, pullback_section, scale_fiber_row
from .checks import (
    MorphismReport,
    TransferReport,
    check_hamiltonian_morphism,
    check_lap_morphism,
    related_differential_defect,
    transfer_hj,
)

__all__ = [
    "BundleMorphism",
    "MorphismReport",
    "TransferReport",
    "check_hamiltonian_morphism",
    "check_lap_morphism",
    "identity_morphism",
    "pullback_section",
    "related_differential_defect",
    "scale_fiber_row",
    "transfer_hj",
]
