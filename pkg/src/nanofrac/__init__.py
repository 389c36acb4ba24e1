"""Effective stiffness, fracture energy and phase-field fracture of CNT composites."""

__version__ = "0.1.0"

from .tensors import (
    Orientation,
    ODF3D,
    StiffnessTensor,
    ConcentrationTensor,
    isotropic_stiffness,
    orientational_average,
    rotate_stiffness,
)
from .eshelby import EshelbyTensor, eshelby_sphere, eshelby_spheroid

__all__ = [
    "Orientation",
    "ODF3D",
    "StiffnessTensor",
    "ConcentrationTensor",
    "isotropic_stiffness",
    "orientational_average",
    "rotate_stiffness",
    "EshelbyTensor",
    "eshelby_sphere",
    "eshelby_spheroid",
]
