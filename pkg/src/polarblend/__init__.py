"""Polar-parameter laminate design: homogenization, panel constraints,
ply-count discretization and blended stacking-sequence recovery."""

from .polar import (
    LaminateHomog,
    PanelVars,
    PlyMaterial,
    PolarQuad,
    PolarShear,
    StackingSequence,
    laminate_homogenized,
    panel_from_laminate,
    polar_from_quad,
    polar_from_shear,
    ply_reduced_stiffness,
    quad_from_polar,
    shear_from_polar,
    stacking_coefficients,
)
from .datasets import load_material, t300_5208
from .notation import format_stack, parse_stack

__version__ = "0.1.0"

__all__ = [
    "LaminateHomog", "PanelVars", "PlyMaterial", "PolarQuad", "PolarShear", "StackingSequence",
    "format_stack", "laminate_homogenized", "load_material", "panel_from_laminate", "parse_stack",
    "ply_reduced_stiffness", "polar_from_quad", "polar_from_shear", "quad_from_polar",
    "shear_from_polar", "stacking_coefficients", "t300_5208",
]
