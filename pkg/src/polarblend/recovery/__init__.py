"""Recovery of blended stacking sequences from target polar properties."""

from .blending import (
    BlendCheck,
    BlendingScheme,
    SchemeEntry,
    adjacency_scheme,
    assemble_stacks,
    default_scheme,
    is_blended,
    read_scheme,
    scheme_from_stacks,
    write_scheme,
)
from .residuals import (
    BatchEvaluator,
    ResidualBreakdown,
    TargetPolar,
    orientation_grid,
    residuals,
    split_target,
    tensor_norm,
)
from .search import RecoveryResult, SearchConfig, independent_scheme, recover, recover_single

__all__ = [
    "BatchEvaluator", "BlendCheck", "BlendingScheme", "RecoveryResult", "ResidualBreakdown",
    "SchemeEntry", "SearchConfig", "TargetPolar", "adjacency_scheme", "assemble_stacks", "default_scheme",
    "independent_scheme", "is_blended", "orientation_grid", "read_scheme", "recover",
    "recover_single", "residuals", "scheme_from_stacks", "split_target", "tensor_norm",
    "write_scheme",
]
