"""Exclusion-process simulation and numerical analysis under KPZ 1:2:3 scaling."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    Boundary,
    HeightField,
    JumpLaw,
    LocalShape,
    ScalingParams,
    validate_jump_law,
)
from .engine import ModelSpec, build_state, kernel_kind, run_to_time, step  # noqa: F401
