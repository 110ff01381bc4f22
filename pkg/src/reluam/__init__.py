"""Alternating minimization for recovering ReLU teacher networks."""

from reluam.model import (
    Dataset,
    TeacherNetwork,
    Variant,
    forward_one_hidden,
    forward_skipped,
    forward_two_hidden,
    relu,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "TeacherNetwork",
    "Variant",
    "forward_one_hidden",
    "forward_skipped",
    "forward_two_hidden",
    "relu",
    "__version__",
]
