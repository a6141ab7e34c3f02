"""Catalogue of the built-in example systems with their known weights.

Tags are the stable names used in config files.  A weight of None means
no weight is known to this catalogue; the classifier then reports
neither_known rather than asserting the condition fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nonlinearity as nl
from .condition_h import WeightMatrix, constant_diagonal_weight, rotated_example_weight

__all__ = ["ExampleSystem", "build_example", "EXAMPLE_TAGS"]


@dataclass(frozen=True)
class ExampleSystem:
    tag: str
    tensor: nl.CoefficientTensor
    weight: WeightMatrix | None
    c_ab: np.ndarray | None = None
    c0: float | None = None


EXAMPLE_TAGS = (
    "FirstExampleA",
    "SecondExampleA",
    "ThirdExampleA",
    "TypicalExample",
    "TypicalExampleR",
    "Simple",
)


def build_example(
    tag: str,
    c0: float = 1.0,
    c_ab: np.ndarray | None = None,
    c1: float = 1.0,
    c2: float = 1.0,
) -> ExampleSystem:
    """Construct a catalogue system.

    TypicalExample takes (c0, c_ab); c_ab defaults to the time-only index
    array giving c(omega) = 1.  Simple takes (c1, c2) and carries the
    weight diag(1, c1/c2) exactly when c1*c2 > 0.
    """
    if tag == "FirstExampleA":
        return ExampleSystem(tag, nl.first_example_a(), None)
    if tag == "SecondExampleA":
        return ExampleSystem(tag, nl.second_example_a(), None)
    if tag == "ThirdExampleA":
        return ExampleSystem(tag, nl.third_example_a(), None)
    if tag == "TypicalExample":
        if c_ab is None:
            c_ab = nl.c_ab_time_only(1.0)
        tensor = nl.typical_example(c0, c_ab)
        return ExampleSystem(
            tag, tensor, constant_diagonal_weight([1.0, c0]), c_ab=np.asarray(c_ab), c0=c0
        )
    if tag == "TypicalExampleR":
        return ExampleSystem(tag, nl.typical_example_r(), rotated_example_weight())
    if tag == "Simple":
        weight = constant_diagonal_weight([1.0, c1 / c2]) if c1 * c2 > 0 else None
        return ExampleSystem(tag, nl.simple_system(c1, c2), weight)
    raise ValueError(f"unknown example tag {tag!r}")
