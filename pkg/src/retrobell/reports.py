"""Shared report containers for the verification surfaces.

Checks never raise on failure: a failed property is an outcome, carried in a
report together with the worst-case deviation and where it occurred, so a
falsified claim is diagnosable rather than just red.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping


def as_number(x):
    """Coerce a probability-like value to a JSON number.

    Integral rationals become ints (so exact-zero deviations serialize as a
    literal 0); other rationals and floats become floats.
    """
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        return float(x)
    if isinstance(x, bool) or isinstance(x, int):
        return int(x)
    return float(x)


def jsonable(obj):
    """Recursively convert report payloads to plain JSON-ready values."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (Fraction, float, int)):
        return as_number(obj)
    return obj


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification sweep over a settings grid.

    ``check`` is one of "si", "no_signalling", "recovery", "kernel_norm".
    ``max_deviation`` is the largest deviation encountered and ``worst_case``
    records where it happened.
    """

    check: str
    passed: bool
    max_deviation: Fraction | float
    tolerance: Fraction | float
    backend: str
    worst_case: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": bool(self.passed),
            "max_deviation": as_number(self.max_deviation),
            "worst_case": jsonable(self.worst_case) if self.worst_case else None,
            "tolerance": as_number(self.tolerance),
            "backend": self.backend,
        }


@dataclass(frozen=True)
class WitnessReport:
    """Side-by-side comparison of a factorized and a joint conditional.

    ``violated`` is True when the product of single-wing conditionals differs
    from the joint conditional by more than the tolerance.  In JSON the
    "pass" field carries ``violated``: the witness "passes" when it actually
    exhibits the factorization failure it was built to show.
    """

    product_value: Fraction | float
    joint_value: Fraction | float
    difference: Fraction | float
    violated: bool
    tolerance: Fraction | float
    backend: str
    label: str
    settings: tuple
    outcomes: tuple

    check: str = field(default="lc_witness", init=False)

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": bool(self.violated),
            "max_deviation": as_number(self.difference),
            "worst_case": {
                "label": self.label,
                "settings": jsonable(self.settings),
                "outcomes": jsonable(self.outcomes),
                "product_of_wing_conditionals": as_number(self.product_value),
                "joint_conditional": as_number(self.joint_value),
            },
            "tolerance": as_number(self.tolerance),
            "backend": self.backend,
        }
