"""Closed-form target statistics for maximally entangled two- and three-
particle experiments.

These are the distributions the backward-conditional models must reproduce:
the four Bell-pair outcome probabilities for coplanar measurement angles,
the three-party GHZ parity correlations for binary axis choices, the
Popescu-Rohrlich box, and the single-wing marginals (uniformly 1/2 for every
maximally entangled target in scope).

Angle-dependent quantities are floats; the GHZ and PR-box values are exact
dyadic rationals and stay on the rational backend.  No state vectors or
operators appear anywhere: each function is a direct formula.
"""

from __future__ import annotations

import math
from fractions import Fraction

#: Valid Bell-pair labels.  Pairs 1 and 2 are the (|1,1> +/- |-1,-1>)/sqrt(2)
#: states, pairs 3 and 4 the (|1,-1> +/- |-1,1>)/sqrt(2) states.
BELL_STATES = (1, 2, 3, 4)

#: Measurement outcomes on every wing.
OUTCOMES = (1, -1)

#: Binary axis settings: 0 measures along x, 1 along y.
AXES = (0, 1)


def _check_state(state: int) -> None:
    if state not in BELL_STATES:
        raise ValueError(f"Bell state label must be in {BELL_STATES}, got {state!r}")


def _check_outcome(a) -> None:
    if a not in OUTCOMES:
        raise ValueError(f"outcome must be +1 or -1, got {a!r}")


def _check_axis(s) -> None:
    if s not in AXES:
        raise ValueError(f"binary setting must be 0 or 1, got {s!r}")


def _check_angle(alpha) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError(f"angle must be finite, got {alpha!r}")
    return alpha


def bell_prob(state: int, a1: int, a2: int, alpha1: float, alpha2: float) -> float:
    """Outcome probability for one Bell pair at coplanar angles.

    States 1 and 2 give (1 +/- a1*a2*cos(alpha1 - alpha2))/4; states 3 and 4
    give (1 -/+ a1*a2*cos(alpha1 + alpha2))/4.  Angles are radians.
    """
    _check_state(state)
    _check_outcome(a1)
    _check_outcome(a2)
    alpha1 = _check_angle(alpha1)
    alpha2 = _check_angle(alpha2)
    if state in (1, 2):
        c = math.cos(alpha1 - alpha2)
        sign = 1 if state == 1 else -1
    else:
        c = math.cos(alpha1 + alpha2)
        sign = -1 if state == 3 else 1
    return 0.25 * (1.0 + sign * a1 * a2 * c)


def bell_expectation(state: int, alpha1: float, alpha2: float) -> float:
    """Correlation <a1*a2> for one Bell pair at the given angles.

    Equals +cos(alpha1 - alpha2) for state 1, -cos(alpha1 - alpha2) for
    state 2, -cos(alpha1 + alpha2) for state 3, +cos(alpha1 + alpha2) for
    state 4.
    """
    _check_state(state)
    alpha1 = _check_angle(alpha1)
    alpha2 = _check_angle(alpha2)
    if state in (1, 2):
        c = math.cos(alpha1 - alpha2)
        return c if state == 1 else -c
    c = math.cos(alpha1 + alpha2)
    return -c if state == 3 else c


def ghz_prob(a1: int, a2: int, a3: int, s1: int, s2: int, s3: int) -> Fraction:
    """GHZ outcome probability: 1/4 on parity-allowed triples, else 0.

    A triple is allowed when a1*a2*a3 == (-1)**(s1 + s2 + s3).  Exactly four
    of the eight outcome triples are allowed at every setting combination.
    """
    for a in (a1, a2, a3):
        _check_outcome(a)
    for s in (s1, s2, s3):
        _check_axis(s)
    if a1 * a2 * a3 == (-1) ** (s1 + s2 + s3):
        return Fraction(1, 4)
    return Fraction(0)


def pr_prob(a1: int, a2: int, s1: int, s2: int) -> Fraction:
    """Popescu-Rohrlich box: 1/2 when a1*a2 == (-1)**(s1*s2), else 0.

    In bit encoding this is the XOR game condition; here outcomes are +/-1
    and settings binary.
    """
    _check_outcome(a1)
    _check_outcome(a2)
    _check_axis(s1)
    _check_axis(s2)
    if a1 * a2 == (-1) ** (s1 * s2):
        return Fraction(1, 2)
    return Fraction(0)


def wing_marginal(a: int, setting=None) -> Fraction:
    """Single-wing outcome probability: exactly 1/2, independent of setting.

    Every maximally entangled target in scope has uniform wing marginals;
    the setting argument is accepted for signature uniformity and ignored.
    """
    _check_outcome(a)
    return Fraction(1, 2)
