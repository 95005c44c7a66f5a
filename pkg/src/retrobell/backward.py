"""Backward-conditional collider models.

A model here factorizes the joint distribution of outcomes and a hidden
label as

    P(a_1, ..., a_w, lambda | settings)
        = P(a_1 | setting_1) * ... * P(a_w | setting_w)
          * P(lambda | a_1, ..., a_w, settings)

i.e. each wing's outcome is drawn from a setting-independent marginal, and
the hidden label is distributed *conditionally on the outcomes and settings*
through a collider kernel.  Unconditionally the outcomes are independent
across wings; conditioning on a particular label value induces the
correlations, which is ordinary collider bias put to work.

Two model properties are checked rather than assumed:

* statistical independence (SI): the label's marginal distribution,
  obtained by summing the kernel against the wing marginals, matches the
  declared prior at every setting combination;
* no-signalling: each wing's outcome distribution, conditional on a label
  value, is unaffected by the other wings' settings.

The stock Bell-pair model satisfies both while violating the per-wing
factorization of the joint conditional (the local-causality witness).  The
signalling counterexample model deliberately satisfies neither: its kernel
pins wing 1's outcome to the sign of wing 2's setting, so conditioning on
its label lets a remote setting choose a local outcome.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .dist import (
    FLOAT,
    FLOAT_TOL,
    RATIONAL,
    ConstructionError,
    Joint,
    Prob,
    Variable,
    condition,
    make_joint,
    marginalize,
    tv_distance,
)
from .quantum import OUTCOMES, bell_prob
from .reports import CheckReport, WitnessReport

ANGLE = "angle"
BINARY = "binary"

#: Name of the hidden-label variable in every assembled joint.
LAMBDA = "lambda"

BELL_LABELS = ("lambda1", "lambda2", "lambda3", "lambda4")


def sign_of(x) -> int:
    """Sign with the convention sign(0) = +1."""
    return 1 if x >= 0 else -1


@dataclass(frozen=True)
class Wing:
    """One measurement wing: a setting slot plus an outcome marginal.

    ``p_plus`` is P(outcome = +1 | setting); the marginal is setting-
    independent by construction.  ``setting_kind`` is either a continuous
    angle in radians or a binary axis choice in {0, 1}.
    """

    outcome_name: str
    setting_name: str
    setting_kind: str
    p_plus: Prob = Fraction(1, 2)

    def __post_init__(self):
        if self.setting_kind not in (ANGLE, BINARY):
            raise ConstructionError(f"unknown setting kind {self.setting_kind!r}")
        if not 0 <= self.p_plus <= 1:
            raise ConstructionError(f"wing marginal {self.p_plus!r} outside [0, 1]")

    def marginal(self, outcome: int) -> Prob:
        return self.p_plus if outcome == 1 else 1 - self.p_plus

    def check_setting(self, value):
        if self.setting_kind == BINARY:
            if value not in (0, 1):
                raise ConstructionError(
                    f"{self.setting_name} must be 0 or 1, got {value!r}"
                )
            return value
        value = float(value)
        if not math.isfinite(value):
            raise ConstructionError(f"{self.setting_name} must be finite")
        return value


@dataclass(frozen=True)
class LambdaSpace:
    """Ordered hidden-label values with a strictly positive prior."""

    labels: tuple[str, ...]
    priors: tuple[Prob, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.priors):
            raise ConstructionError("labels and priors must align")
        if len(set(self.labels)) != len(self.labels):
            raise ConstructionError("duplicate lambda labels")
        for label, p in zip(self.labels, self.priors):
            if p <= 0:
                raise ConstructionError(
                    f"prior of {label!r} must be positive (zero-prior labels "
                    "make conditioning ill-defined)"
                )
        total = sum(self.priors)
        if isinstance(total, Fraction):
            if total != 1:
                raise ConstructionError(f"priors sum to {total}, not 1")
        elif abs(total - 1.0) > FLOAT_TOL:
            raise ConstructionError(f"priors sum to {total!r}, not 1")

    def prior(self, label: str) -> Prob:
        return self.priors[self.labels.index(label)]


@dataclass(frozen=True)
class ColliderKernel:
    """The conditional distribution of the label given outcomes and settings.

    ``func(outcomes, settings, label)`` returns one kernel probability.  For
    labels constructed as a normalization constant times a target outcome
    distribution, ``normalization`` records that constant.
    """

    labels: tuple[str, ...]
    func: Callable[[tuple, tuple, str], Prob]
    normalization: Mapping[str, Prob] = field(default_factory=dict)

    def probability(self, outcomes: tuple, settings: tuple, label: str) -> Prob:
        if label not in self.labels:
            raise ConstructionError(f"unknown lambda label {label!r}")
        return self.func(outcomes, settings, label)


@dataclass(frozen=True)
class BackwardModel:
    """An immutable backward-conditional model over two or three wings.

    ``quantum_targets`` maps labels to the closed-form outcome distribution
    the kernel was built from, where one exists; the recovery check compares
    the label-conditioned model against these targets.
    """

    name: str
    wings: tuple[Wing, ...]
    lam: LambdaSpace
    kernel: ColliderKernel
    backend: str
    quantum_targets: Mapping[str, Callable[[tuple, tuple], Prob]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        if not 2 <= len(self.wings) <= 3:
            raise ConstructionError("models have two or three wings")
        if self.kernel.labels != self.lam.labels:
            raise ConstructionError("kernel and lambda space disagree on labels")
        if self.backend not in (RATIONAL, FLOAT):
            raise ConstructionError(f"unknown backend {self.backend!r}")

    # -- structure ---------------------------------------------------------

    @property
    def tolerance(self) -> Prob:
        return Fraction(0) if self.backend == RATIONAL else FLOAT_TOL

    def outcome_variables(self) -> tuple[Variable, ...]:
        return tuple(Variable(w.outcome_name, OUTCOMES) for w in self.wings)

    def lambda_variable(self) -> Variable:
        return Variable(LAMBDA, self.lam.labels)

    def check_settings(self, settings: Sequence) -> tuple:
        settings = tuple(settings)
        if len(settings) != len(self.wings):
            raise ConstructionError(
                f"{self.name} takes {len(self.wings)} settings, got {len(settings)}"
            )
        return tuple(w.check_setting(s) for w, s in zip(self.wings, settings))

    # -- assembly and conditioning ------------------------------------------

    def assemble_joint(self, settings: Sequence) -> Joint:
        """The full joint over (outcomes..., lambda) at fixed settings.

        Entry weights are the product of the wing marginals and the collider
        kernel, per the model factorization.
        """
        settings = self.check_settings(settings)
        variables = self.outcome_variables() + (self.lambda_variable(),)
        weights: dict[tuple, Prob] = {}
        for combo in itertools.product(OUTCOMES, repeat=len(self.wings)):
            base: Prob = 1
            for wing, outcome in zip(self.wings, combo):
                base = base * wing.marginal(outcome)
            if not base:
                continue
            for label in self.lam.labels:
                k = self.kernel.probability(combo, settings, label)
                w = base * k
                if w:
                    weights[combo + (label,)] = w
        return make_joint(variables, weights, backend=self.backend)

    def lambda_marginal(self, settings: Sequence) -> Joint:
        """P(lambda | settings): outcomes summed out of the assembled joint."""
        return marginalize(self.assemble_joint(settings), [LAMBDA])

    def condition_on_lambda(self, label: str, settings: Sequence) -> Joint:
        """P(outcomes | settings, label): the postselected outcome table.

        Raises the conditioning-on-null error when the label has zero
        probability at these settings.
        """
        if label not in self.lam.labels:
            raise ConstructionError(f"unknown lambda label {label!r}")
        return condition(self.assemble_joint(settings), {LAMBDA: label})

    # -- checked properties --------------------------------------------------

    def verify_si(self, settings_grid: Iterable[Sequence]) -> CheckReport:
        """Statistical independence: P(lambda | settings) equals the prior.

        The deviation is measured per label at every grid point; the check
        passes when the worst deviation is within the backend tolerance.
        """
        tol = self.tolerance
        max_dev: Prob = Fraction(0) if self.backend == RATIONAL else 0.0
        worst = None
        count = 0
        for settings in settings_grid:
            count += 1
            marg = self.lambda_marginal(settings)
            for label, prior in zip(self.lam.labels, self.lam.priors):
                dev = abs(marg.prob((label,)) - prior)
                if dev > max_dev:
                    max_dev = dev
                    worst = {"settings": tuple(settings), "label": label}
        if count == 0:
            raise ConstructionError("empty settings grid")
        return CheckReport("si", max_dev <= tol, max_dev, tol, self.backend, worst)

    def verify_no_signalling(
        self, label: str, settings_grid: Iterable[Sequence]
    ) -> CheckReport:
        """No-signalling at a fixed label value.

        For each wing and each value of its local setting on the grid, the
        wing's conditional outcome probabilities are collected across all
        remote-setting variations; the deviation is the spread (max minus
        min) of each such collection.
        """
        tol = self.tolerance
        seen: dict[tuple, dict] = {}
        for settings in settings_grid:
            settings = self.check_settings(settings)
            cond = self.condition_on_lambda(label, settings)
            for i, wing in enumerate(self.wings):
                wing_marg = marginalize(cond, [wing.outcome_name])
                for outcome in OUTCOMES:
                    p = wing_marg.prob((outcome,))
                    key = (i, settings[i], outcome)
                    slot = seen.setdefault(
                        key, {"min": p, "max": p, "at_min": settings, "at_max": settings}
                    )
                    if p < slot["min"]:
                        slot["min"], slot["at_min"] = p, settings
                    if p > slot["max"]:
                        slot["max"], slot["at_max"] = p, settings
        if not seen:
            raise ConstructionError("empty settings grid")
        max_dev: Prob = Fraction(0) if self.backend == RATIONAL else 0.0
        worst = None
        for (i, local, outcome), slot in seen.items():
            spread = slot["max"] - slot["min"]
            if spread > max_dev:
                max_dev = spread
                worst = {
                    "wing": self.wings[i].outcome_name,
                    "local_setting": local,
                    "outcome": outcome,
                    "label": label,
                    "min_probability": slot["min"],
                    "max_probability": slot["max"],
                    "min_at_settings": slot["at_min"],
                    "max_at_settings": slot["at_max"],
                }
        return CheckReport(
            "no_signalling", max_dev <= tol, max_dev, tol, self.backend, worst
        )

    def verify_kernel_normalization(
        self, settings_grid: Iterable[Sequence]
    ) -> CheckReport:
        """Kernel rows sum to one over labels, with every value in [0, 1]."""
        tol = self.tolerance
        max_dev: Prob = Fraction(0) if self.backend == RATIONAL else 0.0
        worst = None
        count = 0
        for settings in settings_grid:
            count += 1
            settings = self.check_settings(settings)
            for combo in itertools.product(OUTCOMES, repeat=len(self.wings)):
                values = [
                    self.kernel.probability(combo, settings, label)
                    for label in self.lam.labels
                ]
                range_excess = max(max(-k, k - 1) for k in values)
                dev = max(abs(sum(values) - 1), range_excess)
                if dev > max_dev:
                    max_dev = dev
                    worst = {"settings": settings, "outcomes": combo}
        if count == 0:
            raise ConstructionError("empty settings grid")
        return CheckReport(
            "kernel_norm", max_dev <= tol, max_dev, tol, self.backend, worst
        )

    def verify_recovery(self, settings_grid: Iterable[Sequence]) -> CheckReport:
        """Label-conditioned model equals its closed-form target distribution.

        Measured as total-variation distance per (label, settings) pair; only
        labels with a registered quantum target participate.
        """
        if not self.quantum_targets:
            raise ConstructionError(
                f"{self.name} has no quantum targets to recover"
            )
        tol = self.tolerance
        variables = self.outcome_variables()
        max_dev: Prob = Fraction(0) if self.backend == RATIONAL else 0.0
        worst = None
        count = 0
        for settings in settings_grid:
            count += 1
            settings = self.check_settings(settings)
            for label, target in self.quantum_targets.items():
                conditioned = self.condition_on_lambda(label, settings)
                weights = {
                    combo: target(combo, settings)
                    for combo in itertools.product(OUTCOMES, repeat=len(self.wings))
                }
                target_joint = make_joint(variables, weights, backend=self.backend)
                dev = tv_distance(conditioned, target_joint)
                if dev > max_dev:
                    max_dev = dev
                    worst = {"settings": settings, "label": label}
        if count == 0:
            raise ConstructionError("empty settings grid")
        return CheckReport(
            "recovery", max_dev <= tol, max_dev, tol, self.backend, worst
        )

    def lc_violation_witness(
        self, label: str, settings: Sequence, outcomes: Sequence
    ) -> WitnessReport:
        """Compare the product of wing conditionals against the joint one.

        Local causality would make P(outcomes | settings, label) factorize
        into per-wing conditionals; the witness reports both numbers and
        whether they differ beyond tolerance.
        """
        settings = self.check_settings(settings)
        outcomes = tuple(outcomes)
        cond = self.condition_on_lambda(label, settings)
        joint_p = cond.prob(outcomes)
        product: Prob = 1
        for wing, outcome in zip(self.wings, outcomes):
            product = product * marginalize(cond, [wing.outcome_name]).prob((outcome,))
        difference = abs(joint_p - product)
        return WitnessReport(
            product_value=product,
            joint_value=joint_p,
            difference=difference,
            violated=difference > self.tolerance,
            tolerance=self.tolerance,
            backend=self.backend,
            label=label,
            settings=settings,
            outcomes=outcomes,
        )


def verify_no_signalling_all(
    model: BackwardModel, settings_grid: Sequence[Sequence]
) -> CheckReport:
    """No-signalling aggregated over every label of the model."""
    grid = [tuple(s) for s in settings_grid]
    worst = None
    all_passed = True
    for label in model.lam.labels:
        rep = model.verify_no_signalling(label, grid)
        all_passed = all_passed and rep.passed
        if worst is None or rep.max_deviation > worst.max_deviation:
            worst = rep
    return CheckReport(
        "no_signalling",
        all_passed,
        worst.max_deviation,
        worst.tolerance,
        worst.backend,
        worst.worst_case,
    )


# ---------------------------------------------------------------------------
# Settings grids
# ---------------------------------------------------------------------------


def angle_grid(resolution: int = 16, *, centered: bool = False) -> tuple[float, ...]:
    """Evenly spaced angles: [0, 2pi) by default, [-pi, pi) when centered.

    The centered variant matters for models sensitive to the sign of an
    angle; the default never produces a negative setting.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    step = 2.0 * math.pi / resolution
    offset = -math.pi if centered else 0.0
    return tuple(offset + step * k for k in range(resolution))


def settings_grid(
    model: BackwardModel, resolution: int = 16, *, centered: bool = False
) -> list[tuple]:
    """Cartesian grid of setting tuples matched to the model's wing kinds.

    Angle wings contribute ``resolution`` evenly spaced angles; binary wings
    contribute {0, 1}.
    """
    axes = []
    for wing in model.wings:
        if wing.setting_kind == ANGLE:
            axes.append(angle_grid(resolution, centered=centered))
        else:
            axes.append((0, 1))
    return list(itertools.product(*axes))


def default_grid(model: BackwardModel, resolution: int = 16) -> list[tuple]:
    """The grid each model is verified on by default.

    The signalling counterexample gets a sign-centered angle grid: its
    kernel reacts to the sign of wing 2's setting, and a grid confined to
    non-negative angles would never exercise the flip.
    """
    centered = model.name == "counterexample"
    return settings_grid(model, resolution, centered=centered)


# ---------------------------------------------------------------------------
# Stock models
# ---------------------------------------------------------------------------


def bell_backward_model() -> BackwardModel:
    """The Bell-pair backward model.

    Four labels (one per Bell pair) with uniform prior 1/4, wing marginals
    1/2, and the collider kernel equal to the corresponding pair's outcome
    distribution.  The kernel's normalization constant is 1: the four pair
    distributions already sum to one at every outcome and angle pair, which
    is exactly what makes the label prior setting-independent.
    """
    wings = (
        Wing("a1", "alpha1", ANGLE, 0.5),
        Wing("a2", "alpha2", ANGLE, 0.5),
    )
    lam = LambdaSpace(BELL_LABELS, (0.25, 0.25, 0.25, 0.25))

    def kernel_func(outcomes, settings, label):
        state = BELL_LABELS.index(label) + 1
        return bell_prob(state, outcomes[0], outcomes[1], settings[0], settings[1])

    def make_target(state):
        def target(outcomes, settings):
            return bell_prob(state, outcomes[0], outcomes[1], settings[0], settings[1])

        return target

    return BackwardModel(
        name="bell",
        wings=wings,
        lam=lam,
        kernel=ColliderKernel(
            BELL_LABELS, kernel_func, {label: 1.0 for label in BELL_LABELS}
        ),
        backend=FLOAT,
        quantum_targets={
            label: make_target(i + 1) for i, label in enumerate(BELL_LABELS)
        },
    )


COUNTEREXAMPLE_LABELS = ("lambda1", "lambda_bar")


def signalling_counterexample_model() -> BackwardModel:
    """A deliberately broken model: remote settings steer local outcomes.

    The kernel assigns the first label probability 1 exactly when wing 1's
    outcome equals the sign of wing 2's setting (sign(0) = +1), and routes
    the complementary mass to a second label.  Wing 1's marginal is set to
    3/4 rather than the fine-tuned 1/2: with uniform marginals the label
    distribution would come out settings-independent despite the rigged
    kernel, masking the breakage.  As built, P(lambda1 | settings) flips
    between 3/4 and 1/4 with the sign of wing 2's setting (statistical
    independence fails), and conditioning on lambda1 pins wing 1's outcome
    to that sign (no-signalling fails with the maximal deviation of 1).
    """
    wings = (
        Wing("a1", "alpha1", ANGLE, 0.75),
        Wing("a2", "alpha2", ANGLE, 0.5),
    )
    lam = LambdaSpace(COUNTEREXAMPLE_LABELS, (0.5, 0.5))

    def kernel_func(outcomes, settings, label):
        pinned = 1.0 if outcomes[0] == sign_of(settings[1]) else 0.0
        return pinned if label == "lambda1" else 1.0 - pinned

    return BackwardModel(
        name="counterexample",
        wings=wings,
        lam=lam,
        kernel=ColliderKernel(COUNTEREXAMPLE_LABELS, kernel_func),
        backend=FLOAT,
        quantum_targets={},
    )
