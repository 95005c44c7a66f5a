"""Seedable Monte Carlo replay of backward models.

Sampling follows the model's own factorization order: wing outcomes are
drawn first, independently, from their setting-free marginals; the hidden
label is then drawn from the collider kernel at those outcomes and settings.
Postselection keeps the runs whose label matches a target value, which is
the operational reading of preparing that label.  Before postselection the
outcomes are uncorrelated; the kept runs reproduce the label-conditioned
distribution.

Reproducibility contract: the generator is Philox (counter-based), keyed by
a 64-bit seed; the algorithm name is recorded in every report.  Batched
sampling consumes the generator stream in exactly the order a run-by-run
loop would, so results are bit-identical for a given (model, settings, n,
seed, shards).  Sharded sampling derives one child seed per shard from the
root seed and merges counts in shard order, making parallel and serial
execution indistinguishable; ``shards=1`` is the single-stream baseline.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backward import BackwardModel
from .chsh import ChshConfig
from .dist import FLOAT, make_joint, tv_distance
from .quantum import OUTCOMES
from .reports import jsonable

RNG_ALGORITHM = "philox4x64"

#: Runs drawn per vectorized batch.  Fixed so that the consumed stream, and
#: therefore every report, depends only on (model, settings, n, seed, shards).
BATCH_RUNS = 1 << 16

#: Per-cell statistical gate: |z| <= 5 keeps the false-alarm probability per
#: cell below 1e-6, stable for repeated automated runs.
Z_GATE = 5.0

DEFAULT_CAP_FACTOR = 100


class AcceptanceCapError(RuntimeError):
    """Postselection hit the total-draw cap before accepting enough runs.

    Signals an unreachable or vanishing-probability target label.
    """

    def __init__(self, label, accepted, requested, total_draws, cap):
        super().__init__(
            f"accepted only {accepted}/{requested} runs for {label!r} "
            f"after {total_draws} draws (cap {cap})"
        )
        self.label = label
        self.accepted = accepted
        self.requested = requested
        self.total_draws = total_draws
        self.cap = cap


@dataclass(frozen=True)
class RunRecord:
    """One sampled experiment run."""

    settings: tuple
    outcomes: tuple
    label: str
    index: int = 0


def make_rng(seed, shard: int | None = None) -> np.random.Generator:
    """Philox generator for a 64-bit seed, optionally for one shard.

    Shard streams are derived through the seed sequence's spawn keys, so
    they are mutually independent and reproducible without shared state.
    """
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(int(seed))
    if shard is None:
        ss = root
    else:
        ss = np.random.SeedSequence(
            entropy=root.entropy, spawn_key=root.spawn_key + (int(shard),)
        )
    return np.random.Generator(np.random.Philox(ss))


def _sampling_tables(model: BackwardModel, settings: tuple):
    """Float lookup tables driving both scalar and batched sampling.

    Returns the per-wing P(+1) vector, the canonical outcome combos, and the
    per-combo cumulative kernel rows (last entry forced to 1.0 so that a
    uniform draw always lands on a label).
    """
    p_plus = np.array([float(w.p_plus) for w in model.wings], dtype=float)
    combos = list(itertools.product(OUTCOMES, repeat=len(model.wings)))
    labels = model.lam.labels
    cum = np.empty((len(combos), len(labels)), dtype=float)
    for row, combo in enumerate(combos):
        probs = [
            float(model.kernel.probability(combo, settings, label))
            for label in labels
        ]
        cum[row] = np.cumsum(probs)
    cum[:, -1] = 1.0
    return p_plus, combos, cum


def sample_run(
    model: BackwardModel,
    settings: Sequence,
    rng: np.random.Generator,
    index: int = 0,
) -> RunRecord:
    """Draw one run: outcomes from the wing marginals, then the label.

    Consumes exactly ``len(wings) + 1`` uniforms from the generator, in wing
    order then label, so repeated calls define the reference stream that the
    batched sampler reproduces.
    """
    settings = model.check_settings(settings)
    p_plus, combos, cum = _sampling_tables(model, settings)
    outcomes = tuple(
        1 if rng.random() < p_plus[i] else -1 for i in range(len(model.wings))
    )
    row = cum[combos.index(outcomes)]
    u = rng.random()
    label_idx = int(np.searchsorted(row, u, side="right"))
    label_idx = min(label_idx, len(model.lam.labels) - 1)
    return RunRecord(settings, outcomes, model.lam.labels[label_idx], index)


def _shard_postselect(model, settings, target_idx, quota, cap, rng):
    """Accept ``quota`` runs with the target label, or raise at the cap.

    Returns (counts per outcome combo, accepted, total draws, sum of the
    wing-1 * wing-2 product over all draws).  Stops at the draw that yields
    the final acceptance, so statistics cover exactly the runs a sequential
    sampler would have seen.
    """
    n_wings = len(model.wings)
    p_plus, combos, cum = _sampling_tables(model, settings)
    pow2 = np.array([2 ** (n_wings - 1 - i) for i in range(n_wings)], dtype=int)

    counts = np.zeros(len(combos), dtype=np.int64)
    accepted = 0
    total = 0
    uncond_product_sum = 0
    while accepted < quota:
        room = cap - total
        if room <= 0:
            raise AcceptanceCapError(
                model.lam.labels[target_idx], accepted, quota, total, cap
            )
        b = min(BATCH_RUNS, room)
        u = rng.random((b, n_wings + 1))
        outcomes = np.where(u[:, :n_wings] < p_plus, 1, -1)
        combo_idx = (outcomes == -1) @ pow2
        label_idx = (u[:, n_wings][:, None] >= cum[combo_idx]).sum(axis=1)
        hits = label_idx == target_idx
        new = int(hits.sum())
        if accepted + new >= quota:
            need = quota - accepted
            stop = int(np.nonzero(hits)[0][need - 1])
            outcomes = outcomes[: stop + 1]
            combo_idx = combo_idx[: stop + 1]
            hits = hits[: stop + 1]
            counts += np.bincount(combo_idx[hits], minlength=len(combos))
            accepted = quota
            total += stop + 1
            uncond_product_sum += int((outcomes[:, 0] * outcomes[:, 1]).sum())
            break
        counts += np.bincount(combo_idx[hits], minlength=len(combos))
        accepted += new
        total += b
        uncond_product_sum += int((outcomes[:, 0] * outcomes[:, 1]).sum())
    return counts, accepted, total, uncond_product_sum


def _cell_z(count: int, n: int, p: float) -> float:
    """Binomial z-score of a cell count against its exact probability."""
    if p <= 0.0 or p >= 1.0:
        expected = n * p
        return 0.0 if count == expected else math.inf
    return (count - n * p) / math.sqrt(n * p * (1.0 - p))


@dataclass(frozen=True)
class SampleReport:
    """Empirical-versus-exact comparison of one postselection experiment."""

    model: str
    label: str
    settings: tuple
    requested: int
    accepted: int
    total_draws: int
    cap: int
    shards: int
    seed: object
    rng_algorithm: str
    backend: str
    cells: tuple[dict, ...]
    tv_distance: float
    max_abs_z: float
    z_gate: float
    acceptance: dict
    unconditional: dict
    conditioned_correlation: dict
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "label": self.label,
            "settings": jsonable(self.settings),
            "requested": int(self.requested),
            "accepted": int(self.accepted),
            "total_draws": int(self.total_draws),
            "cap": int(self.cap),
            "shards": int(self.shards),
            "seed": jsonable(self.seed),
            "rng": self.rng_algorithm,
            "backend": self.backend,
            "cells": jsonable(list(self.cells)),
            "tv_distance": float(self.tv_distance),
            "max_abs_z": float(self.max_abs_z)
            if math.isfinite(self.max_abs_z)
            else "inf",
            "z_gate": float(self.z_gate),
            "acceptance": jsonable(self.acceptance),
            "unconditional": jsonable(self.unconditional),
            "conditioned_correlation": jsonable(self.conditioned_correlation),
            "pass": bool(self.passed),
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def csv_rows(self) -> list[list]:
        """One row per outcome cell: assignment, exact_p, empirical_p, count, z."""
        rows = [["assignment", "exact_p", "empirical_p", "count", "z"]]
        for cell in self.cells:
            rows.append(
                [
                    " ".join(str(v) for v in cell["assignment"]),
                    repr(float(cell["exact_p"])),
                    repr(float(cell["empirical_p"])),
                    int(cell["count"]),
                    repr(float(cell["z"])) if math.isfinite(cell["z"]) else "inf",
                ]
            )
        return rows


def sample_postselected(
    model: BackwardModel,
    label: str,
    settings: Sequence,
    n: int,
    seed,
    *,
    cap_factor: int = DEFAULT_CAP_FACTOR,
    shards: int = 1,
) -> SampleReport:
    """Accept ``n`` runs with the given label and compare against the exact
    conditioned distribution.

    Each outcome cell is gated by a binomial z-score with the exact cell
    probability as the null; the acceptance rate is gated against the exact
    label probability at these settings (negative-binomial null, since
    sampling stops at the n-th acceptance).  The pre-postselection outcome
    product is gated against the product of the wing marginal biases, and
    the postselected product against the exact conditioned correlation.
    ``passed`` requires every gate to clear ``Z_GATE``.
    """
    if n <= 0:
        raise ValueError("need a positive number of postselected runs")
    if shards < 1:
        raise ValueError("shards must be >= 1")
    settings = model.check_settings(settings)
    if label not in model.lam.labels:
        raise ValueError(f"unknown label {label!r}")
    target_idx = model.lam.labels.index(label)

    quotas = [n // shards] * shards
    for i in range(n % shards):
        quotas[i] += 1
    quotas = [q for q in quotas if q > 0]
    caps = [max(1, cap_factor) * q for q in quotas]

    if len(quotas) == 1:
        shard_results = [
            _shard_postselect(
                model, settings, target_idx, quotas[0], caps[0], make_rng(seed)
            )
        ]
    else:
        with ThreadPoolExecutor(max_workers=len(quotas)) as pool:
            futures = [
                pool.submit(
                    _shard_postselect,
                    model,
                    settings,
                    target_idx,
                    quotas[i],
                    caps[i],
                    make_rng(seed, shard=i),
                )
                for i in range(len(quotas))
            ]
            shard_results = [f.result() for f in futures]

    combos = list(itertools.product(OUTCOMES, repeat=len(model.wings)))
    counts = np.zeros(len(combos), dtype=np.int64)
    total = 0
    uncond_sum = 0
    for c, _accepted, t, s in shard_results:
        counts += c
        total += t
        uncond_sum += s

    exact = model.condition_on_lambda(label, settings)
    outcome_vars = model.outcome_variables()
    empirical = make_joint(
        outcome_vars,
        {combo: counts[i] / n for i, combo in enumerate(combos) if counts[i]},
        backend=FLOAT,
    )

    cells = []
    max_abs_z = 0.0
    for i, combo in enumerate(combos):
        p = float(exact.prob(combo))
        count = int(counts[i])
        z = _cell_z(count, n, p)
        max_abs_z = max(max_abs_z, abs(z))
        cells.append(
            {
                "assignment": combo,
                "exact_p": p,
                "empirical_p": count / n,
                "count": count,
                "z": z,
            }
        )

    # Acceptance rate: total draws to reach n acceptances is negative
    # binomial, so gate (p*total - n) / sqrt(n*(1-p)).
    p_label = float(model.lambda_marginal(settings).prob((label,)))
    if 0.0 < p_label < 1.0:
        z_acc = (p_label * total - n) / math.sqrt(n * (1.0 - p_label))
    else:
        z_acc = 0.0 if total * p_label == n else math.inf
    acceptance = {
        "observed_rate": n / total,
        "expected_rate": p_label,
        "z": z_acc,
    }

    # Pre-postselection product of the first two wings; exact value is the
    # product of the marginal biases because outcomes are drawn independently.
    bias = [float(2 * w.p_plus - 1) for w in model.wings[:2]]
    c0 = bias[0] * bias[1]
    mean_uncond = uncond_sum / total
    var0 = 1.0 - c0 * c0
    if var0 > 0.0:
        z_uncond = (mean_uncond - c0) * math.sqrt(total / var0)
    else:
        z_uncond = 0.0 if mean_uncond == c0 else math.inf
    unconditional = {
        "pair": [model.wings[0].outcome_name, model.wings[1].outcome_name],
        "runs": total,
        "correlation": mean_uncond,
        "exact": c0,
        "z": z_uncond,
    }

    e_exact = float(sum(c[0] * c[1] * exact.prob(c) for c in combos))
    e_emp = float(sum(combos[i][0] * combos[i][1] * counts[i] for i in range(len(combos)))) / n
    var_e = 1.0 - e_exact * e_exact
    if var_e > 0.0:
        z_cond = (e_emp - e_exact) * math.sqrt(n / var_e)
    else:
        z_cond = 0.0 if e_emp == e_exact else math.inf
    conditioned = {
        "pair": [model.wings[0].outcome_name, model.wings[1].outcome_name],
        "empirical": e_emp,
        "exact": e_exact,
        "z": z_cond,
    }

    gates = [max_abs_z, abs(z_acc), abs(z_uncond), abs(z_cond)]
    passed = all(g <= Z_GATE for g in gates)

    return SampleReport(
        model=model.name,
        label=label,
        settings=settings,
        requested=n,
        accepted=n,
        total_draws=total,
        cap=sum(caps),
        shards=len(quotas),
        seed=seed if not isinstance(seed, np.random.SeedSequence) else str(seed),
        rng_algorithm=RNG_ALGORITHM,
        backend=model.backend,
        cells=tuple(cells),
        tv_distance=float(tv_distance(empirical, exact)),
        max_abs_z=max_abs_z,
        z_gate=Z_GATE,
        acceptance=acceptance,
        unconditional=unconditional,
        conditioned_correlation=conditioned,
        passed=passed,
    )


@dataclass(frozen=True)
class EmpiricalChshReport:
    """CHSH value estimated from postselected counts, with standard error."""

    value: float
    stderr: float
    n_per_pair: int
    seed: object
    config: tuple
    pairs: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {
            "S": float(self.value),
            "stderr": float(self.stderr),
            "n_per_pair": int(self.n_per_pair),
            "seed": jsonable(self.seed),
            "rng": RNG_ALGORITHM,
            "config": jsonable(self.config),
            "pairs": jsonable(list(self.pairs)),
        }


def empirical_chsh(
    model: BackwardModel,
    label: str,
    c: ChshConfig,
    n_per_pair: int,
    seed,
    *,
    cap_factor: int = DEFAULT_CAP_FACTOR,
) -> EmpiricalChshReport:
    """Estimate the CHSH combination from postselected samples.

    Each of the four setting pairs is sampled independently with a child
    seed derived from the root seed; the per-pair correlation estimate and
    its binomial standard error combine into the CHSH value and a quadrature
    standard error.
    """
    if n_per_pair <= 0:
        raise ValueError("need a positive sample size per setting pair")
    root = (
        seed
        if isinstance(seed, np.random.SeedSequence)
        else np.random.SeedSequence(int(seed))
    )
    setting_pairs = [
        (c.alpha1, c.alpha2),
        (c.alpha1, c.alpha2_prime),
        (c.alpha1_prime, c.alpha2),
        (c.alpha1_prime, c.alpha2_prime),
    ]
    estimates = []
    details = []
    for i, pair in enumerate(setting_pairs):
        child = np.random.SeedSequence(
            entropy=root.entropy, spawn_key=root.spawn_key + (i,)
        )
        rep = sample_postselected(
            model, label, pair, n_per_pair, child, cap_factor=cap_factor
        )
        e_hat = rep.conditioned_correlation["empirical"]
        se = math.sqrt(max(0.0, 1.0 - e_hat * e_hat) / n_per_pair)
        estimates.append((e_hat, se))
        details.append(
            {"settings": pair, "E": e_hat, "stderr": se, "n": n_per_pair}
        )
    (e_ab, s1), (e_abp, s2), (e_apb, s3), (e_apbp, s4) = estimates
    value = abs(e_ab - e_abp) + abs(e_apb + e_apbp)
    stderr = math.sqrt(s1 * s1 + s2 * s2 + s3 * s3 + s4 * s4)
    return EmpiricalChshReport(
        value=value,
        stderr=stderr,
        n_per_pair=n_per_pair,
        seed=seed if not isinstance(seed, np.random.SeedSequence) else str(seed),
        config=c.as_tuple(),
        pairs=tuple(details),
    )
