"""Command-line front end.

Commands
--------
verify       run analytic checks (si, nosignal, recovery, kernel-norm) for a
             model over a settings grid
chsh         CHSH values: backward-model evaluation at given angles, dense
             quantum scan, deterministic-strategy enumeration, PR box
ghz-exhaust  enumerate the 64 classical assignments against the four GHZ
             product constraints
sample       seeded Monte Carlo postselection with an empirical-vs-exact
             report
emit-curve   CSV correlation curve for plotting

Angles are radians everywhere; there is no degrees flag.  Every JSON report
embeds the tool version, backend, seed (when one is used), tolerance, and
the fully resolved configuration.  Exit codes are stable: 0 all checks pass,
1 a verification failed, 2 usage error, 3 runtime or sampling failure.

A config file of ``key=value`` lines (``--config FILE``) supplies defaults;
explicit command-line flags win.  The RETROBELL_SEED environment variable
supplies the default seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__
from .backward import (
    BackwardModel,
    bell_backward_model,
    default_grid,
    signalling_counterexample_model,
    verify_no_signalling_all,
)
from .chsh import (
    ChshConfig,
    PR_BOX_CONFIG,
    backward_model_chsh,
    lhv_max_chsh,
    pr_backward_model,
    quantum_chsh_scan,
    reference_bounds,
)
from .dist import FLOAT_TOL, DistributionError
from .ghz import classical_assignment_exhaustion, ghz_backward_model
from .quantum import bell_expectation
from .reports import as_number, jsonable
from .sampling import AcceptanceCapError, sample_postselected

ENV_SEED = "RETROBELL_SEED"

MODEL_BUILDERS = {
    "bell": bell_backward_model,
    "ghz": ghz_backward_model,
    "prbox": pr_backward_model,
    "counterexample": signalling_counterexample_model,
}

CHECK_ALIASES = {
    "si": "si",
    "nosignal": "no_signalling",
    "no-signalling": "no_signalling",
    "no_signalling": "no_signalling",
    "recovery": "recovery",
    "kernel-norm": "kernel_norm",
    "kernel_norm": "kernel_norm",
}


class UsageError(Exception):
    """Invalid flag combination or value; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _build_model(name: str) -> BackwardModel:
    try:
        return MODEL_BUILDERS[name]()
    except KeyError:
        raise UsageError(f"unknown model {name!r}") from None


def _check_backend_flag(model: BackwardModel, requested: str | None) -> None:
    if requested is None:
        return
    if requested not in ("rational", "float"):
        raise UsageError(f"unknown backend {requested!r}")
    if requested != model.backend:
        if requested == "rational":
            raise UsageError(
                f"model {model.name!r} is angle-dependent; the rational "
                "backend is only available for ghz and prbox"
            )
        raise UsageError(
            f"model {model.name!r} runs on the {model.backend} backend"
        )


def _default_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(ENV_SEED)
    return int(env) if env else 0


def _resolve_label(model: BackwardModel, token: str) -> str:
    token = str(token)
    if token in model.lam.labels:
        return token
    alias = {"bar": "lambda_bar", "pr": "lambda_pr"}.get(token, f"lambda{token}")
    if alias in model.lam.labels:
        return alias
    raise UsageError(
        f"unknown label {token!r} for model {model.name!r}; "
        f"have {list(model.lam.labels)}"
    )


def _parse_float_list(text: str, count: int, what: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != count:
        raise UsageError(f"{what} needs {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise UsageError(f"bad {what}: {e}") from None


def _parse_binary_list(text: str, count: int, what: str) -> list[int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != count:
        raise UsageError(f"{what} needs {count} comma-separated values")
    values = []
    for p in parts:
        if p not in ("0", "1"):
            raise UsageError(f"{what} values must be 0 or 1, got {p!r}")
        values.append(int(p))
    return values


def _model_settings_from_args(model: BackwardModel, args) -> tuple:
    angle_wings = all(w.setting_kind == "angle" for w in model.wings)
    if angle_wings:
        if getattr(args, "settings", None):
            raise UsageError(
                f"--settings is for binary-setting models; {model.name} takes "
                "--alpha1/--alpha2"
            )
        if args.alpha1 is None or args.alpha2 is None:
            raise UsageError(f"{model.name} needs --alpha1 and --alpha2 (radians)")
        return (args.alpha1, args.alpha2)
    if args.alpha1 is not None or args.alpha2 is not None:
        raise UsageError(
            f"angle flags are for bell/counterexample; {model.name} takes "
            "--settings (binary)"
        )
    if not getattr(args, "settings", None):
        raise UsageError(f"{model.name} needs --settings, e.g. 0,1,1")
    return tuple(_parse_binary_list(args.settings, len(model.wings), "--settings"))


def _envelope(command: str, args_config: dict, results, *, backend=None,
              seed=None, tolerance=None) -> dict:
    return {
        "tool": "retrobell",
        "version": __version__,
        "command": command,
        "backend": backend,
        "seed": seed,
        "tolerance": as_number(tolerance) if tolerance is not None else None,
        "config": jsonable(args_config),
        "results": jsonable(results),
    }


def _render_human(obj, prefix: str = "") -> list[str]:
    lines: list[str] = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            lines.extend(_render_human(v, f"{prefix}{k}." if prefix else f"{k}."))
        return lines
    if isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            lines.extend(_render_human(v, f"{prefix}{i}."))
        return lines
    key = prefix[:-1] if prefix.endswith(".") else prefix
    if isinstance(obj, float):
        rendered = repr(obj)
    else:
        rendered = str(obj)
    lines.append(f"{key} = {rendered}")
    return lines


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, envelope: dict, csv_rows: list[list] | None = None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        text = json.dumps(envelope, indent=2) + "\n"
    elif fmt == "human":
        text = "\n".join(_render_human(envelope)) + "\n"
    elif fmt == "csv":
        if csv_rows is None:
            raise UsageError("this command has no CSV table form")
        text = _csv_text(csv_rows)
    else:
        raise UsageError(f"unknown format {fmt!r}")
    output = getattr(args, "output", None)
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"report written to {output}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    model = _build_model(args.model)
    _check_backend_flag(model, args.backend)
    grid = default_grid(model, args.grid)

    if args.checks:
        requested = []
        for raw in args.checks.split(","):
            raw = raw.strip()
            if raw not in CHECK_ALIASES:
                raise UsageError(f"unknown check {raw!r}")
            requested.append(CHECK_ALIASES[raw])
    else:
        requested = ["si", "no_signalling", "kernel_norm"]
        if model.quantum_targets:
            requested.append("recovery")

    if "recovery" in requested and not model.quantum_targets:
        raise UsageError(
            f"model {model.name!r} has no closed-form target; the recovery "
            "check does not apply"
        )

    reports = []
    for check in requested:
        if check == "si":
            reports.append(model.verify_si(grid))
        elif check == "no_signalling":
            reports.append(verify_no_signalling_all(model, grid))
        elif check == "kernel_norm":
            reports.append(model.verify_kernel_normalization(grid))
        elif check == "recovery":
            reports.append(model.verify_recovery(grid))

    results = [r.to_json_dict() for r in reports]
    env = _envelope(
        "verify",
        {
            "model": args.model,
            "checks": requested,
            "grid": args.grid,
            "grid_points": len(grid),
            "threads": args.threads,
        },
        results,
        backend=model.backend,
        tolerance=model.tolerance,
    )
    csv_rows = [["check", "pass", "max_deviation", "tolerance", "backend"]]
    for r in results:
        csv_rows.append(
            [r["check"], r["pass"], r["max_deviation"], r["tolerance"], r["backend"]]
        )
    _emit(args, env, csv_rows)
    return 0 if all(r["pass"] for r in results) else 1


# ---------------------------------------------------------------------------
# chsh
# ---------------------------------------------------------------------------


def cmd_chsh(args) -> int:
    if args.lhv:
        value = lhv_max_chsh()
        result = {
            "mode": "lhv_max",
            "S_max": value,
            "strategies": 16,
            "bounds": reference_bounds(),
        }
        env = _envelope("chsh", {"lhv": True}, result, backend="rational",
                        tolerance=0)
        _emit(args, env, [["mode", "S_max"], ["lhv_max", value]])
        return 0

    if args.model is None:
        raise UsageError("chsh needs --model (or --lhv)")

    if args.model == "prbox":
        if args.angles or args.scan:
            raise UsageError("prbox takes binary settings; --angles/--scan do "
                             "not apply")
        model = pr_backward_model()
        _check_backend_flag(model, args.backend)
        if args.settings:
            vals = _parse_binary_list(args.settings, 4, "--settings")
            config = ChshConfig(*vals)
        else:
            config = PR_BOX_CONFIG
        value = backward_model_chsh(model, "lambda_pr", config)
        result = {
            "mode": "backward_model",
            "model": "prbox",
            "label": "lambda_pr",
            "config": list(config.as_tuple()),
            "S": value,
            "bounds": reference_bounds(),
        }
        env = _envelope("chsh", {"model": "prbox"}, result,
                        backend=model.backend, tolerance=model.tolerance)
        _emit(args, env, [["mode", "S"], ["backward_model", as_number(value)]])
        return 0

    if args.model != "bell":
        raise UsageError("chsh supports --model bell or prbox (or --lhv)")
    if args.settings:
        raise UsageError("--settings is for prbox; bell takes --angles")
    if args.backend == "rational":
        raise UsageError("angle-dependent CHSH commands run on the float "
                         "backend only")

    if args.scan:
        report = quantum_chsh_scan(args.state, args.resolution)
        result = report.to_json_dict()
        result["bounds"] = reference_bounds()
        env = _envelope(
            "chsh",
            {"model": "bell", "state": args.state, "scan": True,
             "resolution": args.resolution},
            result,
            backend="float",
            tolerance=FLOAT_TOL,
        )
        _emit(args, env,
              [["mode", "max_S", "argmax"],
               ["scan", result["max_S"], " ".join(map(repr, result["argmax"]))]])
        return 0

    if not args.angles:
        raise UsageError("chsh --model bell needs --angles a1,a1p,a2,a2p or "
                         "--scan")
    vals = _parse_float_list(args.angles, 4, "--angles")
    config = ChshConfig(*vals)
    model = bell_backward_model()
    label = f"lambda{args.state}"
    value = backward_model_chsh(model, label, config)
    result = {
        "mode": "backward_model",
        "model": "bell",
        "label": label,
        "config": list(config.as_tuple()),
        "S": value,
        "bounds": reference_bounds(),
    }
    env = _envelope(
        "chsh",
        {"model": "bell", "state": args.state, "angles": vals},
        result,
        backend=model.backend,
        tolerance=model.tolerance,
    )
    _emit(args, env, [["mode", "S"], ["backward_model", as_number(value)]])
    return 0


# ---------------------------------------------------------------------------
# ghz-exhaust
# ---------------------------------------------------------------------------


def cmd_ghz_exhaust(args) -> int:
    report = classical_assignment_exhaustion(
        include_near_misses=args.list_near_misses
    )
    result = report.to_json_dict()
    env = _envelope(
        "ghz-exhaust",
        {"list_near_misses": bool(args.list_near_misses)},
        result,
        backend="rational",
        tolerance=0,
    )
    csv_rows = [["constraint", "satisfying_count"]]
    for name, count in zip(result["constraints"], result["per_constraint"]):
        csv_rows.append([name, count])
    csv_rows.append(["ALL", result["satisfying_all"]])
    _emit(args, env, csv_rows)
    return 0 if report.satisfying_all == 0 else 1


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    model = _build_model(args.model)
    _check_backend_flag(model, args.backend)
    label = _resolve_label(model, args.label)
    settings = _model_settings_from_args(model, args)
    seed = _default_seed(args.seed)
    report = sample_postselected(
        model,
        label,
        settings,
        args.n,
        seed,
        cap_factor=args.cap_factor,
        shards=args.threads,
    )
    result = report.to_json_dict()
    env = _envelope(
        "sample",
        {
            "model": args.model,
            "label": label,
            "settings": list(settings),
            "n": args.n,
            "cap_factor": args.cap_factor,
            "threads": args.threads,
        },
        result,
        backend=model.backend,
        seed=seed,
        tolerance=model.tolerance,
    )
    _emit(args, env, report.csv_rows())
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# emit-curve
# ---------------------------------------------------------------------------


def cmd_emit_curve(args) -> int:
    if args.model != "bell":
        raise UsageError("emit-curve supports --model bell")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    rows = [["alpha1", "alpha2", "alpha_diff", "expectation"]]
    for k in range(args.points):
        diff = 2.0 * math.pi * k / args.points
        e = bell_expectation(args.state, diff, 0.0)
        rows.append([repr(diff), repr(0.0), repr(diff), repr(e)])
    text = _csv_text(rows)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"curve written to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# Parser and entry points
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv", "human"), default="json")
    p.add_argument("--output", help="write the report to this path")
    p.add_argument("--config", help="key=value defaults file; flags win")
    p.add_argument("--backend", choices=("rational", "float"),
                   help="must match the model's native backend")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrobell",
        description="Backward-conditional collider models: verification, "
                    "CHSH bounds, GHZ exhaustion, Monte Carlo replay. "
                    "All angles are radians.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run analytic model checks over a grid")
    p.add_argument("--model", required=True, choices=sorted(MODEL_BUILDERS))
    p.add_argument("--checks",
                   help="comma list of si,nosignal,recovery,kernel-norm "
                        "(default: all applicable)")
    p.add_argument("--grid", type=int, default=16,
                   help="angles per wing for angle models (default 16)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap (verification is sequential)")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("chsh", help="CHSH values and bounds")
    p.add_argument("--model", choices=("bell", "prbox"))
    p.add_argument("--state", type=int, choices=(1, 2, 3, 4), default=1)
    p.add_argument("--angles", help="alpha1,alpha1',alpha2,alpha2' in radians")
    p.add_argument("--settings", help="binary CHSH slots for prbox, e.g. 1,0,0,1")
    p.add_argument("--scan", action="store_true",
                   help="dense quantum angle scan instead of one evaluation")
    p.add_argument("--resolution", type=int, default=16)
    p.add_argument("--lhv", action="store_true",
                   help="maximum over the 16 deterministic strategies")
    _add_common(p)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("ghz-exhaust",
                       help="enumerate classical assignments against the GHZ "
                            "constraints")
    p.add_argument("--list-near-misses", action="store_true",
                   help="include the assignments satisfying exactly three "
                        "constraints")
    _add_common(p)
    p.set_defaults(func=cmd_ghz_exhaust)

    p = sub.add_parser("sample", help="seeded Monte Carlo postselection")
    p.add_argument("--model", required=True, choices=sorted(MODEL_BUILDERS))
    p.add_argument("--label", required=True,
                   help="target hidden label (e.g. 1..4, 0, pr, bar)")
    p.add_argument("--alpha1", type=float, help="wing-1 angle (radians)")
    p.add_argument("--alpha2", type=float, help="wing-2 angle (radians)")
    p.add_argument("--settings", help="binary settings, e.g. 0,1,1")
    p.add_argument("--n", type=int, required=True,
                   help="postselected runs to accept")
    p.add_argument("--seed", type=int,
                   help=f"64-bit seed (default ${ENV_SEED} or 0)")
    p.add_argument("--cap-factor", type=int, default=100,
                   help="total-draw cap as a multiple of n (default 100)")
    p.add_argument("--threads", type=int, default=1,
                   help="sampling shards; 1 is the bit-exact baseline")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("emit-curve", help="CSV correlation curve E(alpha1-alpha2)")
    p.add_argument("--model", default="bell", choices=("bell",))
    p.add_argument("--state", type=int, choices=(1, 2, 3, 4), default=1)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--output", help="CSV path (default stdout)")
    p.add_argument("--config", help="key=value defaults file; flags win")
    p.set_defaults(func=cmd_emit_curve)

    return parser


def _expand_config_tokens(argv: list[str]) -> list[str]:
    """Insert config-file tokens after the subcommand so flags win."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            break
    if path is None:
        return argv
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    tokens: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line (want key=value): {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            flag = f"--{key}"
            if value.lower() == "true":
                tokens.append(flag)
            elif value.lower() == "false":
                continue
            else:
                tokens.extend([flag, value])
    if not argv:
        return tokens
    return [argv[0]] + tokens + argv[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config_tokens(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AcceptanceCapError as e:
        print(f"sampling failure: {e}", file=sys.stderr)
        return 3
    except (DistributionError, ValueError, RuntimeError, OSError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
