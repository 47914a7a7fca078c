"""Command-line front end.

Subcommands ``synth``, ``verify``, ``extremes``, ``nef`` and ``entropy`` emit
CSV or JSON. Exit codes: 0 success, 1 verification failure, 2 input error,
3 normalization error, 4 canonical-form error.

``synth`` and ``entropy`` read a JSON configuration::

    {"levels": [{"kind": "pure_log"}],
     "params": {"T0": 0, "alpha": 1, "beta": 0},
     "reduction": {"kind": "identity"},
     "measure": "uniform",
     "support": [1, "inf"],
     "multiplier": 2.0}

where ``"target": {"mean_T": x}`` may replace ``"multiplier"``. Only
``levels`` is required; ``support`` defaults to the scale domain.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

from . import catalog, extremes, maxent, nefqvf
from .errors import (
    NotCanonicalError,
    NotNormalizableError,
    QuadratureError,
    ScaleMaxentError,
    SpecParseError,
)
from .scale import ObservableReduction, ScaleParams, ScaleSpec

log = logging.getLogger("scalemaxent")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_NORMALIZE = 3
EXIT_CANONICAL = 4

DEFAULT_TOL = 1e-8


@dataclass
class RunConfig:
    command: str
    scale_spec_path: str | None = None
    output_path: str | None = None
    grid_points: int = 512
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: {"linf": DEFAULT_TOL})
    family: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid_points < 8:
            raise ValueError("grid must have at least 8 points")
        if any(not (t > 0) for t in self.tolerances.values()):
            raise ValueError("tolerances must be positive")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _number(v) -> float:
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise SpecParseError(f"not a number: {v!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecParseError(f"not a number: {v!r}")
    return float(v)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecParseError("configuration must be a JSON object")
    return doc


def model_from_config(doc: dict) -> maxent.DensityModel:
    """Synthesize (or solve for) the density described by a configuration document."""
    spec = ScaleSpec.from_json({"levels": doc.get("levels")} if "levels" in doc else doc)
    p = doc.get("params", {})
    if not isinstance(p, dict) or set(p) - {"T0", "alpha", "beta"}:
        raise SpecParseError("'params' must be an object with keys among T0, alpha, beta")
    try:
        params = ScaleParams(**{k: _number(v) for k, v in p.items()})
    except ValueError as exc:
        raise SpecParseError(str(exc)) from exc
    reduction = ObservableReduction.from_json(doc["reduction"]) if "reduction" in doc else ObservableReduction.identity()
    measure_name = doc.get("measure", "uniform")
    if not isinstance(measure_name, str):
        raise SpecParseError("'measure' must be a string")
    try:
        measure = maxent.measure_from_name(measure_name)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from exc
    if "support" in doc:
        sup = doc["support"]
        if not isinstance(sup, list) or len(sup) != 2:
            raise SpecParseError("'support' must be a two-element array")
        support = (_number(sup[0]), _number(sup[1]))
    elif reduction.is_identity:
        support = spec.domain()
    else:
        raise SpecParseError("'support' is required with a non-identity reduction")
    if "target" in doc:
        t = doc["target"]
        if not isinstance(t, dict) or "mean_T" not in t:
            raise SpecParseError("'target' must be an object with 'mean_T'")
        return maxent.solve_multiplier(spec, reduction, measure, support, _number(t["mean_T"]), params=params)
    lam = _number(doc.get("multiplier", 1.0))
    return maxent.synth_density(spec, params, reduction, measure, support, lam)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(config: RunConfig) -> int:
    if config.scale_spec_path is None:
        raise SpecParseError("synth needs --spec")
    model = model_from_config(load_config(config.scale_spec_path))
    y = maxent.quantile_grid(model, config.grid_points)
    csv = maxent.grid_csv(y, model.pdf(y))
    rep = _dumps(maxent.report(model))
    if config.output_path is None:
        sys.stdout.write(csv)
        sys.stderr.write(rep)
    else:
        _emit(csv, config.output_path)
        root, _ = os.path.splitext(config.output_path)
        _emit(rep, root + ".json")
        sys.stdout.write(rep)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    tol = config.tolerances["linf"]
    names = [config.family] if config.family else catalog.family_names()
    for name in names:
        catalog.FamilyId.parse(name)
    rows = []
    for name in names:
        r = catalog.synth_equivalence(name)
        log.info("%s linf=%.3e", r["family"], r["linf"])
        rows.append({"family": r["family"], "linf": r["linf"], "pass": bool(r["linf"] < tol)})
    _emit(_dumps(rows), config.output_path)
    failed = [r["family"] for r in rows if not r["pass"]]
    if failed:
        sys.stderr.write("failing rows: " + ", ".join(failed) + "\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_extremes(config: RunConfig) -> int:
    ex = config.extra
    family = config.family or "exponential"
    try:
        catalog.FamilyId.parse(family)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from None
    try:
        res = extremes.run_experiment(family, ex.get("n", 1000), ex.get("replicates", 5000), ex.get("mode", "max"), config.seed)
    except KeyError as exc:
        raise SpecParseError(exc.args[0]) from None
    _emit(_dumps(res), config.output_path)
    return EXIT_OK


def cmd_nef(config: RunConfig) -> int:
    ex = config.extra
    vf = nefqvf.VarianceFunction(ex.get("v0", 0.0), ex.get("v1", 0.0), ex.get("v2", 0.0))
    rep = nefqvf.nef_report(vf, ex.get("mu0", 0.0))
    _emit(_dumps(rep), config.output_path)
    return EXIT_OK


def cmd_entropy(config: RunConfig) -> int:
    if config.scale_spec_path is not None:
        model = model_from_config(load_config(config.scale_spec_path))
    elif config.family is not None:
        model = catalog.catalog_density(config.family)
    else:
        raise SpecParseError("entropy needs --spec or --family")
    rep = maxent.report(model)
    _emit(_dumps(rep), config.output_path)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "verify": cmd_verify,
    "extremes": cmd_extremes,
    "nef": cmd_nef,
    "entropy": cmd_entropy,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scalemaxent", description="Maximum-entropy distributions from measurement scales.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--grid", type=int, default=512)
        return p

    common(sub.add_parser("synth", help="synthesize a density and emit y,pdf CSV")).add_argument("--spec", required=True)
    common(sub.add_parser("verify", help="check catalog rows against closed forms")).add_argument("--family")
    p = common(sub.add_parser("extremes", help="block-extreme convergence experiment"))
    p.add_argument("--family", default="exponential")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--replicates", type=int, default=5000)
    p.add_argument("--mode", choices=["max", "min"], default="max")
    p = common(sub.add_parser("nef", help="classify a quadratic variance function"))
    for name in ("--v0", "--v1", "--v2", "--mu0"):
        p.add_argument(name, type=float, default=0.0)
    p = common(sub.add_parser("entropy", help="relative entropy report"))
    p.add_argument("--spec")
    p.add_argument("--family")
    return parser


def _configure_logging():
    level = os.environ.get("MAXENT_SCALE_LOG", "").lower()
    logging.basicConfig(
        stream=sys.stderr,
        level={"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _config_from_args(args) -> RunConfig:
    extra = {}
    for key in ("n", "replicates", "mode", "v0", "v1", "v2", "mu0"):
        if hasattr(args, key):
            extra[key] = getattr(args, key)
    if args.command == "extremes" and (extra["n"] < 1 or extra["replicates"] < 1):
        raise ValueError("--n and --replicates must be at least 1")
    if args.command == "nef" and not all(math.isfinite(extra[k]) for k in ("v0", "v1", "v2", "mu0")):
        raise ValueError("--v0, --v1, --v2 and --mu0 must be finite")
    return RunConfig(
        command=args.command,
        scale_spec_path=getattr(args, "spec", None),
        output_path=args.out,
        grid_points=args.grid,
        seed=args.seed,
        tolerances={"linf": args.tol},
        family=getattr(args, "family", None),
        extra=extra,
    )


def main(argv=None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits for --help (0) and for usage errors (2)
        return int(exc.code or 0)
    try:
        config = _config_from_args(args)
        return COMMANDS[config.command](config)
    except NotCanonicalError as exc:
        sys.stderr.write(f"error: {exc.message}\n")
        if exc.hint:
            sys.stderr.write(f"hint: {exc.hint}\n")
        return EXIT_CANONICAL
    except (NotNormalizableError, QuadratureError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NORMALIZE
    except (ValueError, ScaleMaxentError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - last resort keeps the exit-code contract
        log.debug("unexpected failure", exc_info=True)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VERIFY


if __name__ == "__main__":
    raise SystemExit(main())
