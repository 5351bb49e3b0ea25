"""Command-line front end: ``degseq verify | run | sample``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema

from . import lab, oracle, samplers
from .errors import CapacityError, DegseqError, ParameterError
from .models import ModelParams

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

_NUM_OR_LIST = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}
_EVENT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(lab.EVENT_KINDS)},
        "threshold": {"type": "integer"},
        "graphs": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2},
    },
}
PLAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n_grid", "p_rule", "k", "replicates", "seed", "outputs"],
    "properties": {
        "name": {"type": "string"},
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "p_rule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": ["power", "log", "const"]}, "c": _NUM_OR_LIST, "beta": _NUM_OR_LIST},
        },
        "k": {"type": "integer", "minimum": 1},
        "event": _EVENT,
        "events": {"type": "array", "items": _EVENT, "minItems": 1},
        "replicates": {"type": "integer", "minimum": 100},
        "seed": {"type": "integer", "minimum": 0},
        "models": {"type": "array", "items": {"enum": ["B", "E", "E'", "I", "D"]}, "minItems": 1},
        "block_size": {"type": "integer", "minimum": 1},
        "override_regime": {"type": "boolean"},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "required": ["csv", "json"],
            "properties": {"csv": {"type": "string"}, "json": {"type": "string"}},
        },
        "collision_check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iso_max_n": {"type": "integer", "minimum": 2, "maximum": 10},
                "iso_replicates": {"type": "integer", "minimum": 1},
            },
        },
    },
    "oneOf": [{"required": ["event"]}, {"required": ["events"]}],
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DEGSEQ_THREADS", "1")))
    except ValueError:
        return 1


def load_plan(path) -> tuple[lab.ExperimentPlan, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    jsonschema.validate(doc, PLAN_SCHEMA)
    return lab.ExperimentPlan.from_dict(doc), doc


def cmd_verify(args) -> int:
    p = args.p
    if len(p) == 1 and args.k > 1:
        p = p * args.k
    if len(p) != args.k:
        print(f"error: --p has {len(p)} values but --k is {args.k}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = oracle.verify_identity_suite(ModelParams(args.n, tuple(p)))
    except (CapacityError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in report.lines():
        print(line)
    if not report.passed:
        names = ", ".join(r.name for r in report.failures())
        print(f"FAILED: {names}", file=sys.stderr)
        return 1
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        plan, doc = load_plan(args.plan)
    except OSError as exc:
        print(f"error: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"error: invalid plan: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (DegseqError, KeyError, TypeError) as exc:
        print(f"error: invalid plan: {exc}", file=sys.stderr)
        return EXIT_USAGE

    base = Path(args.out_dir) if args.out_dir else Path.cwd()
    csv_path = base / doc["outputs"]["csv"]
    json_path = base / doc["outputs"]["json"]
    try:
        if "collision_check" in doc:
            cc = doc["collision_check"]
            report = lab.collision_bound_check(plan, threads=args.threads,
                                               iso_max_n=cc.get("iso_max_n", 10),
                                               iso_replicates=cc.get("iso_replicates"))
            warnings = report.decay.warnings
        else:
            report = lab.run_plan(plan, threads=args.threads)
            warnings = report.warnings
    except DegseqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for w in warnings:
        print(f"warning: {w}")
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        lab.write_outputs(report, csv_path, json_path)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_sample(args) -> int:
    try:
        cfg = samplers.SamplerConfig(args.seed, args.model, ModelParams(args.n, args.p))
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    D = samplers.sample_many(cfg, args.count)
    out = sys.stdout
    for row in D:
        out.write(" ".join(map(str, row.tolist())) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degseq", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check the exact model identities by enumeration")
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--k", type=int, default=1)
    v.add_argument("--p", type=_floats, required=True, help="comma-separated edge probabilities")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="execute a JSON experiment plan")
    r.add_argument("plan")
    r.add_argument("--threads", type=int, default=_default_threads())
    r.add_argument("--out-dir", default=None, help="directory for relative output paths")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sample", help="print sampled degree sequences, one per line")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_sample)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
