"""Command-line interface: generate, bootstrap, curate, stats, verify, check."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .dataset import load_records
from .pipeline import (
    InsufficientRecordsError,
    PipelineConfig,
    PipelineError,
    bootstrap,
    check_answer,
    curate_testset,
    generate,
    stats,
    verify,
)


def _load_config(path: str | None, overrides: dict) -> PipelineConfig:
    doc = {}
    if path:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.from_doc(doc)


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(
        args.config,
        {
            "seed_start": args.seed_start,
            "count": args.count,
            "tau_l": args.tau_l,
            "tau_r": args.tau_r,
            "translator": args.translator,
            "llm_endpoint": args.llm_endpoint,
            "llm_model": args.llm_model,
            "workers": args.workers,
        },
    )
    report = generate(config, args.out)
    print(f"wrote {report.count} records to {args.out}")
    for failure in report.failures:
        print(f"skipped: {failure}", file=sys.stderr)
    return 0


def _cmd_bootstrap(args: argparse.Namespace) -> int:
    overrides = {
        "bootstrap_quantile": args.quantile,
        "bootstrap_extra_steps": args.extra_steps,
        "bootstrap_iterations": args.iterations,
    }
    config = _load_config(args.config, overrides)
    report = bootstrap(config, args.in_dir, args.out)
    print(f"wrote {report.count} generation-{1 if report.records else '?'} records to {args.out}")
    for failure in report.failures:
        print(f"skipped: {failure}", file=sys.stderr)
    return 0


def _cmd_curate(args: argparse.Namespace) -> int:
    try:
        chosen = curate_testset(args.in_dir, args.per_tier, args.out)
    except InsufficientRecordsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"curated {len(chosen)} test records to {args.out}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    records = load_records(args.in_dir)
    report = stats(records)
    if args.json:
        print(json.dumps(report.to_doc(), indent=2, sort_keys=True))
    else:
        print(report.render_text(), end="")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = verify(args.in_dir)
    for record_id, reason in report.failures:
        print(f"FAIL {record_id}: {reason}")
    print(f"verified {report.total} records, {len(report.failures)} failures")
    return 0 if report.ok else 1


def _cmd_check(args: argparse.Namespace) -> int:
    keys: dict[str, tuple[float, int | None]] = {}
    for line in Path(args.key).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        value = Fraction(doc["exact"]) if doc.get("exact") else doc["approx"]
        keys[doc["id"]] = (value, doc.get("tier"))
    correct = 0
    total = 0
    by_tier: dict[int | None, list[int]] = {}
    for line in Path(args.pred).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        key = keys.get(doc["id"])
        if key is None:
            continue
        total += 1
        result = check_answer(doc["prediction"], key[0])
        bucket = by_tier.setdefault(key[1], [0, 0])
        bucket[1] += 1
        if result.correct:
            correct += 1
            bucket[0] += 1
    if total == 0:
        print("no overlapping ids between predictions and key", file=sys.stderr)
        return 1
    print(f"accuracy: {correct}/{total} = {correct / total:.2%}")
    for tier in sorted(by_tier, key=lambda t: (t is None, t)):
        got, n = by_tier[tier]
        print(f"  tier {tier}: {got}/{n}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="geoforge",
        description="Formally verified plane-geometry problem generator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a dataset")
    p.add_argument("--config", help="JSON file with PipelineConfig fields")
    p.add_argument("--out", required=True)
    p.add_argument("--seed-start", type=int, dest="seed_start")
    p.add_argument("--count", type=int)
    p.add_argument("--tau-l", type=int, dest="tau_l")
    p.add_argument("--tau-r", type=float, dest="tau_r")
    p.add_argument("--translator", choices=["template", "external"])
    p.add_argument("--llm-endpoint", dest="llm_endpoint")
    p.add_argument("--llm-model", dest="llm_model")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("bootstrap", help="extend the deepest scenes of a prior run")
    p.add_argument("--config", help="JSON file with PipelineConfig fields")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quantile", type=float)
    p.add_argument("--extra-steps", type=int, dest="extra_steps")
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("curate", help="cut a tiered numeric-answer test split")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-tier", type=int, dest="per_tier", required=True)
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("stats", help="length/ratio/tier/template distributions")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("verify", help="independently replay every record")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("check", help="grade predictions against a key file")
    p.add_argument("--pred", required=True, help="JSONL with {id, prediction}")
    p.add_argument("--key", required=True, help="key.jsonl from curate")
    p.set_defaults(func=_cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
