"""Problem-record schema and dataset directory IO.

A dataset directory holds records.jsonl (full records), scenes.jsonl (the
scenes they reference), manifest.jsonl (one summary line per record), an
svg/ directory with one diagram per record, and config.json. Record ids are
content hashes, so identical runs produce identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .constructions import Scene, scene_from_json
from .reasoner import SolutionStep
from .statements import Statement, Unit, parse_statement

SCHEMA_VERSION = 1


class CorruptRecordError(ValueError):
    pass


@dataclass(frozen=True)
class RecordMetadata:
    reasoning_length: int
    premise_ratio: float
    tier: int | None
    tau_l: int
    tau_r: float
    tau_p: float
    bootstrap_generation: int


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    seed: int
    scene_id: str
    template: str  # "deductive" | "multi_solution" | "traceback"
    kind: str  # "numeric" | "proof"
    question: str
    premises: tuple[Statement, ...]
    target: Statement  # query form for numeric problems
    answer_value: Fraction | float | None
    solutions: tuple[tuple[SolutionStep, ...], ...]
    wrong_branch: tuple[SolutionStep, ...] | None
    overlap: float | None
    nl_solution: str | None
    connection_thinking: str | None
    untranslated: bool
    diagram: str
    metadata: RecordMetadata

    @property
    def answer_unit(self) -> str | None:
        unit = self.target.unit
        return unit.value if isinstance(unit, Unit) else None


def _steps_doc(steps: Iterable[SolutionStep]) -> list[dict]:
    return [
        {
            "premises": [p.text() for p in s.premises],
            "rule": s.rule,
            "conclusion": s.conclusion.text(),
        }
        for s in steps
    ]


def _steps_from_doc(doc) -> tuple[SolutionStep, ...]:
    try:
        return tuple(
            SolutionStep(
                premises=tuple(parse_statement(t) for t in entry["premises"]),
                rule=entry["rule"],
                conclusion=parse_statement(entry["conclusion"]),
            )
            for entry in doc
        )
    except (KeyError, TypeError) as exc:
        raise CorruptRecordError(f"bad solution step: {exc}") from exc


def _answer_doc(record: ProblemRecord) -> dict | None:
    if record.kind == "proof":
        return {"kind": "proof", "statement": record.target.text()}
    value = record.answer_value
    return {
        "kind": "numeric",
        "exact": str(value) if isinstance(value, Fraction) else None,
        "approx": float(value),
        "unit": record.answer_unit,
    }


def record_to_doc(record: ProblemRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": record.id,
        "seed": record.seed,
        "scene_id": record.scene_id,
        "template": record.template,
        "kind": record.kind,
        "question": record.question,
        "premises": [p.text() for p in record.premises],
        "target": record.target.text(),
        "answer": _answer_doc(record),
        "formal_solutions": [_steps_doc(sol) for sol in record.solutions],
        "wrong_branch": _steps_doc(record.wrong_branch) if record.wrong_branch else None,
        "overlap": record.overlap,
        "nl_solution": record.nl_solution,
        "connection_thinking": record.connection_thinking,
        "untranslated": record.untranslated,
        "diagram": record.diagram,
        "metadata": {
            "reasoning_length": record.metadata.reasoning_length,
            "premise_ratio": record.metadata.premise_ratio,
            "tier": record.metadata.tier,
            "tau_l": record.metadata.tau_l,
            "tau_r": record.metadata.tau_r,
            "tau_p": record.metadata.tau_p,
            "bootstrap_generation": record.metadata.bootstrap_generation,
        },
    }


def record_content_hash(doc: dict) -> str:
    """Deterministic id from everything except the id and diagram filename."""
    body = {k: v for k, v in doc.items() if k not in ("id", "diagram")}
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def record_from_doc(doc: dict) -> ProblemRecord:
    try:
        answer = doc["answer"]
        if doc["kind"] == "numeric":
            if answer["exact"] is not None:
                value: Fraction | float | None = Fraction(answer["exact"])
            else:
                value = float(answer["approx"])
        else:
            value = None
        meta = doc["metadata"]
        return ProblemRecord(
            id=doc["id"],
            seed=doc["seed"],
            scene_id=doc["scene_id"],
            template=doc["template"],
            kind=doc["kind"],
            question=doc["question"],
            premises=tuple(parse_statement(t) for t in doc["premises"]),
            target=parse_statement(doc["target"]),
            answer_value=value,
            solutions=tuple(_steps_from_doc(sol) for sol in doc["formal_solutions"]),
            wrong_branch=_steps_from_doc(doc["wrong_branch"]) if doc["wrong_branch"] else None,
            overlap=doc["overlap"],
            nl_solution=doc["nl_solution"],
            connection_thinking=doc["connection_thinking"],
            untranslated=doc["untranslated"],
            diagram=doc["diagram"],
            metadata=RecordMetadata(
                reasoning_length=meta["reasoning_length"],
                premise_ratio=meta["premise_ratio"],
                tier=meta["tier"],
                tau_l=meta["tau_l"],
                tau_r=meta["tau_r"],
                tau_p=meta["tau_p"],
                bootstrap_generation=meta["bootstrap_generation"],
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptRecordError(str(exc)) from exc


def scene_id_of(scene: Scene) -> str:
    return hashlib.sha256(scene.to_json().encode("utf-8")).hexdigest()[:16]


def manifest_line(record: ProblemRecord) -> dict:
    approx = None
    if record.kind == "numeric" and record.answer_value is not None:
        approx = float(record.answer_value)
    return {
        "id": record.id,
        "seed": record.seed,
        "scene_id": record.scene_id,
        "template": record.template,
        "kind": record.kind,
        "tier": record.metadata.tier,
        "reasoning_length": record.metadata.reasoning_length,
        "premise_ratio": record.metadata.premise_ratio,
        "bootstrap_generation": record.metadata.bootstrap_generation,
        "answer_approx": approx,
        "diagram": record.diagram,
    }


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def write_dataset(
    out_dir: str | Path,
    records: Iterable[ProblemRecord],
    scenes: dict[str, Scene],
    diagrams: dict[str, str],
    config_doc: dict,
) -> None:
    out = Path(out_dir)
    (out / "svg").mkdir(parents=True, exist_ok=True)
    records = list(records)
    with (out / "records.jsonl").open("w", encoding="utf-8") as f:
        for r in records:
            f.write(_dump(record_to_doc(r)) + "\n")
    with (out / "manifest.jsonl").open("w", encoding="utf-8") as f:
        for r in records:
            f.write(_dump(manifest_line(r)) + "\n")
    with (out / "scenes.jsonl").open("w", encoding="utf-8") as f:
        for scene_id in sorted(scenes):
            f.write(_dump({"scene_id": scene_id, "scene": json.loads(scenes[scene_id].to_json())}) + "\n")
    for record_id, svg in sorted(diagrams.items()):
        (out / "svg" / f"{record_id}.svg").write_text(svg, encoding="utf-8")
    (out / "config.json").write_text(_dump(config_doc) + "\n", encoding="utf-8")


def load_records(in_dir: str | Path) -> list[ProblemRecord]:
    path = Path(in_dir) / "records.jsonl"
    records = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptRecordError(f"line {line_no}: {exc}") from exc
        records.append(record_from_doc(doc))
    return records


def load_scenes(in_dir: str | Path) -> dict[str, Scene]:
    path = Path(in_dir) / "scenes.jsonl"
    scenes: dict[str, Scene] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        scenes[doc["scene_id"]] = scene_from_json(json.dumps(doc["scene"]))
    return scenes


def load_config(in_dir: str | Path) -> dict:
    return json.loads((Path(in_dir) / "config.json").read_text(encoding="utf-8"))
