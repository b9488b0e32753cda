"""Path extraction over the reasoning graph.

Three samplers: the single backward trace with length/premise-ratio filters,
exhaustive multi-derivation enumeration (branching over alternative incoming
transitions), and self-reflective traceback composition (a wrong branch that
shares enough of its prefix with a correct derivation). Problem formulation
and difficulty tiering also live here.
"""

from __future__ import annotations

import random
from bisect import insort
from dataclasses import dataclass
from fractions import Fraction

from .constructions import Scene
from .reasoner import ReasoningGraph, SolutionStep, Transition
from .statements import VALUE_PREDICATES, Statement, Unit
from .translate import statement_nl


class SamplerError(ValueError):
    pass


class TargetIsInitialError(SamplerError):
    pass


class GraphModeError(SamplerError):
    pass


class NoEligibleErroneousStatementError(SamplerError):
    pass


class BelowTierRangeError(SamplerError):
    pass


class OracleMismatchError(SamplerError):
    """Path-derived answer disagrees with the coordinate oracle: engine bug."""


@dataclass(frozen=True)
class ReasoningPath:
    """Forward presentation of a backward trace to ``target``."""

    transitions: tuple[Transition, ...]
    target: int
    used_premises: frozenset[int]
    premise_ratio: float

    @property
    def length(self) -> int:
        return len(self.transitions)

    def transition_set(self) -> frozenset[Transition]:
        return frozenset(self.transitions)

    def resolve(self, graph: ReasoningGraph) -> tuple[SolutionStep, ...]:
        return tuple(
            SolutionStep(
                premises=tuple(graph.stmt(p) for p in t.premises),
                rule=t.rule,
                conclusion=graph.stmt(t.conclusion),
            )
            for t in self.transitions
        )


@dataclass(frozen=True)
class Rejected:
    reason: str  # "length" | "premise_ratio"
    length: int
    premise_ratio: float


@dataclass(frozen=True)
class TracebackRecord:
    wrong_branch: ReasoningPath
    correct_path: ReasoningPath
    overlap: float
    backtrack_index: int | None  # position in wrong_branch of the last shared transition


@dataclass(frozen=True)
class DifficultyTier:
    tier: int
    min_length: int  # exclusive except for tier 1 (inclusive 5)
    max_length: int | None  # inclusive


TIERS = (
    DifficultyTier(1, 5, 10),
    DifficultyTier(2, 10, 20),
    DifficultyTier(3, 20, 50),
    DifficultyTier(4, 50, None),
)


def tier_of(length: int) -> DifficultyTier:
    """Length 5-10 is tier 1, 11-20 tier 2, 21-50 tier 3, beyond is tier 4."""
    if length < TIERS[0].min_length:
        raise BelowTierRangeError(f"length {length} is below the tier range")
    for t in TIERS:
        if t.max_length is None or length <= t.max_length:
            return t
    raise AssertionError  # pragma: no cover


def _finish_path(graph: ReasoningGraph, transitions: list[Transition], target: int) -> ReasoningPath:
    ordered = tuple(sorted(transitions, key=lambda t: t.conclusion))
    used = frozenset(
        p for t in ordered for p in t.premises if graph.is_initial(p)
    )
    ratio = len(used) / graph.n_initial if graph.n_initial else 0.0
    return ReasoningPath(ordered, target, used, ratio)


def _filter(path: ReasoningPath, tau_l: int, tau_r: float) -> Rejected | None:
    if path.length < tau_l:
        return Rejected("length", path.length, path.premise_ratio)
    if path.premise_ratio < tau_r:
        return Rejected("premise_ratio", path.length, path.premise_ratio)
    return None


def geo_explore(
    graph: ReasoningGraph, target: int, tau_l: int, tau_r: float
) -> ReasoningPath | Rejected:
    """Trace the unique derivation of ``target`` backward to the premises.

    Only defined on single-mode graphs; the result either passes both
    filters or is returned as a Rejected verdict naming the failed metric.
    """
    if graph.mode != "single":
        raise GraphModeError("multi-mode graph: use geo_explore_m")
    if graph.is_initial(target):
        raise TargetIsInitialError(f"statement {target} is an initial premise")
    transitions: list[Transition] = []
    pending = [target]
    resolved: set[int] = set()
    while pending:
        sid = pending.pop()  # strictly descending ids: premises predate conclusions
        if sid in resolved:
            continue
        resolved.add(sid)
        incoming = graph.incoming_transitions(sid)
        if len(incoming) != 1:
            raise SamplerError(f"statement {sid} has {len(incoming)} derivations in single mode")
        t = incoming[0]
        transitions.append(t)
        for p in t.premises:
            if not graph.is_initial(p) and p not in resolved:
                insort(pending, p)
    path = _finish_path(graph, transitions, target)
    rejected = _filter(path, tau_l, tau_r)
    return path if rejected is None else rejected


def geo_explore_m(
    graph: ReasoningGraph,
    target: int,
    tau_l: int,
    tau_r: float,
    max_paths: int = 16,
    work_cap: int = 20000,
) -> list[ReasoningPath]:
    """Enumerate distinct acyclic derivations of ``target``.

    Branches over every alternative incoming transition of every needed
    statement (options ordered by rule id then premise tuple), keeps paths
    passing both filters, and stops when all option assignments are
    exhausted, ``max_paths`` filtered paths were found, or the work cap hits.
    """
    if graph.is_initial(target):
        raise TargetIsInitialError(f"statement {target} is an initial premise")

    option_cache: dict[int, list[Transition]] = {}

    def options(sid: int) -> list[Transition]:
        cached = option_cache.get(sid)
        if cached is None:
            cached = sorted(
                graph.incoming_transitions(sid), key=lambda t: (t.rule, t.premises)
            )
            option_cache[sid] = cached
        return cached

    results: list[ReasoningPath] = []
    seen: set[frozenset[Transition]] = set()
    unresolved = [target]
    chosen: dict[int, Transition] = {}
    # frame: [sid, option list, current index, premises added by current option]
    frames: list[list] = []
    work = 0
    descending = True
    while True:
        if descending:
            if not unresolved:
                key = frozenset(chosen.values())
                if key not in seen:
                    seen.add(key)
                    path = _finish_path(graph, list(chosen.values()), target)
                    if _filter(path, tau_l, tau_r) is None:
                        results.append(path)
                        if len(results) >= max_paths:
                            break
                descending = False  # backtrack into the newest frame
                continue
            sid = unresolved.pop()
            frames.append([sid, options(sid), -1, []])
            descending = False
            continue
        if not frames:
            break
        frame = frames[-1]
        sid, opts, idx, added = frame
        for p in added:
            unresolved.remove(p)
        added.clear()
        chosen.pop(sid, None)
        idx += 1
        frame[2] = idx
        if idx >= len(opts) or not opts:
            insort(unresolved, sid)
            frames.pop()
            continue
        work += 1
        if work > work_cap:
            break
        t = opts[idx]
        chosen[sid] = t
        for p in t.premises:
            if not graph.is_initial(p) and p not in chosen and p not in unresolved:
                insort(unresolved, p)
                added.append(p)
        descending = True
    return results


def geo_explore_t(
    graph: ReasoningGraph,
    target: int,
    tau_l: int,
    tau_r: float,
    tau_p: float,
    rng_seed: int,
    max_paths: int = 16,
    attempts: int = 100,
) -> TracebackRecord | None:
    """Compose a wrong branch with a correct derivation sharing its prefix.

    Samples erroneous statements outside the target's upstream dependency
    cone; returns None when no sampled statement yields enough overlap.
    """
    if graph.is_initial(target):
        raise TargetIsInitialError(f"statement {target} is an initial premise")
    correct = geo_explore_m(graph, target, tau_l, tau_r, max_paths)
    if not correct:
        return None
    upstream = graph.upstream_dependencies(target)
    candidates = [
        sid
        for sid in range(len(graph.statements))
        if sid not in upstream and not graph.is_initial(sid)
    ]
    if not candidates:
        raise NoEligibleErroneousStatementError(
            "every derived statement is upstream of the target"
        )
    rng = random.Random(("traceback", rng_seed).__repr__())
    tried: set[int] = set()
    for _ in range(attempts):
        erroneous = candidates[rng.randrange(len(candidates))]
        if erroneous in tried:
            continue
        tried.add(erroneous)
        for wrong in geo_explore_m(graph, erroneous, 0, 0.0, max_paths):
            wrong_set = wrong.transition_set()
            for path in correct:
                shared = wrong_set & path.transition_set()
                overlap = len(shared) / wrong.length if wrong.length else 0.0
                if overlap < tau_p:
                    continue
                backtrack = None
                for i, t in enumerate(wrong.transitions):
                    if t in shared:
                        backtrack = i
                return TracebackRecord(wrong, path, overlap, backtrack)
    return None


# --- problem formulation -----------------------------------------------------


@dataclass(frozen=True)
class ProblemDraft:
    """Everything the pipeline needs to emit one record, minus bookkeeping."""

    kind: str  # "numeric" | "proof"
    template: str  # "deductive" | "multi_solution" | "traceback"
    target: Statement
    question: str
    premises: tuple[Statement, ...]
    answer_value: Fraction | float | None
    solutions: tuple[tuple[SolutionStep, ...], ...]
    wrong_branch: tuple[SolutionStep, ...] | None
    overlap: float | None
    reasoning_length: int
    premise_ratio: float
    tier: int | None


def _question_clause(target: Statement) -> str:
    pred = target.predicate.value
    if target.unit is Unit.LENGTH:
        a, b = target.groups[0]
        return f"find the length of {a}{b}"
    if target.unit is Unit.DEGREES:
        a, v, c = target.groups[0]
        return f"find the measure of ∠{a}{v}{c} in degrees"
    if target.unit is Unit.RATIO:
        (a, b), (c, d) = target.groups
        return f"find the ratio {a}{b} / {c}{d}"
    raise SamplerError(f"{pred} is not a numeric query")


def formulate_problem(
    scene: Scene,
    graph: ReasoningGraph,
    material: ReasoningPath | list[ReasoningPath] | TracebackRecord,
    kind: str,
    distractor_policy: str = "all",
) -> ProblemDraft:
    """Turn sampled path material into a question/answer/solution core.

    Numeric questions strip the target's value and cross-check it against the
    coordinate oracle (1% relative, 1e-9 when both sides are exact).
    """
    if isinstance(material, TracebackRecord):
        template = "traceback"
        primary = material.correct_path
        solutions = [primary]
        wrong: ReasoningPath | None = material.wrong_branch
        overlap: float | None = material.overlap
    elif isinstance(material, ReasoningPath):
        template = "deductive"
        primary = material
        solutions = [material]
        wrong, overlap = None, None
    else:
        if not material:
            raise SamplerError("multi-solution material must be non-empty")
        template = "multi_solution"
        primary = material[0]
        solutions = list(material)
        wrong, overlap = None, None

    target = graph.stmt(primary.target)
    if kind == "numeric":
        if target.predicate not in VALUE_PREDICATES or target.value is None:
            raise SamplerError("numeric problems need a value-bearing target")
        oracle = scene.geometry.numeric_answer(target.without_value())
        claimed = target.value
        if isinstance(oracle, Fraction):
            ok = abs(claimed - oracle) <= Fraction(1, 10**9) * max(1, abs(oracle))
        else:
            ok = abs(float(claimed) - oracle) <= 0.01 * abs(oracle)
        if not ok:
            raise OracleMismatchError(f"path says {claimed}, oracle says {oracle}")
        answer_value: Fraction | float | None = claimed
    elif kind == "proof":
        answer_value = None
    else:
        raise SamplerError(f"unknown problem kind {kind!r}")

    used_ids: set[int] = set()
    for path in solutions:
        used_ids |= path.used_premises
    if wrong is not None:
        used_ids |= wrong.used_premises
    if distractor_policy == "all":
        premise_ids = list(graph.initial_ids())
    elif distractor_policy == "used":
        premise_ids = sorted(used_ids)
    else:
        raise SamplerError(f"unknown distractor policy {distractor_policy!r}")
    premises = tuple(graph.stmt(i) for i in premise_ids)

    clauses = "; ".join(statement_nl(p) for p in premises)
    if kind == "numeric":
        shown = target.without_value()
        ask = _question_clause(target)
        question = f"In the figure, {clauses}. Based on these premises, {ask}."
    else:
        shown = target
        question = f"In the figure, {clauses}. Prove that {statement_nl(target)}."

    try:
        tier: int | None = tier_of(primary.length).tier
    except BelowTierRangeError:
        tier = None

    return ProblemDraft(
        kind=kind,
        template=template,
        target=shown,
        question=question,
        premises=premises,
        answer_value=answer_value,
        solutions=tuple(path.resolve(graph) for path in solutions),
        wrong_branch=wrong.resolve(graph) if wrong is not None else None,
        overlap=overlap,
        reasoning_length=primary.length,
        premise_ratio=primary.premise_ratio,
        tier=tier,
    )
