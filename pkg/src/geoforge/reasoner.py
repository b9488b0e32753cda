"""Forward-chaining closure over a scene: the reasoning hypergraph.

Statements are indexed by insertion order; transitions record which premise
set and rule produced each conclusion. In single mode the first derivation
of a statement wins and nothing more is recorded for it; in multi mode every
distinct derivation whose premises all predate the conclusion is retained,
keeping the hypergraph acyclic by construction (premise index < conclusion
index for every transition).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .constructions import Scene
from .geometry import SceneGeometry
from .rules import DEFAULT_RULES, Rule
from .statements import Predicate, Statement, parse_statement


class ReasonerError(RuntimeError):
    pass


class VerifierContradictionError(ReasonerError):
    """A rule fired but its conclusion fails the numeric kernel: either the
    rule is unsound or the scene instance is degenerate. The scene is
    aborted rather than silently filtered."""

    def __init__(self, rule_id: str, conclusion: Statement, residual: float):
        self.rule_id = rule_id
        self.conclusion = conclusion
        self.residual = residual
        super().__init__(f"rule {rule_id} derived {conclusion} with residual {residual:g}")


@dataclass(frozen=True)
class Budget:
    max_statements: int = 5000
    max_transitions: int = 20000
    max_rounds: int = 50


@dataclass(frozen=True)
class Transition:
    premises: tuple[int, ...]  # sorted statement ids
    rule: str
    conclusion: int


@dataclass(frozen=True)
class SolutionStep:
    """One resolved transition: actual statements instead of graph ids."""

    premises: tuple[Statement, ...]
    rule: str
    conclusion: Statement


class ReasoningGraph:
    """G = (S, S0, R, transitions); statements are ids into ``statements``."""

    def __init__(self, mode: str = "single"):
        if mode not in ("single", "multi"):
            raise ValueError(f"bad mode {mode!r}")
        self.mode = mode
        self.statements: list[Statement] = []
        self.index: dict[Statement, int] = {}
        self.n_initial = 0
        self.transitions: list[Transition] = []
        self.incoming: dict[int, list[int]] = {}
        self.truncated = False
        self._transition_keys: set[tuple[tuple[int, ...], str, int]] = set()

    # construction ------------------------------------------------------

    def add_initial(self, stmt: Statement) -> int:
        if self.transitions:
            raise ReasonerError("initial statements must precede derivations")
        sid = self.index.get(stmt)
        if sid is not None:
            return sid
        sid = len(self.statements)
        self.statements.append(stmt)
        self.index[stmt] = sid
        self.n_initial = len(self.statements)
        return sid

    def add_statement(self, stmt: Statement) -> int:
        if stmt in self.index:
            raise ReasonerError(f"duplicate statement {stmt}")
        sid = len(self.statements)
        self.statements.append(stmt)
        self.index[stmt] = sid
        return sid

    def add_transition(self, premises: Sequence[int], rule: str, conclusion: int) -> bool:
        key = (tuple(sorted(premises)), rule, conclusion)
        if not key[0]:
            raise ReasonerError("transitions need a non-empty premise set")
        if conclusion in key[0]:
            raise ReasonerError("conclusion may not be its own premise")
        if max(key[0]) >= conclusion:
            raise ReasonerError("premises must predate the conclusion")
        if key in self._transition_keys:
            return False
        if self.mode == "single" and self.incoming.get(conclusion):
            raise ReasonerError("single mode allows one derivation per statement")
        self._transition_keys.add(key)
        self.incoming.setdefault(conclusion, []).append(len(self.transitions))
        self.transitions.append(Transition(*key))
        return True

    # queries -----------------------------------------------------------

    def is_initial(self, sid: int) -> bool:
        return sid < self.n_initial

    def initial_ids(self) -> range:
        return range(self.n_initial)

    def id_of(self, stmt: Statement) -> int:
        try:
            return self.index[stmt]
        except KeyError:
            raise ReasonerError(f"unknown statement {stmt}") from None

    def stmt(self, sid: int) -> Statement:
        return self.statements[sid]

    def incoming_transitions(self, sid: int) -> list[Transition]:
        return [self.transitions[t] for t in self.incoming.get(sid, [])]

    def upstream_dependencies(self, sid: int) -> set[int]:
        """All statements backward-reachable from ``sid``, itself included."""
        if not 0 <= sid < len(self.statements):
            raise ReasonerError(f"unknown statement id {sid}")
        seen = {sid}
        stack = [sid]
        while stack:
            cur = stack.pop()
            for t_idx in self.incoming.get(cur, ()):
                for p in self.transitions[t_idx].premises:
                    if p not in seen:
                        seen.add(p)
                        stack.append(p)
        return seen

    def to_single_mode(self) -> "ReasoningGraph":
        """Project onto the first derivation of each statement."""
        g = ReasoningGraph(mode="single")
        for sid in self.initial_ids():
            g.add_initial(self.statements[sid])
        for sid in range(self.n_initial, len(self.statements)):
            g.add_statement(self.statements[sid])
        for sid in range(self.n_initial, len(self.statements)):
            t_idxs = self.incoming.get(sid)
            if not t_idxs:
                continue
            first = self.transitions[min(t_idxs)]
            g.add_transition(first.premises, first.rule, first.conclusion)
        g.truncated = self.truncated
        return g

    # serialization ------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "truncated": self.truncated,
            "statements": [
                {"id": i, "text": s.text(), "initial": self.is_initial(i)}
                for i, s in enumerate(self.statements)
            ],
            "transitions": [
                {"premises": list(t.premises), "rule": t.rule, "conclusion": t.conclusion}
                for t in self.transitions
            ],
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ReasoningGraph":
        doc = json.loads(text)
        g = cls(mode=doc["mode"])
        for entry in doc["statements"]:
            stmt = parse_statement(entry["text"])
            if entry["initial"]:
                g.add_initial(stmt)
            else:
                g.add_statement(stmt)
        for entry in doc["transitions"]:
            g.add_transition(entry["premises"], entry["rule"], entry["conclusion"])
        g.truncated = doc["truncated"]
        return g


@dataclass
class _MatchView:
    """The read surface rules match against."""

    geometry: SceneGeometry
    graph: ReasoningGraph
    by_pred: dict[Predicate, list[int]] = field(default_factory=dict)

    def note(self, sid: int) -> None:
        self.by_pred.setdefault(self.graph.stmt(sid).predicate, []).append(sid)

    def stmt(self, sid: int) -> Statement:
        return self.graph.stmt(sid)

    def ids_of(self, pred: Predicate) -> Sequence[int]:
        return self.by_pred.get(pred, ())

    def lookup(self, stmt: Statement) -> int | None:
        return self.graph.index.get(stmt)


def saturate_statements(
    geometry: SceneGeometry,
    initial: Iterable[Statement],
    rules: Sequence[Rule] = DEFAULT_RULES,
    mode: str = "single",
    budget: Budget = Budget(),
) -> ReasoningGraph:
    """Smallest closure of the initial statements under the rule library,
    bounded by the budget (the flag ``truncated`` is set when a cap bites)."""
    graph = ReasoningGraph(mode=mode)
    view = _MatchView(geometry, graph)
    for stmt in initial:
        graph.add_initial(stmt)
    batch = list(graph.initial_ids())
    for sid in batch:
        view.note(sid)

    rounds = 0
    while batch:
        if rounds >= budget.max_rounds:
            graph.truncated = True
            break
        rounds += 1
        next_batch: list[int] = []
        for sid in batch:
            for rule in rules:
                for premises, conclusion in rule.match(view, sid):
                    premises = tuple(sorted(premises))
                    if max(premises) != sid:
                        raise ReasonerError(
                            f"rule {rule.id} fired on a stale premise combination"
                        )
                    verdict = geometry.check_statement(conclusion)
                    if not verdict.holds:
                        raise VerifierContradictionError(rule.id, conclusion, verdict.residual)
                    existing = graph.index.get(conclusion)
                    if existing is None:
                        if len(graph.statements) >= budget.max_statements:
                            graph.truncated = True
                            continue
                        if len(graph.transitions) >= budget.max_transitions:
                            graph.truncated = True
                            continue
                        new_id = graph.add_statement(conclusion)
                        graph.add_transition(premises, rule.id, new_id)
                        view.note(new_id)
                        next_batch.append(new_id)
                    elif graph.mode == "multi" and existing not in premises:
                        if max(premises) >= existing:
                            continue  # would break insertion-order soundness
                        if len(graph.transitions) >= budget.max_transitions:
                            graph.truncated = True
                            continue
                        graph.add_transition(premises, rule.id, existing)
        batch = next_batch
    return graph


def saturate(
    scene: Scene,
    rules: Sequence[Rule] = DEFAULT_RULES,
    mode: str = "single",
    budget: Budget = Budget(),
) -> ReasoningGraph:
    return saturate_statements(scene.geometry, scene.initial_statements, rules, mode, budget)
