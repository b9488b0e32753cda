"""Shared test utilities: hand-built graphs and independent path oracles."""

from __future__ import annotations

import itertools
from fractions import Fraction

from geoforge.reasoner import ReasoningGraph, Transition
from geoforge.statements import Statement, segment_length

_LABELS = [a + b for a in "ABCDEFGHIJKLM" for b in "ABCDEFGHIJKLM" if a != b]


def dummy_statement(i: int) -> Statement:
    """Distinct, parseable placholder statements for structural graphs."""
    a, b = _LABELS[i]
    return segment_length((a, b), Fraction(i + 1))


def build_graph(n_initial: int, edges: list[tuple[list[int], str, int]], mode="multi") -> ReasoningGraph:
    """Graph over dummy statements 0..max referenced; edges are
    (premise ids, rule, conclusion id)."""
    graph = ReasoningGraph(mode=mode)
    top = max([n_initial - 1] + [e[2] for e in edges])
    for i in range(n_initial):
        graph.add_initial(dummy_statement(i))
    for i in range(n_initial, top + 1):
        graph.add_statement(dummy_statement(i))
    for premises, rule, conclusion in edges:
        graph.add_transition(premises, rule, conclusion)
    return graph


def diamond_graph() -> ReasoningGraph:
    """Two derivations of statement 3; target 4 hangs below it."""
    return build_graph(
        2,
        [
            ([0], "left", 2),
            ([2], "joint", 3),
            ([1], "right", 3),
            ([3], "last", 4),
        ],
    )


# name -> (builder, target id, expected number of distinct derivations)
HAND_GRAPHS = {
    "diamond": (diamond_graph, 4, 2),
    "triple_fan": (
        lambda: build_graph(3, [([0], "a", 3), ([1], "b", 3), ([2], "c", 3), ([3], "d", 4)]),
        4,
        3,
    ),
    "two_level": (
        lambda: build_graph(
            2,
            [
                ([0], "a", 2),
                ([1], "b", 2),
                ([2], "c", 3),
                ([0, 1], "d", 3),
                ([3], "e", 4),
            ],
        ),
        4,
        3,
    ),
    "shared_sub": (
        lambda: build_graph(
            2,
            [
                ([0], "a", 2),
                ([1], "b", 2),
                ([2], "c", 3),
                ([2], "d", 4),
                ([3, 4], "e", 5),
            ],
        ),
        5,
        2,
    ),
    "wide": (
        lambda: build_graph(
            3,
            [
                ([0], "a", 3),
                ([1], "b", 3),
                ([0, 1], "c", 4),
                ([2], "d", 4),
                ([3, 4], "e", 5),
            ],
        ),
        5,
        4,
    ),
}


def brute_force_paths(graph: ReasoningGraph, target: int) -> set[frozenset[Transition]]:
    """Exhaustive enumeration over global per-statement derivation choices.

    Independent of the sampler: iterates the cartesian product of every
    backward-reachable statement's incoming-transition options and keeps the
    transition sets actually needed by the target.
    """
    reach: set[int] = set()
    stack = [target]
    while stack:
        sid = stack.pop()
        if sid in reach:
            continue
        reach.add(sid)
        for t in graph.incoming_transitions(sid):
            stack.extend(t.premises)
    derived = sorted(s for s in reach if not graph.is_initial(s))
    option_lists = [graph.incoming_transitions(s) for s in derived]
    results: set[frozenset[Transition]] = set()
    for combo in itertools.product(*option_lists):
        choice = dict(zip(derived, combo))
        needed: set[int] = set()
        stack = [target]
        complete = True
        while stack:
            sid = stack.pop()
            if sid in needed or graph.is_initial(sid):
                continue
            needed.add(sid)
            t = choice.get(sid)
            if t is None:
                complete = False
                break
            stack.extend(t.premises)
        if complete and needed:
            results.add(frozenset(choice[s] for s in needed))
    return results
