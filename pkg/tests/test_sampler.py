import math

import pytest
from helpers import HAND_GRAPHS, brute_force_paths, build_graph, diamond_graph

from geoforge.constructions import generate_base_scene
from geoforge.geometry import SceneGeometry
from geoforge.reasoner import ReasoningGraph, saturate
from geoforge.sampler import (
    BelowTierRangeError,
    GraphModeError,
    NoEligibleErroneousStatementError,
    OracleMismatchError,
    ReasoningPath,
    Rejected,
    TargetIsInitialError,
    formulate_problem,
    geo_explore,
    geo_explore_m,
    geo_explore_t,
    tier_of,
)
from geoforge.statements import angle_measure


def _chain(n_transitions: int, n_initial: int = 4) -> ReasoningGraph:
    """Linear chain using all initial statements in the first transition."""
    edges = [(list(range(n_initial)), "r0", n_initial)]
    for i in range(1, n_transitions):
        edges.append(([n_initial + i - 1], f"r{i}", n_initial + i))
    return build_graph(n_initial, edges, mode="single")


class TestGeoExplore:
    def test_full_use_chain(self):
        graph = _chain(6)
        path = geo_explore(graph, 9, tau_l=5, tau_r=0.5)
        assert isinstance(path, ReasoningPath)
        assert path.length == 6
        assert path.premise_ratio == 1.0

    def test_length_filter(self):
        graph = _chain(6)
        rejected = geo_explore(graph, 9, tau_l=7, tau_r=0.5)
        assert isinstance(rejected, Rejected)
        assert rejected.reason == "length"

    def test_ratio_filter(self):
        graph = build_graph(4, [([0], "r", 4), ([4], "r", 5)], mode="single")
        rejected = geo_explore(graph, 5, tau_l=0, tau_r=0.5)
        assert isinstance(rejected, Rejected)
        assert rejected.reason == "premise_ratio"
        assert rejected.premise_ratio == 0.25

    def test_target_is_initial(self):
        graph = _chain(3)
        with pytest.raises(TargetIsInitialError):
            geo_explore(graph, 0, 0, 0.0)

    def test_multi_mode_rejected(self):
        graph = build_graph(2, [([0], "r", 2)], mode="multi")
        with pytest.raises(GraphModeError):
            geo_explore(graph, 2, 0, 0.0)

    def test_forward_order(self):
        graph = _chain(5)
        path = geo_explore(graph, 8, tau_l=0, tau_r=0.0)
        conclusions = [t.conclusion for t in path.transitions]
        assert conclusions == sorted(conclusions)


class TestGeoExploreM:
    @pytest.mark.parametrize("name", sorted(HAND_GRAPHS))
    def test_matches_brute_force(self, name):
        make, target, expected = HAND_GRAPHS[name]
        graph = make()
        paths = geo_explore_m(graph, target, tau_l=0, tau_r=0.0, max_paths=64)
        got = {p.transition_set() for p in paths}
        oracle = brute_force_paths(graph, target)
        assert got == oracle
        assert len(got) == expected

    def test_single_derivation_agrees_with_geo_explore(self):
        multi = build_graph(3, [([0, 1], "r0", 3), ([3, 2], "r1", 4)], mode="multi")
        single = build_graph(3, [([0, 1], "r0", 3), ([3, 2], "r1", 4)], mode="single")
        m_paths = geo_explore_m(multi, 4, 0, 0.0)
        s_path = geo_explore(single, 4, 0, 0.0)
        assert len(m_paths) == 1
        assert m_paths[0].transitions == s_path.transitions

    def test_filters_apply(self):
        graph = diamond_graph()
        assert geo_explore_m(graph, 4, tau_l=10, tau_r=0.0) == []

    def test_max_paths_cap(self):
        graph = diamond_graph()
        paths = geo_explore_m(graph, 4, 0, 0.0, max_paths=1)
        assert len(paths) == 1

    def test_paths_are_acyclic_and_well_ordered(self):
        make, target, _ = HAND_GRAPHS["two_level"]
        graph = make()
        for path in geo_explore_m(graph, target, 0, 0.0):
            seen = set()
            established = set(graph.initial_ids())
            for t in path.transitions:
                assert t not in seen
                seen.add(t)
                assert all(p in established for p in t.premises)
                established.add(t.conclusion)
            assert path.transitions[-1].conclusion == target

    def test_deterministic(self):
        make, target, _ = HAND_GRAPHS["wide"]
        a = geo_explore_m(make(), target, 0, 0.0)
        b = geo_explore_m(make(), target, 0, 0.0)
        assert [p.transitions for p in a] == [p.transitions for p in b]


def _traceback_graph() -> ReasoningGraph:
    """Shared two-step prefix, then the correct tail and a wrong spur."""
    return build_graph(
        1,
        [
            ([0], "t0", 1),
            ([1], "t1", 2),
            ([2], "t2", 3),  # correct target
            ([2], "t3", 4),  # erroneous statement
        ],
    )


class TestGeoExploreT:
    def test_record_shape_and_overlap(self):
        graph = _traceback_graph()
        record = geo_explore_t(graph, 3, tau_l=0, tau_r=0.0, tau_p=0.5, rng_seed=1)
        assert record is not None
        assert record.wrong_branch.target == 4
        assert record.overlap == pytest.approx(2.0 / 3.0)
        assert record.backtrack_index == 1
        # validity: erroneous statement outside every correct path's upstream
        for path in geo_explore_m(graph, 3, 0, 0.0):
            upstream = set()
            for t in path.transitions:
                upstream.add(t.conclusion)
                upstream.update(t.premises)
            assert record.wrong_branch.target not in upstream

    def test_full_overlap_impossible(self):
        graph = _traceback_graph()
        assert geo_explore_t(graph, 3, 0, 0.0, tau_p=1.0, rng_seed=1) is None

    def test_no_eligible_statement(self):
        graph = build_graph(1, [([0], "r", 1)], mode="multi")
        with pytest.raises(NoEligibleErroneousStatementError):
            geo_explore_t(graph, 1, 0, 0.0, 0.0, rng_seed=0)

    def test_target_initial_rejected(self):
        graph = _traceback_graph()
        with pytest.raises(TargetIsInitialError):
            geo_explore_t(graph, 0, 0, 0.0, 0.0, rng_seed=0)

    def test_seeded_validity_sweep(self):
        graph = _traceback_graph()
        for seed in range(50):
            record = geo_explore_t(graph, 3, 0, 0.0, 0.4, rng_seed=seed)
            if record is None:
                continue
            assert record.overlap >= 0.4
            upstream_ids = graph.upstream_dependencies(3)
            assert record.wrong_branch.target not in upstream_ids


class TestTierOf:
    @pytest.mark.parametrize(
        "length,tier",
        [(5, 1), (10, 1), (11, 2), (20, 2), (21, 3), (50, 3), (51, 4), (7, 1), (120, 4)],
    )
    def test_boundaries(self, length, tier):
        assert tier_of(length).tier == tier

    def test_below_range(self):
        with pytest.raises(BelowTierRangeError):
            tier_of(4)


class TestFormulate:
    @pytest.fixture
    def iso(self):
        scene = generate_base_scene("isosceles_triangle", 7)
        graph = saturate(scene)
        return scene, graph

    def _apex_path(self, scene, graph):
        apex = next(
            sid
            for sid in range(graph.n_initial, len(graph.statements))
            if graph.stmt(sid).predicate.value == "angle_val"
            and graph.stmt(sid).groups[0][1] == "A"
        )
        return apex, geo_explore(graph, apex, tau_l=0, tau_r=0.0)

    def test_numeric_record_core(self, iso):
        scene, graph = iso
        apex, path = self._apex_path(scene, graph)
        draft = formulate_problem(scene, graph, path, "numeric")
        assert draft.kind == "numeric"
        assert draft.answer_value == graph.stmt(apex).value
        assert draft.target.value is None
        assert "find the measure" in draft.question
        assert draft.reasoning_length == path.length
        assert len(draft.premises) == graph.n_initial  # distractor policy "all"

    def test_used_only_policy(self, iso):
        scene, graph = iso
        _, path = self._apex_path(scene, graph)
        draft = formulate_problem(scene, graph, path, "numeric", distractor_policy="used")
        assert len(draft.premises) == len(path.used_premises)
        assert len(draft.premises) < graph.n_initial

    def test_distractors_present_by_default(self, iso):
        scene, graph = iso
        _, path = self._apex_path(scene, graph)
        draft = formulate_problem(scene, graph, path, "numeric")
        used = {graph.stmt(i) for i in path.used_premises}
        assert any(p not in used for p in draft.premises)

    def test_proof_kind(self, iso):
        scene, graph = iso
        candidates = [
            sid
            for sid in range(graph.n_initial, len(graph.statements))
            if graph.stmt(sid).predicate.value == "congruent"
        ]
        path = geo_explore(graph, candidates[0], 0, 0.0)
        draft = formulate_problem(scene, graph, path, "proof")
        assert draft.answer_value is None
        assert "Prove that" in draft.question
        assert draft.target == graph.stmt(candidates[0])

    def test_tier_metadata(self, iso):
        scene, graph = iso
        _, path = self._apex_path(scene, graph)
        draft = formulate_problem(scene, graph, path, "numeric")
        if path.length >= 5:
            assert draft.tier == tier_of(path.length).tier
        else:
            assert draft.tier is None

    def test_oracle_mismatch_aborts(self):
        geometry = SceneGeometry(
            {"A": (2.0, 2.0 * math.tan(math.radians(65.0))), "B": (0.0, 0.0), "C": (4.0, 0.0)}
        )
        scene = generate_base_scene("isosceles_triangle", 7)
        # hand-build a graph whose derived value is wrong by 2%
        graph = ReasoningGraph(mode="single")
        base = graph.add_initial(angle_measure(("A", "B", "C"), 65))
        bogus = graph.add_statement(angle_measure(("B", "A", "C"), 49))
        graph.add_transition([base], "triangle_angle_sum", bogus)
        path = geo_explore(graph, bogus, 0, 0.0)
        with pytest.raises(OracleMismatchError):
            formulate_problem(scene, graph, path, "numeric")

    def test_multi_solution_union_of_premises(self):
        graph = diamond_graph()
        # pretend scene: formulate only needs geometry for numeric targets
        scene = generate_base_scene("isosceles_triangle", 1)
        paths = geo_explore_m(graph, 4, 0, 0.0)
        draft = formulate_problem(scene, graph, paths, "proof", distractor_policy="used")
        union = set()
        for p in paths:
            union |= p.used_premises
        assert len(draft.premises) == len(union)
        assert draft.template == "multi_solution"
        assert len(draft.solutions) == 2
