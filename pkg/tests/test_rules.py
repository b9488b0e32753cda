import math
from fractions import Fraction

from geoforge.constructions import BASE_GENERATORS, extend_scene, generate_base_scene
from geoforge.geometry import SceneGeometry
from geoforge.reasoner import saturate, saturate_statements
from geoforge.rules import DEFAULT_RULES, RULES_BY_ID
from geoforge.statements import (
    angle_measure,
    collinear,
    congruent_triangles,
    equal_angles,
    equal_segments,
    midpoint,
    on_circle,
    parallel,
    perpendicular,
    right_angle,
    segment_length,
    segment_ratio,
    similar_triangles,
)


def fired(geometry, initial, rule_id, conclusion=None):
    """Saturate and assert the rule produced (optionally) the conclusion."""
    graph = saturate_statements(SceneGeometry(geometry), initial, mode="multi")
    rules_used = {t.rule for t in graph.transitions}
    assert rule_id in rules_used, f"{rule_id} never fired (used: {sorted(rules_used)})"
    if conclusion is not None:
        assert conclusion in graph.index, f"missing conclusion {conclusion}"
        by_rule = {
            graph.stmt(t.conclusion)
            for t in graph.transitions
            if t.rule == rule_id
        }
        assert conclusion in by_rule
    return graph


def _polar(r, deg):
    return (r * math.cos(math.radians(deg)), r * math.sin(math.radians(deg)))


ISO = {"A": (2.0, 2.0 * math.tan(math.radians(65.0))), "B": (0.0, 0.0), "C": (4.0, 0.0)}


class TestTriangleRules:
    def test_isosceles_base_angles(self):
        fired(
            ISO,
            [equal_segments(("A", "B"), ("A", "C"))],
            "isosceles_base_angles",
            equal_angles(("A", "B", "C"), ("A", "C", "B")),
        )

    def test_isosceles_converse(self):
        fired(
            ISO,
            [equal_angles(("A", "B", "C"), ("A", "C", "B"))],
            "isosceles_converse",
            equal_segments(("A", "B"), ("A", "C")),
        )

    def test_triangle_angle_sum(self):
        fired(
            ISO,
            [angle_measure(("B", "A", "C"), 50), angle_measure(("A", "B", "C"), 65)],
            "triangle_angle_sum",
            angle_measure(("A", "C", "B"), 65),
        )

    def test_angle_sum_equal_pair(self):
        fired(
            ISO,
            [
                equal_angles(("A", "B", "C"), ("A", "C", "B")),
                angle_measure(("B", "A", "C"), 50),
            ],
            "triangle_angle_sum_equal_pair",
            angle_measure(("A", "B", "C"), 65),
        )


class TestLineAndAngleRules:
    def test_vertical_angles(self):
        geometry = {
            "A": (0.0, 0.0), "B": (2.0, 2.0), "X": (1.0, 1.0), "C": (0.0, 2.0), "D": (2.0, 0.0),
        }
        fired(
            geometry,
            [collinear("A", "X", "B"), collinear("C", "X", "D")],
            "vertical_angles",
            equal_angles(("A", "X", "C"), ("B", "X", "D")),
        )

    def test_alternate_interior(self):
        geometry = {"A": (0.0, 0.0), "B": (4.0, 0.0), "C": (5.0, 2.0), "D": (1.0, 2.0)}
        fired(
            geometry,
            [parallel(("A", "B"), ("C", "D"))],
            "alternate_interior_angles",
            equal_angles(("A", "B", "D"), ("B", "D", "C")),
        )

    def test_corresponding_angles(self):
        geometry = {
            "A": (0.0, 0.0), "B": (4.0, 0.0), "C": (5.0, 2.0), "D": (2.0, 2.0), "E": (5.5, 3.0),
        }
        fired(
            geometry,
            [parallel(("A", "B"), ("C", "D")), collinear("B", "C", "E")],
            "corresponding_angles",
            equal_angles(("A", "B", "C"), ("D", "C", "E")),
        )

    def test_perpendicular_shared_endpoint(self):
        geometry = {"A": (2.0, 0.0), "B": (0.0, 0.0), "C": (0.0, 3.0)}
        fired(
            geometry,
            [perpendicular(("A", "B"), ("B", "C"))],
            "perpendicular_right_angle",
            right_angle(("A", "B", "C")),
        )

    def test_perpendicular_foot_on_line(self):
        geometry = {"A": (1.0, 2.0), "D": (1.0, 0.0), "B": (0.0, 0.0), "C": (3.0, 0.0)}
        graph = fired(
            geometry,
            [perpendicular(("A", "D"), ("B", "C")), collinear("B", "D", "C")],
            "perpendicular_right_angle",
            right_angle(("A", "D", "B")),
        )
        assert right_angle(("A", "D", "C")) in graph.index

    def test_right_angle_measure(self):
        geometry = {"A": (2.0, 0.0), "B": (0.0, 0.0), "C": (0.0, 3.0)}
        fired(
            geometry,
            [right_angle(("A", "B", "C"))],
            "right_angle_measure",
            angle_measure(("A", "B", "C"), 90),
        )

    def test_angle_addition(self):
        geometry = {
            "B": (0.0, 0.0),
            "A": (2.0, 0.0),
            "D": _polar(2.0, 30.0),
            "C": _polar(2.0, 75.0),
        }
        fired(
            geometry,
            [angle_measure(("A", "B", "D"), 30), angle_measure(("D", "B", "C"), 45)],
            "angle_addition",
            angle_measure(("A", "B", "C"), 75),
        )


class TestMidpointRules:
    MID = {"A": (0.0, 0.0), "B": (2.0, 0.0), "M": (1.0, 0.0)}

    def test_equal_halves(self):
        fired(
            self.MID,
            [midpoint("M", ("A", "B"))],
            "midpoint_equal_halves",
            equal_segments(("A", "M"), ("B", "M")),
        )

    def test_half_ratio(self):
        fired(
            self.MID,
            [midpoint("M", ("A", "B"))],
            "midpoint_half_ratio",
            segment_ratio(("A", "M"), ("A", "B"), Fraction(1, 2)),
        )

    def test_midsegment(self):
        geometry = {
            "A": (0.0, 0.0), "B": (4.0, 0.0), "C": (2.0, 3.0),
            "M": (2.0, 0.0), "N": (1.0, 1.5),
        }
        initial = [midpoint("M", ("A", "B")), midpoint("N", ("A", "C"))]
        fired(geometry, initial, "midsegment_parallel", parallel(("M", "N"), ("B", "C")))
        fired(
            geometry,
            initial,
            "midsegment_half_length",
            segment_ratio(("M", "N"), ("B", "C"), Fraction(1, 2)),
        )


class TestPythagoras:
    R345 = {"A": (0.0, 0.0), "B": (3.0, 0.0), "C": (0.0, 4.0)}

    def test_forward(self):
        fired(
            self.R345,
            [
                right_angle(("B", "A", "C")),
                segment_length(("A", "B"), 3),
                segment_length(("A", "C"), 4),
            ],
            "pythagoras",
            segment_length(("B", "C"), 5),
        )

    def test_leg(self):
        fired(
            self.R345,
            [
                right_angle(("B", "A", "C")),
                segment_length(("B", "C"), 5),
                segment_length(("A", "B"), 3),
            ],
            "pythagoras_leg",
            segment_length(("A", "C"), 4),
        )

    def test_irrational_hypotenuse_stays_silent(self):
        geometry = {"A": (0.0, 0.0), "B": (1.0, 0.0), "C": (0.0, 1.0)}
        graph = saturate_statements(
            SceneGeometry(geometry),
            [
                right_angle(("B", "A", "C")),
                segment_length(("A", "B"), 1),
                segment_length(("A", "C"), 1),
            ],
        )
        assert not any(t.rule == "pythagoras" for t in graph.transitions)


_SHIFT = (5.0, 5.0)
_CONG = {
    "A": (0.0, 0.0), "B": (3.0, 0.0), "C": (1.0, 2.0),
    "D": (0.0 + _SHIFT[0], 0.0 + _SHIFT[1]),
    "E": (3.0 + _SHIFT[0], 0.0 + _SHIFT[1]),
    "F": (1.0 + _SHIFT[0], 2.0 + _SHIFT[1]),
}


class TestCongruence:
    def test_sss(self):
        fired(
            _CONG,
            [
                equal_segments(("A", "B"), ("D", "E")),
                equal_segments(("B", "C"), ("E", "F")),
                equal_segments(("A", "C"), ("D", "F")),
            ],
            "sss_congruence",
            congruent_triangles(("A", "B", "C"), ("D", "E", "F")),
        )

    def test_sss_shared_side(self):
        geometry = {"A": (0.0, 0.0), "C": (4.0, 0.0), "B": (2.0, 3.0), "D": (2.0, 0.0)}
        fired(
            geometry,
            [
                equal_segments(("A", "B"), ("C", "B")),
                equal_segments(("A", "D"), ("C", "D")),
            ],
            "sss_congruence",
            congruent_triangles(("A", "B", "D"), ("C", "B", "D")),
        )

    def test_sas(self):
        fired(
            _CONG,
            [
                equal_segments(("B", "A"), ("E", "D")),
                equal_angles(("A", "B", "C"), ("D", "E", "F")),
                equal_segments(("B", "C"), ("E", "F")),
            ],
            "sas_congruence",
            congruent_triangles(("A", "B", "C"), ("D", "E", "F")),
        )

    def test_asa(self):
        fired(
            _CONG,
            [
                equal_angles(("B", "A", "C"), ("E", "D", "F")),
                equal_segments(("A", "B"), ("D", "E")),
                equal_angles(("A", "B", "C"), ("D", "E", "F")),
            ],
            "asa_congruence",
            congruent_triangles(("A", "B", "C"), ("D", "E", "F")),
        )

    def test_congruent_sides_and_angles(self):
        initial = [congruent_triangles(("A", "B", "C"), ("D", "E", "F"))]
        fired(_CONG, initial, "congruent_sides", equal_segments(("A", "B"), ("D", "E")))
        fired(_CONG, initial, "congruent_angles", equal_angles(("A", "B", "C"), ("D", "E", "F")))


_SIM = {
    "A": (0.0, 0.0), "B": (3.0, 0.0), "C": (1.0, 2.0),
    "D": (5.0, 5.0), "E": (6.5, 5.0), "F": (5.5, 6.0),
}


class TestSimilarity:
    def test_aa(self):
        fired(
            _SIM,
            [
                equal_angles(("B", "A", "C"), ("E", "D", "F")),
                equal_angles(("A", "B", "C"), ("D", "E", "F")),
            ],
            "aa_similarity",
            similar_triangles(("A", "B", "C"), ("D", "E", "F")),
        )

    def test_side_ratio(self):
        fired(
            _SIM,
            [
                similar_triangles(("A", "B", "C"), ("D", "E", "F")),
                segment_length(("A", "B"), 3),
                segment_length(("D", "E"), Fraction(3, 2)),
            ],
            "similar_side_ratio",
            segment_ratio(("A", "C"), ("D", "F"), 2),
        )


class TestCircleRules:
    def test_inscribed_angle(self):
        geometry = {
            "O": (0.0, 0.0),
            "A": _polar(2.0, 0.0),
            "B": _polar(2.0, 100.0),
            "C": _polar(2.0, 200.0),
        }
        sr = ("O", "A")
        fired(
            geometry,
            [
                on_circle("A", "O", sr),
                on_circle("B", "O", sr),
                on_circle("C", "O", sr),
                angle_measure(("A", "O", "B"), 100),
            ],
            "inscribed_angle",
            angle_measure(("A", "C", "B"), 50),
        )

    def test_inscribed_angle_minor_arc_blocked(self):
        geometry = {
            "O": (0.0, 0.0),
            "A": _polar(2.0, 0.0),
            "B": _polar(2.0, 100.0),
            "C": _polar(2.0, 50.0),  # inside the minor arc
        }
        sr = ("O", "A")
        graph = saturate_statements(
            SceneGeometry(geometry),
            [
                on_circle("A", "O", sr),
                on_circle("B", "O", sr),
                on_circle("C", "O", sr),
                angle_measure(("A", "O", "B"), 100),
            ],
        )
        assert angle_measure(("A", "C", "B"), 50) not in graph.index

    def test_thales(self):
        geometry = {
            "O": (0.0, 0.0),
            "A": (2.0, 0.0),
            "B": (-2.0, 0.0),
            "C": _polar(2.0, 120.0),
        }
        sr = ("O", "A")
        fired(
            geometry,
            [
                on_circle("A", "O", sr),
                on_circle("B", "O", sr),
                on_circle("C", "O", sr),
                midpoint("O", ("A", "B")),
            ],
            "thales_right_angle",
            right_angle(("A", "C", "B")),
        )


class TestAlgebraicRules:
    EQ = {"A": (0.0, 0.0), "B": (2.0, 0.0), "C": (0.0, 1.0), "D": (2.0, 1.0), "E": (0.0, 2.0), "F": (2.0, 2.0)}

    def test_equal_segments_transitive(self):
        fired(
            self.EQ,
            [equal_segments(("A", "B"), ("C", "D")), equal_segments(("C", "D"), ("E", "F"))],
            "equal_segments_transitive",
            equal_segments(("A", "B"), ("E", "F")),
        )

    def test_equal_angles_transitive(self):
        geometry = {
            "A": (2.0, 0.0), "B": (0.0, 0.0), "C": _polar(2.0, 40.0),
            "D": (5.0, 0.0), "E": (3.0, 0.0), "F": (3.0 + 2.0 * math.cos(math.radians(40.0)), 2.0 * math.sin(math.radians(40.0))),
            "G": (8.0, 0.0), "H": (6.0, 0.0), "I": (6.0 + 2.0 * math.cos(math.radians(40.0)), 2.0 * math.sin(math.radians(40.0))),
        }
        fired(
            geometry,
            [
                equal_angles(("A", "B", "C"), ("D", "E", "F")),
                equal_angles(("D", "E", "F"), ("G", "H", "I")),
            ],
            "equal_angles_transitive",
            equal_angles(("A", "B", "C"), ("G", "H", "I")),
        )

    def test_segment_length_substitution(self):
        fired(
            self.EQ,
            [equal_segments(("A", "B"), ("C", "D")), segment_length(("A", "B"), 2)],
            "segment_length_substitution",
            segment_length(("C", "D"), 2),
        )

    def test_angle_measure_substitution(self):
        fired(
            ISO,
            [
                equal_angles(("A", "B", "C"), ("A", "C", "B")),
                angle_measure(("A", "B", "C"), 65),
            ],
            "angle_measure_substitution",
            angle_measure(("A", "C", "B"), 65),
        )

    def test_ratio_length_substitution(self):
        geometry = {"B": (0.0, 0.0), "D": (2.0, 0.0), "C": (6.0, 0.0)}
        fired(
            geometry,
            [
                segment_ratio(("B", "D"), ("B", "C"), Fraction(1, 3)),
                segment_length(("B", "C"), 6),
            ],
            "ratio_length_substitution",
            segment_length(("B", "D"), 2),
        )


class TestCatalog:
    def test_every_rule_has_unique_id(self):
        assert len(RULES_BY_ID) == len(DEFAULT_RULES)

    def test_soundness_on_random_scenes(self):
        # no rule may ever derive a numerically false conclusion
        generators = sorted(BASE_GENERATORS)
        for seed in range(150):
            scene = generate_base_scene(generators[seed % len(generators)], seed)
            scene = extend_scene(scene, 3, seed + 1)
            graph = saturate(scene, mode="multi")
            for i, stmt in enumerate(graph.statements):
                assert scene.geometry.check_statement(stmt).holds, (scene.generator, seed, stmt)

    def test_rules_fired_across_catalog(self):
        # the random sweep should exercise most of the catalog
        used: set[str] = set()
        generators = sorted(BASE_GENERATORS)
        for seed in range(120):
            scene = generate_base_scene(generators[seed % len(generators)], seed)
            scene = extend_scene(scene, 4, seed + 2)
            graph = saturate(scene, mode="multi")
            used.update(t.rule for t in graph.transitions)
        assert len(used) >= 18, sorted(used)
