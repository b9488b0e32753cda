import dataclasses
import json
from fractions import Fraction
from pathlib import Path

import pytest

from geoforge.dataset import load_config, load_records, load_scenes, record_content_hash
from geoforge.pipeline import (
    AnswerCheck,
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

SMALL = PipelineConfig(seed_start=0, count=40)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    report = generate(SMALL, out)
    return out, report


class TestGenerate:
    def test_produces_records_and_files(self, dataset):
        out, report = dataset
        assert report.count > 0
        assert (out / "records.jsonl").exists()
        assert (out / "manifest.jsonl").exists()
        assert (out / "scenes.jsonl").exists()
        assert (out / "config.json").exists()
        for record in report.records:
            assert (out / record.diagram).exists()

    def test_every_record_passes_verify(self, dataset):
        out, _ = dataset
        report = verify(out)
        assert report.ok, report.failures[:5]

    def test_filter_guarantee(self, dataset):
        _, report = dataset
        for r in report.records:
            assert r.metadata.reasoning_length >= SMALL.tau_l
            assert r.metadata.premise_ratio >= SMALL.tau_r

    def test_templates_present(self, dataset):
        _, report = dataset
        templates = {r.template for r in report.records}
        assert "deductive" in templates
        assert "multi_solution" in templates
        multi = [r for r in report.records if r.template == "multi_solution"]
        assert all(len(r.solutions) >= 2 for r in multi)

    def test_determinism(self, dataset, tmp_path):
        out, _ = dataset
        again = tmp_path / "again"
        generate(SMALL, again)
        for name in ("records.jsonl", "manifest.jsonl", "scenes.jsonl", "config.json"):
            assert (again / name).read_bytes() == (out / name).read_bytes()
        ours = sorted((out / "svg").iterdir())
        theirs = sorted((again / "svg").iterdir())
        assert [p.name for p in ours] == [p.name for p in theirs]
        for a, b in zip(ours, theirs):
            assert a.read_bytes() == b.read_bytes()

    def test_round_trip_records(self, dataset):
        out, report = dataset
        loaded = load_records(out)
        assert [r.id for r in loaded] == [r.id for r in report.records]
        assert loaded[0] == report.records[0]

    def test_config_echo(self, dataset):
        out, _ = dataset
        assert PipelineConfig.from_doc(load_config(out)) == SMALL

    def test_workers_do_not_change_output(self, tmp_path):
        cfg = dataclasses.replace(SMALL, count=6)
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        generate(cfg, serial)
        generate(dataclasses.replace(cfg, workers=2), parallel)
        assert (serial / "records.jsonl").read_bytes() == (parallel / "records.jsonl").read_bytes()

    def test_invalid_config_rejected(self):
        with pytest.raises(PipelineError):
            PipelineConfig(tau_r=1.5)
        with pytest.raises(PipelineError):
            PipelineConfig(translator="quantum")


class TestVerifyTamperDetection:
    def _tampered(self, dataset, tmp_path, mutate):
        out, _ = dataset
        target = tmp_path / "tampered"
        target.mkdir()
        for name in ("manifest.jsonl", "scenes.jsonl", "config.json"):
            (target / name).write_bytes((out / name).read_bytes())
        (target / "svg").mkdir()
        lines = (out / "records.jsonl").read_text().splitlines()
        docs = [json.loads(line) for line in lines]
        mutate(docs[0])
        with (target / "records.jsonl").open("w") as f:
            for doc in docs:
                f.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
        return verify(target)

    def test_tampered_premise_fails(self, dataset, tmp_path):
        def mutate(doc):
            doc["formal_solutions"][0][0]["premises"][0] = "seg_len(A,B;7717)"
            doc["id"] = record_content_hash(doc)

        report = self._tampered(dataset, tmp_path, mutate)
        assert not report.ok
        assert any("step 0" in reason for _, reason in report.failures)

    def test_perturbed_answer_fails(self, dataset, tmp_path):
        def mutate(doc):
            if doc["kind"] != "numeric":
                return
            doc["answer"]["exact"] = None
            doc["answer"]["approx"] = doc["answer"]["approx"] * 1.05
            doc["id"] = record_content_hash(doc)

        out, report0 = dataset
        if report0.records[0].kind != "numeric":
            pytest.skip("first record is not numeric")
        report = self._tampered(dataset, tmp_path, mutate)
        assert not report.ok

    def test_hash_mismatch_detected(self, dataset, tmp_path):
        def mutate(doc):
            doc["question"] = doc["question"] + " (edited)"

        report = self._tampered(dataset, tmp_path, mutate)
        assert any("hash" in reason for _, reason in report.failures)

    def test_corrupt_schema_detected(self, dataset, tmp_path):
        def mutate(doc):
            del doc["metadata"]

        report = self._tampered(dataset, tmp_path, mutate)
        assert any("corrupt" in reason for _, reason in report.failures)


class TestBootstrap:
    def test_generation_shift(self, dataset, tmp_path):
        out, report = dataset
        boot_dir = tmp_path / "boot"
        boot = bootstrap(SMALL, out, boot_dir)
        assert boot.count > 0
        assert all(r.metadata.bootstrap_generation == 1 for r in boot.records)
        assert verify(boot_dir).ok

    def test_strict_premise_growth(self, dataset, tmp_path):
        out, _ = dataset
        boot_dir = tmp_path / "boot2"
        boot = bootstrap(SMALL, out, boot_dir)
        prior_scenes = load_scenes(out)
        new_scenes = load_scenes(boot_dir)
        matched = 0
        for scene in new_scenes.values():
            ancestors = [
                p
                for p in prior_scenes.values()
                if p.seed == scene.seed and p.generator == scene.generator
            ]
            assert ancestors
            assert len(scene.initial_statements) > len(ancestors[0].initial_statements)
            matched += 1
        assert matched == len(new_scenes)

    def test_selection_quantile_size(self, dataset, tmp_path):
        out, report = dataset
        scene_count = len({r.scene_id for r in report.records})
        boot = bootstrap(SMALL, out, tmp_path / "boot3")
        selected = {r.scene_id for r in boot.records}
        import math

        assert len(selected) <= max(1, math.ceil(SMALL.bootstrap_quantile * scene_count))

    def test_empty_prior_rejected(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        (empty / "records.jsonl").write_text("")
        (empty / "scenes.jsonl").write_text("")
        with pytest.raises(PipelineError):
            bootstrap(SMALL, empty, tmp_path / "b")


def _synthetic_dataset(tmp_path, tiers=(1, 2, 3, 4), per_tier=3) -> Path:
    """Dataset with hand-set tiers for exercising curation."""
    out = tmp_path / "synth"
    report = generate(dataclasses.replace(SMALL, count=12), out)
    docs = []
    lines = (out / "records.jsonl").read_text().splitlines()
    base_docs = [json.loads(line) for line in lines if json.loads(line)["kind"] == "numeric"]
    template = base_docs[0]
    lengths = {1: 7, 2: 15, 3: 30, 4: 80}
    for tier in tiers:
        for i in range(per_tier):
            doc = json.loads(json.dumps(template))
            doc["metadata"]["tier"] = tier
            doc["metadata"]["reasoning_length"] = lengths[tier]
            doc["seed"] = 10_000 + tier * 100 + i
            doc["id"] = record_content_hash(doc)
            doc["diagram"] = f"svg/{doc['id']}.svg"
            docs.append(doc)
    with (out / "records.jsonl").open("w") as f:
        for doc in docs:
            f.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return out


class TestCurate:
    def test_eight_records_for_quota_two(self, tmp_path):
        data = _synthetic_dataset(tmp_path)
        chosen = curate_testset(data, 2, tmp_path / "test_split")
        assert len(chosen) == 8
        per_tier = {}
        for r in chosen:
            per_tier[r.metadata.tier] = per_tier.get(r.metadata.tier, 0) + 1
        assert per_tier == {1: 2, 2: 2, 3: 2, 4: 2}

    def test_key_and_test_files(self, tmp_path):
        data = _synthetic_dataset(tmp_path)
        split = tmp_path / "split"
        curate_testset(data, 1, split)
        test_docs = [json.loads(line) for line in (split / "test.jsonl").read_text().splitlines()]
        key_docs = [json.loads(line) for line in (split / "key.jsonl").read_text().splitlines()]
        assert len(test_docs) == len(key_docs) == 4
        for doc in test_docs:
            assert set(doc) == {"id", "question", "diagram", "tier"}

    def test_insufficient_records(self, tmp_path):
        data = _synthetic_dataset(tmp_path, tiers=(1, 2, 3))
        with pytest.raises(InsufficientRecordsError) as exc_info:
            curate_testset(data, 2, tmp_path / "split2")
        assert exc_info.value.tier == 4

    def test_proof_records_never_selected(self, tmp_path):
        data = _synthetic_dataset(tmp_path)
        chosen = curate_testset(data, 2, tmp_path / "split3")
        assert all(r.kind == "numeric" for r in chosen)


class TestCheckAnswer:
    CASES = [
        ("the answer is 5.04", 5.0, True),
        ("5.1", 5.0, False),
        ("x = 0.0001", 0.0, True),
        ("0.02", 0.0, False),
        ("after simplification we get 42", 42.0, True),
        ("roughly 42.4", 42.0, True),
        ("42.43", 42.0, False),
        ("-3.02", -3.0, True),
        ("answer: 3/4", 0.75, True),
        ("first 10 then finally 7", 7.0, True),
        ("first 7 then finally 10", 7.0, False),
        ("1e2", 100.0, True),
        ("no numbers here", 5.0, False),
        ("101", 100.0, True),  # exactly 1.000% relative error
        ("101.001", 100.0, False),  # 1.001% relative error
        ("99", 100.0, True),
        ("98.999", 100.0, False),
        ("0.01", 0.0, True),  # zero-key absolute boundary
        ("0.011", 0.0, False),
        ("120", 7.0, False),
    ]

    @pytest.mark.parametrize("predicted,key,expected", CASES)
    def test_table(self, predicted, key, expected):
        assert check_answer(predicted, key).correct is expected

    def test_no_number_flag(self):
        result = check_answer("i cannot solve this", 3.0)
        assert result == AnswerCheck(False, False, None)

    def test_fraction_key(self):
        assert check_answer("0.5", Fraction(1, 2)).correct

    def test_non_finite_key_rejected(self):
        with pytest.raises(PipelineError):
            check_answer("1", float("nan"))


class TestStats:
    def test_shapes(self, dataset):
        _, report = dataset
        s = stats(report.records)
        assert s.total == report.count
        assert sum(s.length_histogram.values()) == s.total
        assert sum(s.ratio_histogram.values()) == s.total
        assert sum(s.template_counts.values()) == s.total
        assert "0-4" not in {k for k, v in s.length_histogram.items() if v}

    def test_zero_mass_below_tau_l(self, dataset):
        _, report = dataset
        s = stats(report.records)
        below = [r for r in report.records if r.metadata.reasoning_length < SMALL.tau_l]
        assert not below

    def test_generation_comparison(self, dataset, tmp_path):
        out, report = dataset
        boot = bootstrap(SMALL, out, tmp_path / "bs")
        combined = stats(report.records + boot.records)
        assert set(combined.generation_length_histograms) == {"0", "1"}
        text = combined.render_text()
        assert "generation 0" in text and "generation 1" in text
