import json

import pytest

from privaudit.labels import FIRST_PARTY, THIRD_PARTY
from privaudit.reporting import DatasetManifest, run_pipeline, write_outputs


@pytest.fixture(scope="module")
def pipeline_result(e2e_dataset):
    manifest = DatasetManifest.load(e2e_dataset["manifest"])
    return run_pipeline(manifest)


class TestEndToEnd:
    def test_outcome_counts(self, pipeline_result):
        assert len(pipeline_result.reports) == 2
        assert len(pipeline_result.skipped) == 1
        assert pipeline_result.failures == []

    def test_fitness_release_violations(self, pipeline_result):
        report = next(r for r in pipeline_result.reports if r["version_code"] == 100)
        third = [v for v in report["violations"] if v["party"] == THIRD_PARTY]
        first = [v for v in report["violations"] if v["party"] == FIRST_PARTY]
        assert first == []
        assert len(third) == 2
        groups = {tuple(v["group"]) for v in third}
        assert groups == {
            ("Identifier_Device_ID",),
            ("Identifier_IMSI", "Identifier_Mobile_Carrier", "Identifier_SIM_Serial"),
        }
        provenance = {tuple(v["group"]): v["provenance"] for v in third}
        assert provenance[("Identifier_Device_ID",)] == "Static"
        assert (
            provenance[
                ("Identifier_IMSI", "Identifier_Mobile_Carrier", "Identifier_SIM_Serial")
            ]
            == "Dynamic"
        )
        assert not report["compliant"]

    def test_policy_binding(self, pipeline_result):
        report = next(r for r in pipeline_result.reports if r["version_code"] == 100)
        assert report["policy_capture_date"] == "2016-09-16"
        assert report["policy_gap_days"] == 86
        assert report["valid_segments"] >= 1

    def test_domain_disclosure_none(self, pipeline_result):
        report = next(r for r in pipeline_result.reports if r["version_code"] == 100)
        assert report["domain_disclosure"]["classification"] == "NONE"
        assert report["domain_disclosure"]["undisclosed"] == ["flurry.com"]

    def test_disclosures_counted(self, pipeline_result):
        report = next(r for r in pipeline_result.reports if r["version_code"] == 100)
        assert report["disclosures"][FIRST_PARTY] == 1  # the cookie practice
        assert report["disclosures"][THIRD_PARTY] == 0

    def test_static_only_release_degrades(self, pipeline_result):
        report = next(r for r in pipeline_result.reports if r["version_code"] == 200)
        assert report["analyses"] == {"static": True, "dynamic": False}
        assert report["leaks"][THIRD_PARTY] == {"Identifier_Device_ID": "Static"}
        third = [v for v in report["violations"] if v["party"] == THIRD_PARTY]
        assert len(third) == 1

    def test_skip_reason_recorded(self, pipeline_result):
        skipped = pipeline_result.skipped[0]
        assert skipped["app_id"] == "com.beta.mail"
        assert skipped["reason"] == "no valid policy segments"

    def test_byte_stable_outputs(self, e2e_dataset, tmp_path, pipeline_result):
        manifest = DatasetManifest.load(e2e_dataset["manifest"])
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        write_outputs(run_pipeline(manifest), out_a)
        write_outputs(run_pipeline(manifest), out_b)
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*.json"))
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*.json"))
        assert files_a == files_b
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()

    def test_parallel_matches_serial(self, e2e_dataset, pipeline_result):
        manifest = DatasetManifest.load(e2e_dataset["manifest"])
        parallel = run_pipeline(manifest, jobs=4)
        assert parallel.reports == pipeline_result.reports
        assert parallel.skipped == pipeline_result.skipped

    def test_failure_ledger_collects_and_continues(self, e2e_dataset):
        manifest = DatasetManifest.load(e2e_dataset["root"] / "manifest_with_failure.json")
        result = run_pipeline(manifest)
        assert len(result.reports) == 2
        assert len(result.failures) == 1
        failure = result.failures[0]
        assert failure["app_id"] == "com.gone.app"
        assert failure["error_type"] == "NoPolicy"
