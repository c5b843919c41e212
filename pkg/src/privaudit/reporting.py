"""Dataset orchestration and aggregate report views.

`run_pipeline` drives the full per-release flow (policy binding ->
classification -> static + dynamic analysis -> union -> compliance) over a
dataset manifest, collecting per-release failures into a ledger instead of
aborting. Aggregations reproduce the longitudinal views: annual leak and
violation tables, version-over-version deltas, CDF point sets, and the
undisclosed-domain ranking.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable

from .archive import AppRelease, assign_policy_to_release, load_captures
from .classifier import ClassifierSuite, aggregate_policy
from .compliance import (
    MappingTable,
    ViolationRecord,
    attribute_flow_party,
    check_compliance,
    check_domain_disclosure,
    compare_versions,
    map_dynamic,
    union_leaks,
)
from .dynamic_analysis import (
    DecisionTree,
    DeviceProfile,
    extract_pii,
    load_rules,
    predict_leak,
    read_flows,
)
from .errors import ManifestError, PrivauditError
from .labels import FIRST_PARTY, PARTIES, PERFORMED, THIRD_PARTY
from .policy_text import extract_policy_text, normalize_segment, segment_policy
from .static_analysis import ApiCatalog, OwnershipMap, analyze_apk


@dataclass
class ReleaseEntry:
    """One release row of the dataset manifest (paths already resolved)."""

    app_id: str
    version_code: int
    release_date: date
    policy_captures: Path
    apk_dir: Path | None = None
    flow_log: Path | None = None


@dataclass
class DatasetManifest:
    root: Path
    releases: list[ReleaseEntry]
    policy_model: Path
    flow_model: Path | None = None
    api_catalog: Path | None = None
    ownership_map: Path | None = None
    label_mapping: Path | None = None
    pii_rules: Path | None = None
    device_profile: Path | None = None

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        root = path.parent
        data = json.loads(path.read_text(encoding="utf-8"))
        config = data.get("config", {})

        def resolve(value, required=False, name=""):
            if value is None:
                if required:
                    raise ManifestError(f"manifest config misses required path: {name}")
                return None
            p = root / value
            if not p.exists():
                raise ManifestError(f"manifest references missing path: {p}")
            return p

        releases = []
        seen = set()
        for row in data.get("releases", []):
            key = (row["app_id"], int(row["version_code"]))
            if key in seen:
                raise ManifestError(f"duplicate (app_id, version_code): {key}")
            seen.add(key)
            releases.append(
                ReleaseEntry(
                    row["app_id"],
                    int(row["version_code"]),
                    date.fromisoformat(row["release_date"]),
                    resolve(row["policy_captures"], required=True, name="policy_captures"),
                    resolve(row.get("apk_dir")),
                    resolve(row.get("flow_log")),
                )
            )
        return cls(
            root,
            releases,
            resolve(config.get("policy_model"), required=True, name="policy_model"),
            resolve(config.get("flow_model")),
            resolve(config.get("api_catalog")),
            resolve(config.get("ownership_map")),
            resolve(config.get("label_mapping")),
            resolve(config.get("pii_rules")),
            resolve(config.get("device_profile")),
        )


@dataclass
class PipelineContext:
    """Loaded models and catalogs shared by every release."""

    suite: ClassifierSuite
    tree: DecisionTree | None
    api_catalog: ApiCatalog
    ownership: OwnershipMap
    mapping: MappingTable
    rules: list
    device: DeviceProfile

    @classmethod
    def from_manifest(cls, manifest: DatasetManifest) -> "PipelineContext":
        return cls(
            suite=ClassifierSuite.load(manifest.policy_model),
            tree=DecisionTree.load(manifest.flow_model) if manifest.flow_model else None,
            api_catalog=ApiCatalog.load(manifest.api_catalog),
            ownership=OwnershipMap.load(manifest.ownership_map),
            mapping=MappingTable.load(manifest.label_mapping),
            rules=load_rules(manifest.pii_rules),
            device=DeviceProfile.load(manifest.device_profile)
            if manifest.device_profile
            else DeviceProfile.empty(),
        )


@dataclass
class PipelineResult:
    reports: list[dict]
    skipped: list[dict]
    failures: list[dict]


def analyze_release(entry: ReleaseEntry, ctx: PipelineContext) -> tuple[str, dict]:
    """One release end to end. Returns ("report"|"skipped", payload)."""
    release = AppRelease(entry.app_id, entry.version_code, entry.release_date)
    snapshots = load_captures(entry.policy_captures, entry.app_id)
    snapshot = assign_policy_to_release(release, snapshots)
    text = extract_policy_text(snapshot)
    segments = segment_policy(text, snapshot.policy_id)
    profile = aggregate_policy(ctx.suite, [s.text for s in segments], snapshot.policy_id)

    base = {
        "app_id": entry.app_id,
        "version_code": entry.version_code,
        "release_date": entry.release_date.isoformat(),
        "policy_capture_date": snapshot.capture_date.isoformat(),
        "policy_gap_days": release.policy_gap_days,
    }
    if profile.valid_segment_count == 0:
        return "skipped", {**base, "reason": "no valid policy segments"}

    static_leaks = []
    io_errors: list[str] = []
    package = entry.app_id  # fallback when no artifact tree is available
    if entry.apk_dir is not None:
        artifact, static_leaks, io_errors = analyze_apk(entry.apk_dir, ctx.api_catalog)
        package = artifact.package_name

    dynamic_pairs: set[tuple[str, str]] = set()
    dynamic_domains: set[str] = set()
    if entry.flow_log is not None and ctx.tree is not None:
        for flow in read_flows(entry.flow_log):
            if not predict_leak(ctx.tree, flow):
                continue
            party, domain = attribute_flow_party(flow.dst_host, package)
            if party == THIRD_PARTY:
                dynamic_domains.add(domain)
            for label in extract_pii(flow, ctx.rules, ctx.device):
                dynamic_pairs.add((label, party))

    combined = union_leaks(
        static_leaks,
        map_dynamic(dynamic_pairs, ctx.mapping),
        app_id=entry.app_id,
        version_code=entry.version_code,
        dynamic_domains=dynamic_domains,
    )
    violations = check_compliance(combined, profile, ctx.mapping)
    domain_report = check_domain_disclosure(
        combined.third_party_domains, normalize_segment(text), ctx.ownership
    )

    disclosures = {
        party: len(
            {d.pii for d in profile.disclosed if d.party == party and d.procedure == PERFORMED}
        )
        for party in PARTIES
    }
    report = {
        **base,
        "valid_segments": profile.valid_segment_count,
        "total_segments": profile.total_segment_count,
        "disclosures": disclosures,
        "leaks": {
            party: dict(sorted(combined.by_party.get(party, {}).items()))
            for party in PARTIES
        },
        "analyses": {
            "static": entry.apk_dir is not None,
            "dynamic": entry.flow_log is not None and ctx.tree is not None,
        },
        "static_io_errors": io_errors,
        "violations": [
            {
                "pii": v.pii,
                "group": list(v.group),
                "party": v.party,
                "provenance": v.provenance,
            }
            for v in violations
        ],
        "domain_disclosure": domain_report.to_dict(),
        "compliant": not violations,
    }
    return "report", report


def run_pipeline(manifest: DatasetManifest, jobs: int = 1) -> PipelineResult:
    """Run every release; per-release errors land in the failure ledger."""
    ctx = PipelineContext.from_manifest(manifest)

    def worker(entry: ReleaseEntry):
        try:
            return entry, analyze_release(entry, ctx)
        except (PrivauditError, OSError, ValueError, KeyError) as exc:
            return entry, (
                "failure",
                {
                    "app_id": entry.app_id,
                    "version_code": entry.version_code,
                    "error_type": type(exc).__name__,
                    "error": str(exc),
                },
            )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(worker, manifest.releases))
    else:
        outcomes = [worker(entry) for entry in manifest.releases]

    result = PipelineResult([], [], [])
    for entry, (kind, payload) in sorted(
        outcomes, key=lambda item: (item[0].app_id, item[0].version_code)
    ):
        {"report": result.reports, "skipped": result.skipped, "failure": result.failures}[
            kind
        ].append(payload)
    return result


def write_outputs(result: PipelineResult, out_dir: str | Path) -> None:
    """Byte-stable JSON layout: reports/ plus skipped and failure ledgers."""
    out_dir = Path(out_dir)
    reports_dir = out_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    for report in result.reports:
        name = f"{report['app_id']}__{report['version_code']}.json"
        (reports_dir / name).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    (out_dir / "skipped.json").write_text(
        json.dumps(result.skipped, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "failures.json").write_text(
        json.dumps(result.failures, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_reports(out_dir: str | Path) -> list[dict]:
    reports_dir = Path(out_dir) / "reports"
    return [
        json.loads(p.read_text(encoding="utf-8"))
        for p in sorted(reports_dir.glob("*.json"))
    ]


# --- aggregate views -----------------------------------------------------------


def _year(report: dict) -> int:
    return int(report["release_date"][:4])


def _party_violations(report: dict) -> dict[str, int]:
    counts = {party: 0 for party in PARTIES}
    for v in report["violations"]:
        counts[v["party"]] += 1
    return counts


def aggregate_annual(reports: list[dict]) -> list[dict]:
    """Per release-year leak and compliance summary rows.

    Every mean's denominator is the year's APK count, stated in the row.
    Compliant means zero violation records.
    """
    by_year: dict[int, list[dict]] = {}
    for report in reports:
        by_year.setdefault(_year(report), []).append(report)
    rows = []
    for year in sorted(by_year):
        batch = by_year[year]
        apks = len(batch)
        leaks_first = sum(len(r["leaks"][FIRST_PARTY]) for r in batch)
        leaks_third = sum(len(r["leaks"][THIRD_PARTY]) for r in batch)
        compliant = sum(1 for r in batch if r["compliant"])
        viol_first = sum(_party_violations(r)[FIRST_PARTY] for r in batch)
        viol_third = sum(_party_violations(r)[THIRD_PARTY] for r in batch)
        violations_total = viol_first + viol_third
        rows.append(
            {
                "year": year,
                "apps": len({r["app_id"] for r in batch}),
                "apks": apks,
                "leaks_first_total": leaks_first,
                "leaks_first_per_apk": leaks_first / apks,
                "leaks_third_total": leaks_third,
                "leaks_third_per_apk": leaks_third / apks,
                "apks_compliant": compliant,
                "apks_compliant_pct": 100.0 * compliant / apks,
                "violations_total": violations_total,
                "violations_per_apk": violations_total / apks,
                "violations_first_per_apk": viol_first / apks,
                "violations_third_per_apk": viol_third / apks,
            }
        )
    return rows


def _ordered_app_runs(reports: list[dict]) -> dict[str, list[dict]]:
    runs: dict[str, list[dict]] = {}
    for report in reports:
        runs.setdefault(report["app_id"], []).append(report)
    for run in runs.values():
        run.sort(key=lambda r: (r["release_date"], r["version_code"]))
    return runs


def aggregate_deltas(reports: list[dict]) -> list[dict]:
    """Version-over-version violation and disclosure deltas per year.

    Each APK is compared with its immediately preceding version of the same
    app; first versions contribute nothing. Percentages are over the year's
    comparable APKs, and both denominators are stated in the row.
    """
    deltas: dict[int, dict] = {}
    years = sorted({_year(r) for r in reports})
    for year in years:
        deltas[year] = {
            "year": year,
            "apks": sum(1 for r in reports if _year(r) == year),
            "comparable_apks": 0,
            "violations": {p: Counter() for p in PARTIES},
            "disclosures": {p: Counter() for p in PARTIES},
        }
    for run in _ordered_app_runs(reports).values():
        for prev, nxt in zip(run, run[1:]):
            year = _year(nxt)
            bucket = deltas[year]
            bucket["comparable_apks"] += 1
            prev_records = [
                ViolationRecord(v["pii"], tuple(v["group"]), v["party"], v["provenance"])
                for v in prev["violations"]
            ]
            next_records = [
                ViolationRecord(v["pii"], tuple(v["group"]), v["party"], v["provenance"])
                for v in nxt["violations"]
            ]
            verdicts = compare_versions(
                prev_records,
                next_records,
                ordering=(
                    (prev["app_id"], (prev["release_date"], prev["version_code"])),
                    (nxt["app_id"], (nxt["release_date"], nxt["version_code"])),
                ),
            )
            for party, verdict in verdicts.items():
                bucket["violations"][party][verdict] += 1
            for party in PARTIES:
                before = prev["disclosures"][party]
                after = nxt["disclosures"][party]
                verdict = (
                    "Increase" if after > before else "Decrease" if after < before else "Equal"
                )
                bucket["disclosures"][party][verdict] += 1

    rows = []
    for year in years:
        bucket = deltas[year]
        comparable = bucket["comparable_apks"]

        def pct(counter: Counter, verdict: str) -> float:
            return 100.0 * counter[verdict] / comparable if comparable else 0.0

        rows.append(
            {
                "year": year,
                "apks": bucket["apks"],
                "comparable_apks": comparable,
                "violations": {
                    party: {
                        "increase_pct": pct(bucket["violations"][party], "Increase"),
                        "decrease_pct": pct(bucket["violations"][party], "Decrease"),
                    }
                    for party in PARTIES
                },
                "disclosures": {
                    party: {
                        "increase_pct": pct(bucket["disclosures"][party], "Increase"),
                        "decrease_pct": pct(bucket["disclosures"][party], "Decrease"),
                    }
                    for party in PARTIES
                },
            }
        )
    return rows


def cdf_points(values: Iterable[float]) -> list[tuple[float, float]]:
    """Sorted unique values paired with the cumulative fraction <= value."""
    ordered = sorted(values)
    n = len(ordered)
    points = []
    for i, value in enumerate(ordered):
        if i + 1 < n and ordered[i + 1] == value:
            continue
        points.append((value, (i + 1) / n))
    return points


def cdf_datasets(reports: list[dict]) -> list[dict]:
    """CDF point sets of per-APK leak and violation counts, per party/year."""
    datasets = []
    years = sorted({_year(r) for r in reports})
    for metric in ("leaks", "violations"):
        for party in PARTIES:
            for year in years:
                batch = [r for r in reports if _year(r) == year]
                if metric == "leaks":
                    values = [len(r["leaks"][party]) for r in batch]
                else:
                    values = [_party_violations(r)[party] for r in batch]
                datasets.append(
                    {
                        "metric": metric,
                        "party": party,
                        "year": year,
                        "points": [[v, f] for v, f in cdf_points(values)],
                    }
                )
    return datasets


def rank_undisclosed_domains(
    reports: list[dict], top: int | None = None
) -> list[tuple[str, float]]:
    """Domains by percent of analyzed APKs whose policy misses them.

    Descending by percentage, lexicographic tie-break.
    """
    counts: Counter[str] = Counter()
    for report in reports:
        for domain in report["domain_disclosure"]["undisclosed"]:
            counts[domain] += 1
    if not reports:
        return []
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    rows = [(domain, 100.0 * n / len(reports)) for domain, n in ranked]
    return rows[:top] if top else rows
