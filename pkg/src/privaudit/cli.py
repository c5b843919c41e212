"""Command-line entry points for the compliance toolkit.

Exit codes: 0 success, 2 partial success (the failure ledger is
non-empty), 1 fatal.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from datetime import date
from pathlib import Path

from . import app350
from .archive import FixtureStore, TimeGateClient
from .classifier import (
    ClassifierSuite,
    aggregate_policy,
    classify_segment,
    evaluate_suite,
    read_annotated_jsonl,
    train_suite,
)
from .dynamic_analysis import (
    DecisionTree,
    DeviceProfile,
    evaluate_leak_classifier,
    extract_pii,
    load_rules,
    read_flows,
    train_leak_classifier,
)
from .errors import PrivauditError
from .labels import PARTIES, THIRD_PARTY
from .compliance import attribute_flow_party
from .policy_text import extract_text, segment_policy
from .reporting import (
    DatasetManifest,
    PipelineContext,
    aggregate_annual,
    aggregate_deltas,
    analyze_release,
    cdf_datasets,
    load_reports,
    rank_undisclosed_domains,
    run_pipeline,
    write_outputs,
)
from .static_analysis import ApiCatalog, analyze_apk


class _Parser(argparse.ArgumentParser):
    # Usage errors are fatal (exit 1); 2 is reserved for partial success.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_ingest_policy(args) -> int:
    html = Path(args.html).read_bytes()
    text = extract_text(html)
    segments = segment_policy(text, args.policy_id or Path(args.html).stem)
    with open(args.out, "w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(
                json.dumps(
                    {"policy_id": seg.policy_id, "index": seg.index, "text": seg.text},
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote {len(segments)} segments to {args.out}")
    return 0


def cmd_fetch_snapshots(args) -> int:
    from_date = date.fromisoformat(getattr(args, "from"))
    to_date = date.fromisoformat(args.to)
    if args.offline_fixtures:
        store = FixtureStore(args.offline_fixtures)
        snaps = store.fetch(args.app_id, from_date, to_date)
    else:
        client = TimeGateClient(args.archive_base)
        snaps = client.fetch(args.url, from_date, to_date, app_id=args.app_id)
    out = Path(args.out) / args.app_id
    out.mkdir(parents=True, exist_ok=True)
    for snap in snaps:
        stamp = snap.capture_date.strftime("%Y%m%d")
        (out / f"{stamp}.html").write_bytes(snap.raw_html)
        (out / f"{stamp}.json").write_text(
            json.dumps(
                {
                    "app_id": snap.app_id,
                    "url": snap.source_url,
                    "capture_date": snap.capture_date.isoformat(),
                },
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    print(f"fetched {len(snaps)} snapshots into {out}")
    return 0


def _parse_split(spec: str, n: int, seed: int) -> tuple[list[int], list[int]]:
    n_train, n_test = (int(x) for x in spec.split(":"))
    if n_train + n_test > n:
        raise PrivauditError(f"split {spec} needs {n_train + n_test} segments, corpus has {n}")
    ids = list(range(n))
    random.Random(seed).shuffle(ids)
    return ids[:n_train], ids[n_train : n_train + n_test]


def cmd_train_policy(args) -> int:
    corpus = read_annotated_jsonl(args.corpus)
    split = _parse_split(args.split, len(corpus), args.seed)
    suite, report = train_suite(corpus, split, seed=args.seed, epochs=args.epochs)
    suite.save(args.out)
    print(f"trained suite on {len(split[0])} segments -> {args.out}")
    if report.computed:
        print(json.dumps(report.macro, sort_keys=True, indent=2))
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_classify_policy(args) -> int:
    suite = ClassifierSuite.load(args.model)
    segments = []
    for line in Path(args.segments).read_text(encoding="utf-8").splitlines():
        if line.strip():
            segments.append(json.loads(line))
    results = []
    for seg in segments:
        labels = sorted(classify_segment(suite, seg["text"]))
        results.append({**{k: seg[k] for k in ("policy_id", "index") if k in seg}, "labels": labels})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in results:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    profile = aggregate_policy(suite, [s["text"] for s in segments])
    _dump(
        {
            "valid_segments": profile.valid_segment_count,
            "total_segments": profile.total_segment_count,
            "disclosed": sorted(map(list, profile.disclosed)),
        },
        None,
    )
    return 0


def cmd_eval_policy(args) -> int:
    suite = ClassifierSuite.load(args.model)
    report = evaluate_suite(suite, read_annotated_jsonl(args.test))
    _dump(report.to_dict(), args.out)
    return 0


def cmd_train_flows(args) -> int:
    flows = read_flows(args.corpus)
    labeled = [(f, bool(f.leak)) for f in flows if f.leak is not None]
    holdout = []
    if args.holdout:
        rng = random.Random(args.seed)
        ids = list(range(len(labeled)))
        rng.shuffle(ids)
        holdout = [labeled[i] for i in ids[: args.holdout]]
        labeled = [labeled[i] for i in ids[args.holdout :]]
    tree = train_leak_classifier(labeled, max_depth=args.max_depth)
    tree.save(args.out)
    print(f"trained tree ({tree.node_count()} nodes) on {len(labeled)} flows -> {args.out}")
    if holdout:
        print(json.dumps(evaluate_leak_classifier(tree, holdout), sort_keys=True, indent=2))
    return 0


def cmd_analyze_apk(args) -> int:
    catalog = ApiCatalog.load(args.api_catalog)
    artifact, leaks, io_errors = analyze_apk(args.apk_dir, catalog)
    _dump(
        {
            "app_id": artifact.app_id,
            "version_code": artifact.version_code,
            "release_date": artifact.release_date.isoformat(),
            "package_name": artifact.package_name,
            "leaks": [
                {
                    "pii": l.pii,
                    "party": l.party,
                    "domain": l.domain,
                    "evidence": [
                        {"path": r.caller_path, "package": r.caller_package, "api": r.api_signature}
                        for r in l.evidence
                    ],
                }
                for l in leaks
            ],
            "io_errors": io_errors,
        },
        args.out,
    )
    return 0


def cmd_analyze_flows(args) -> int:
    tree = DecisionTree.load(args.model)
    rules = load_rules(args.rules)
    device = DeviceProfile.load(args.profile) if args.profile else DeviceProfile.empty()
    flows = read_flows(args.flows)
    leaking = 0
    labels: dict[str, set[str]] = {p: set() for p in PARTIES}
    domains: set[str] = set()
    for flow in flows:
        if not tree.predict(flow):
            continue
        leaking += 1
        party, domain = attribute_flow_party(flow.dst_host, args.app_package or flow.app_id)
        if party == THIRD_PARTY:
            domains.add(domain)
        labels[party] |= extract_pii(flow, rules, device)
    _dump(
        {
            "flows": len(flows),
            "leaking": leaking,
            "labels": {p: sorted(labels[p]) for p in PARTIES},
            "third_party_domains": sorted(domains),
        },
        args.out,
    )
    return 0


def cmd_check(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    entry = next(
        (
            e
            for e in manifest.releases
            if e.app_id == args.app_id and e.version_code == args.version_code
        ),
        None,
    )
    if entry is None:
        print(f"no release {args.app_id} v{args.version_code} in manifest", file=sys.stderr)
        return 1
    ctx = PipelineContext.from_manifest(manifest)
    kind, payload = analyze_release(entry, ctx)
    _dump({"kind": kind, **payload}, args.out)
    return 0


def cmd_run(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    result = run_pipeline(manifest, jobs=args.jobs)
    write_outputs(result, args.out)
    print(
        f"{len(result.reports)} reports, {len(result.skipped)} skipped, "
        f"{len(result.failures)} failures -> {args.out}"
    )
    return 2 if result.failures else 0


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_report(args) -> int:
    reports = load_reports(args.reports)
    if args.kind == "annual":
        rows = aggregate_annual(reports)
        if args.out.endswith(".csv"):
            header = list(rows[0].keys()) if rows else []
            _write_csv(args.out, header, [[r[k] for k in header] for r in rows])
        else:
            _dump(rows, args.out)
    elif args.kind == "deltas":
        rows = aggregate_deltas(reports)
        if args.out.endswith(".csv"):
            header = ["year", "apks", "comparable_apks"]
            for block in ("violations", "disclosures"):
                for party in PARTIES:
                    for direction in ("increase_pct", "decrease_pct"):
                        header.append(f"{block}_{party}_{direction}")
            flat = []
            for r in rows:
                row = [r["year"], r["apks"], r["comparable_apks"]]
                for block in ("violations", "disclosures"):
                    for party in PARTIES:
                        for direction in ("increase_pct", "decrease_pct"):
                            row.append(r[block][party][direction])
                flat.append(row)
            _write_csv(args.out, header, flat)
        else:
            _dump(rows, args.out)
    elif args.kind == "cdf":
        datasets = cdf_datasets(reports)
        if args.out.endswith(".csv"):
            flat = [
                [d["metric"], d["party"], d["year"], v, f]
                for d in datasets
                for v, f in d["points"]
            ]
            _write_csv(args.out, ["metric", "party", "year", "value", "fraction"], flat)
        else:
            _dump(datasets, args.out)
    else:  # domains
        ranked = rank_undisclosed_domains(reports, top=args.top)
        if args.out.endswith(".csv"):
            _write_csv(args.out, ["domain", "undisclosed_pct"], [list(r) for r in ranked])
        else:
            _dump([{"domain": d, "undisclosed_pct": p} for d, p in ranked], args.out)
    print(f"wrote {args.kind} report to {args.out}")
    return 0


def cmd_convert_app350(args) -> int:
    n = app350.convert_app350_dir(args.corpus_dir, args.out)
    print(f"converted {n} segments to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="privaudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-policy", help="extract and segment one policy page")
    p.add_argument("--html", required=True)
    p.add_argument("--policy-id", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest_policy)

    p = sub.add_parser("fetch-snapshots", help="pull policy captures over a date range")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--archive-base", help="TimeGate base URL (online mode)")
    mode.add_argument("--offline-fixtures", help="capture fixture directory (offline mode)")
    p.add_argument("--url", default="", help="policy URL (online mode)")
    p.add_argument("--app-id", required=True)
    p.add_argument("--from", required=True, help="range start, YYYY-MM-DD")
    p.add_argument("--to", required=True, help="range end, YYYY-MM-DD")
    p.add_argument("--out", required=True, help="output fixture directory")
    p.set_defaults(func=cmd_fetch_snapshots)

    p = sub.add_parser("train-policy", help="train the 32-classifier suite")
    p.add_argument("--corpus", required=True, help="annotated segments, JSONL")
    p.add_argument("--split", default="250:100", help="train:test counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_policy)

    p = sub.add_parser("classify-policy", help="classify segments with a trained suite")
    p.add_argument("--model", required=True)
    p.add_argument("--segments", required=True, help="segments JSONL")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify_policy)

    p = sub.add_parser("eval-policy", help="evaluate a suite on annotated segments")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_policy)

    p = sub.add_parser("train-flows", help="train the flow leak classifier")
    p.add_argument("--corpus", required=True, help="annotated flows, JSONL")
    p.add_argument("--holdout", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_flows)

    p = sub.add_parser("analyze-apk", help="static leak analysis of one artifact tree")
    p.add_argument("--apk-dir", required=True)
    p.add_argument("--api-catalog")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze_apk)

    p = sub.add_parser("analyze-flows", help="dynamic leak analysis of one flow log")
    p.add_argument("--model", required=True)
    p.add_argument("--rules")
    p.add_argument("--profile")
    p.add_argument("--flows", required=True)
    p.add_argument("--app-package", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze_flows)

    p = sub.add_parser("check", help="single-release drill-down")
    p.add_argument("--manifest", required=True)
    p.add_argument("--app-id", required=True)
    p.add_argument("--version-code", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="run the full pipeline over a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="emit aggregate views from run output")
    p.add_argument("--kind", choices=("annual", "deltas", "cdf", "domains"), required=True)
    p.add_argument("--reports", required=True, help="run output directory")
    p.add_argument("--top", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("convert-app350", help="convert a public annotated corpus to JSONL")
    p.add_argument("--corpus-dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert_app350)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PrivauditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
