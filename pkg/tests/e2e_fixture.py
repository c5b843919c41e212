"""Builds a complete on-disk dataset for pipeline and CLI tests.

Scenario: a fitness app ships a third-party analytics SDK that reads the
device ID (static evidence) and posts the SIM ID over the network
(dynamic evidence). Its policy only discloses first-party cookie use, so
the expected outcome is exactly two third-party violation groups.
"""

from __future__ import annotations

import json
from pathlib import Path

from synthetic import segment_text_for

from privaudit.dynamic_analysis import FlowRecord, write_flows

APP = "com.acme.fitness"
SKIP_APP = "com.beta.mail"

POLICY_HTML = """<html><head><title>Privacy</title></head><body>
<h1>Privacy Policy</h1>
<p>{cookie_segment}</p>
<p>Questions about this document can be sent to the support team using the help page whenever needed.</p>
</body></html>"""

FILLER_POLICY_HTML = """<html><body>
<p>Welcome to the product page for our mail reader with many useful things inside of it.</p>
<p>Nothing about data handling is stated anywhere within this particular document at all today.</p>
</body></html>"""


def smali_class(class_path: str, invokes: list[str]) -> str:
    lines = [f".class public L{class_path};", ".super Ljava/lang/Object;", ""]
    lines += [".method public run()V", "    .locals 2"]
    lines += [f"    invoke-virtual {{v0}}, {target}" for target in invokes]
    lines += ["    return-void", ".end method"]
    return "\n".join(lines)


def write_policy_captures(root: Path, app_id: str, stamps: list[str], html: str) -> Path:
    capture_dir = root / "policies" / app_id
    capture_dir.mkdir(parents=True, exist_ok=True)
    for stamp in stamps:
        (capture_dir / f"{stamp}.html").write_text(html, encoding="utf-8")
        (capture_dir / f"{stamp}.json").write_text(
            json.dumps({"app_id": app_id, "url": f"http://{app_id}/policy"}),
            encoding="utf-8",
        )
    return capture_dir


def write_apk_tree(root: Path, name: str, release_date: str, version: int) -> Path:
    apk = root / "apks" / name
    sdk_dir = apk / "smali" / "com" / "flurry" / "sdk"
    sdk_dir.mkdir(parents=True, exist_ok=True)
    (apk / "AndroidManifest.xml").write_text(
        '<?xml version="1.0" encoding="utf-8"?>\n'
        '<manifest xmlns:android="http://schemas.android.com/apk/res/android"\n'
        f'    package="{APP}">\n'
        '    <uses-permission android:name="android.permission.READ_PHONE_STATE"/>\n'
        '    <uses-permission android:name="android.permission.INTERNET"/>\n'
        "    <application/>\n"
        "</manifest>\n",
        encoding="utf-8",
    )
    (apk / "meta.json").write_text(
        json.dumps(
            {"app_id": APP, "version_code": version, "release_date": release_date}
        ),
        encoding="utf-8",
    )
    (sdk_dir / "a.smali").write_text(
        smali_class(
            "com/flurry/sdk/a",
            ["Landroid/telephony/TelephonyManager;->getDeviceId()Ljava/lang/String;"],
        ),
        encoding="utf-8",
    )
    return apk


def write_flow_log(root: Path, name: str, version: int) -> Path:
    flows = [
        FlowRecord(
            APP,
            version,
            "2016-06-23T09:00:00",
            "metrics.flurry.com",
            "GET",
            "/collect?sim_id=8944500212345678912&session=41",
            (("Host", "metrics.flurry.com"), ("User-Agent", "fitness/3.1")),
        ),
        FlowRecord(
            APP,
            version,
            "2016-06-23T09:00:02",
            "api.acme.com",
            "GET",
            "/v1/content?locale=en&build=31&theme=dark",
            (("Host", "api.acme.com"), ("User-Agent", "fitness/3.1")),
        ),
    ]
    path = root / "flows" / f"{name}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_flows(flows, path)
    return path


def build_dataset(root: Path, suite, tree) -> dict:
    root = Path(root)
    (root / "models").mkdir(parents=True, exist_ok=True)
    suite.save(root / "models" / "suite.json")
    tree.save(root / "models" / "tree.json")

    cookie_segment = segment_text_for(["Identifier_Cookie"], ["Performed"], ["1stParty"])
    write_policy_captures(
        root, APP, ["20160101", "20160916"], POLICY_HTML.format(cookie_segment=cookie_segment)
    )
    write_policy_captures(root, SKIP_APP, ["20160301"], FILLER_POLICY_HTML)
    # An app whose capture directory exists but is empty: failure-ledger case.
    (root / "policies" / "com.gone.app").mkdir(parents=True, exist_ok=True)

    write_apk_tree(root, "fitness-100", "2016-06-22", 100)
    write_apk_tree(root, "fitness-200", "2016-08-30", 200)
    write_flow_log(root, "fitness-100", 100)

    (root / "profile.json").write_text(
        json.dumps({"imei": "356938035643809", "android_id": "9774d56d682e549c"}),
        encoding="utf-8",
    )

    config = {
        "policy_model": "models/suite.json",
        "flow_model": "models/tree.json",
        "device_profile": "profile.json",
    }
    releases = [
        {
            "app_id": APP,
            "version_code": 100,
            "release_date": "2016-06-22",
            "policy_captures": f"policies/{APP}",
            "apk_dir": "apks/fitness-100",
            "flow_log": "flows/fitness-100.jsonl",
        },
        {
            "app_id": APP,
            "version_code": 200,
            "release_date": "2016-08-30",
            "policy_captures": f"policies/{APP}",
            "apk_dir": "apks/fitness-200",
            "flow_log": None,
        },
        {
            "app_id": SKIP_APP,
            "version_code": 5,
            "release_date": "2016-04-01",
            "policy_captures": f"policies/{SKIP_APP}",
            "apk_dir": None,
            "flow_log": None,
        },
    ]
    (root / "manifest.json").write_text(
        json.dumps({"config": config, "releases": releases}, indent=2), encoding="utf-8"
    )
    (root / "manifest_with_failure.json").write_text(
        json.dumps(
            {
                "config": config,
                "releases": releases
                + [
                    {
                        "app_id": "com.gone.app",
                        "version_code": 1,
                        "release_date": "2016-01-15",
                        "policy_captures": "policies/com.gone.app",
                        "apk_dir": None,
                        "flow_log": None,
                    }
                ],
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return {"root": root, "manifest": root / "manifest.json"}
