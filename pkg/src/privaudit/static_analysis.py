"""Static PII-leak detection over decompiled app trees.

Input is an already-decoded artifact directory: a textual
AndroidManifest.xml plus one or more smali*/ disassembly roots. Detection
is signature-level: a catalog maps sensitive API calls to PII types and
the permissions they require; a call only counts as a leak when every
required permission is requested in the manifest. Callers are attributed
to system, first-party, or third-party code by reversed-domain package
comparison.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from datetime import date
from importlib import resources
from pathlib import Path
from xml.etree import ElementTree

from .errors import MalformedManifest, MissingPackage
from .labels import FIRST_PARTY, PII_LABEL_SET, THIRD_PARTY

ANDROID_NS = "http://schemas.android.com/apk/res/android"
SYSTEM_PACKAGE_PREFIXES = ("android.", "java.", "dalvik.")
SYSTEM_PACKAGES = frozenset({"android", "java", "dalvik"})
# A package looks obfuscated when every component is at most this long.
OBFUSCATED_COMPONENT_LEN = 2

_INVOKE_RE = re.compile(r"invoke-[a-z]+(?:/range)?\s+\{[^}]*\}\s*,\s*(L[^\s(]+)")


def _data_path(name: str) -> Path:
    return Path(str(resources.files("privaudit").joinpath("data", name)))


@dataclass(frozen=True)
class ApiCatalogEntry:
    signature: str  # smali form, e.g. "Landroid/telephony/TelephonyManager;->getImei"
    pii: str
    required_permissions: frozenset[str]


class ApiCatalog:
    """Sensitive-API signatures with their PII types and permission gates."""

    def __init__(self, entries: list[ApiCatalogEntry]):
        self.by_signature: dict[str, ApiCatalogEntry] = {}
        for entry in entries:
            if entry.signature in self.by_signature:
                raise ValueError(f"duplicate catalog signature: {entry.signature}")
            if entry.pii not in PII_LABEL_SET:
                raise ValueError(f"unknown PII label in catalog: {entry.pii}")
            self.by_signature[entry.signature] = entry

    def __len__(self) -> int:
        return len(self.by_signature)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ApiCatalog":
        p = Path(path) if path else _data_path("api_catalog.json")
        raw = json.loads(p.read_text(encoding="utf-8"))
        return cls(
            [
                ApiCatalogEntry(
                    item["signature"],
                    item["pii"],
                    frozenset(item.get("permissions", [])),
                )
                for item in raw
            ]
        )


@dataclass(frozen=True)
class PartyAttribution:
    kind: str  # "System" | FIRST_PARTY | THIRD_PARTY
    domain: str | None = None  # registrable domain, third-party only


@dataclass(frozen=True)
class ApiCallRecord:
    caller_path: str     # smali file path relative to the artifact
    caller_package: str  # reversed-domain package derived from the path
    api_signature: str
    pii: str
    attribution: PartyAttribution | None = None


@dataclass(frozen=True)
class StaticLeak:
    pii: str
    party: str  # FIRST_PARTY | THIRD_PARTY
    domain: str | None
    evidence: tuple[ApiCallRecord, ...]


def parse_manifest(xml_text: str | bytes) -> tuple[str, frozenset[str]]:
    """Package name and requested permissions from a decoded manifest.

    Binary (AXML) input fails to parse and raises MalformedManifest; a
    manifest element without a package attribute raises MissingPackage.
    """
    if isinstance(xml_text, bytes):
        xml_text = xml_text.decode("latin-1")
    try:
        root = ElementTree.fromstring(xml_text)
    except ElementTree.ParseError as exc:
        raise MalformedManifest(f"manifest is not parseable XML: {exc}") from exc
    if root.tag != "manifest":
        raise MalformedManifest(f"root element is <{root.tag}>, expected <manifest>")
    package = root.get("package")
    if not package:
        raise MissingPackage("manifest element has no package attribute")
    permissions = set()
    for node in root.iter("uses-permission"):
        name = node.get(f"{{{ANDROID_NS}}}name") or node.get("name")
        if name:
            permissions.add(name)
    return package, frozenset(permissions)


def scan_smali(
    smali_root: str | Path,
    catalog: ApiCatalog,
    errors: list[str] | None = None,
) -> list[ApiCallRecord]:
    """Walk a smali tree and record every invoke of a catalog signature.

    The caller package comes from the file's directory path under the root
    (components joined with "."); a file directly under the root falls back
    to its class name. Repeated invokes yield repeated records. Unreadable
    files are skipped, with their paths appended to `errors` when given.
    """
    root = Path(smali_root)
    records = []
    for path in sorted(root.rglob("*.smali")):
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            if errors is not None:
                errors.append(f"{path}: {exc}")
            continue
        rel = path.relative_to(root)
        package = ".".join(rel.parent.parts) or rel.stem
        caller_path = f"{root.name}/{rel.as_posix()}"
        for line in text.splitlines():
            m = _INVOKE_RE.search(line)
            if not m:
                continue
            signature = m.group(1).split("(", 1)[0]
            entry = catalog.by_signature.get(signature)
            if entry:
                records.append(ApiCallRecord(caller_path, package, signature, entry.pii))
    return records


def attribute_party(
    caller_package: str,
    app_package: str,
    obfuscation_max_len: int = OBFUSCATED_COMPONENT_LEN,
) -> PartyAttribution:
    """Classify a caller package as system, first-party, or third-party.

    System: android./java./dalvik. callers. First-party: the first two
    reversed-domain components match the app package exactly, or the
    package looks obfuscated (every component short). Anything else is
    third-party, with the registrable domain rebuilt from the first two
    components (com.flurry.sdk -> flurry.com).
    """
    if caller_package.startswith(SYSTEM_PACKAGE_PREFIXES) or caller_package in SYSTEM_PACKAGES:
        return PartyAttribution("System")
    components = caller_package.split(".")
    if components[:2] == app_package.split(".")[:2]:
        return PartyAttribution(FIRST_PARTY)
    if all(len(c) <= obfuscation_max_len for c in components):
        return PartyAttribution(FIRST_PARTY)
    return PartyAttribution(THIRD_PARTY, ".".join(reversed(components[:2])))


def attribute_records(
    records: list[ApiCallRecord], app_package: str
) -> list[ApiCallRecord]:
    """Return records with party attribution filled in."""
    return [
        replace(rec, attribution=attribute_party(rec.caller_package, app_package))
        for rec in records
    ]


def detect_static_leaks(
    records: list[ApiCallRecord],
    requested_permissions: frozenset[str],
    catalog: ApiCatalog,
) -> list[StaticLeak]:
    """Group permission-gated calls into leaks keyed by (pii, party, domain).

    A call survives the gate only when all of its catalog entry's required
    permissions are requested in the manifest; system-attributed calls are
    discarded. The result is deterministically sorted and independent of
    record order.
    """
    perms = frozenset(requested_permissions)
    groups: dict[tuple[str, str, str | None], list[ApiCallRecord]] = {}
    for rec in records:
        if rec.attribution is None:
            raise ValueError("records must be attributed before leak detection")
        if rec.attribution.kind == "System":
            continue
        entry = catalog.by_signature.get(rec.api_signature)
        if entry is None or not entry.required_permissions <= perms:
            continue
        key = (rec.pii, rec.attribution.kind, rec.attribution.domain)
        groups.setdefault(key, []).append(rec)
    leaks = []
    for (pii, party, domain), evidence in groups.items():
        ordered = tuple(
            sorted(evidence, key=lambda r: (r.caller_path, r.api_signature, r.caller_package))
        )
        leaks.append(StaticLeak(pii, party, domain, ordered))
    return sorted(leaks, key=lambda l: (l.pii, l.party, l.domain or ""))


class OwnershipMap:
    """Registrable domain -> company term chain (label, owner, parent...)."""

    def __init__(self, mapping: dict[str, list[str]]):
        self._terms: dict[str, list[str]] = {}
        for domain, terms in mapping.items():
            if not terms:
                raise ValueError(f"ownership entry for {domain} has no terms")
            label = domain.split(".")[0]
            chain = list(terms)
            if label not in chain:
                chain.insert(0, label)
            self._terms[domain] = chain

    def __contains__(self, domain: str) -> bool:
        return domain in self._terms

    def terms(self, domain: str) -> list[str]:
        """Known domains return their chain; unknown ones just their label."""
        if domain in self._terms:
            return list(self._terms[domain])
        return [domain.split(".")[0]]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "OwnershipMap":
        p = Path(path) if path else _data_path("ownership.json")
        return cls(json.loads(p.read_text(encoding="utf-8")))


def expand_ownership(domain: str, ownership: OwnershipMap) -> list[str]:
    return ownership.terms(domain)


@dataclass
class ApkArtifact:
    """A decompiled release tree plus the identity from its meta sidecar."""

    app_id: str
    version_code: int
    release_date: date
    package_name: str
    requested_permissions: frozenset[str]
    smali_roots: tuple[Path, ...]

    def __post_init__(self):
        if len(self.package_name.split(".")) < 2:
            raise MalformedManifest(
                f"package name {self.package_name!r} needs at least two components"
            )


def load_apk_artifact(apk_dir: str | Path) -> ApkArtifact:
    """Read meta.json + AndroidManifest.xml and locate the smali roots."""
    apk_dir = Path(apk_dir)
    meta = json.loads((apk_dir / "meta.json").read_text(encoding="utf-8"))
    package, permissions = parse_manifest(
        (apk_dir / "AndroidManifest.xml").read_text(encoding="utf-8")
    )
    roots = tuple(sorted(p for p in apk_dir.glob("smali*") if p.is_dir()))
    return ApkArtifact(
        meta["app_id"],
        int(meta["version_code"]),
        date.fromisoformat(meta["release_date"]),
        package,
        permissions,
        roots,
    )


def analyze_apk(
    apk_dir: str | Path, catalog: ApiCatalog
) -> tuple[ApkArtifact, list[StaticLeak], list[str]]:
    """Full static pass over one artifact tree: scan, attribute, gate."""
    artifact = load_apk_artifact(apk_dir)
    io_errors: list[str] = []
    records: list[ApiCallRecord] = []
    for root in artifact.smali_roots:
        records.extend(scan_smali(root, catalog, io_errors))
    attributed = attribute_records(records, artifact.package_name)
    leaks = detect_static_leaks(attributed, artifact.requested_permissions, catalog)
    return artifact, leaks, io_errors
