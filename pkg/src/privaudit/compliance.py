"""Leak-vs-disclosure contradiction engine.

Dynamic leak labels convert to PII labels through a mapping table. Because
one dynamic label can map to several PII labels, labels sharing a mapping
row form an equivalence group: a leak only counts as a violation when *no*
member of its group is disclosed as Performed for the leaking party, and
each (group, party) yields a single violation record. Third-party domain
disclosure is checked separately via company-ownership term lookup over the
normalized policy text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .classifier import PolicyDisclosureProfile
from .errors import MappingTableError, NotAdjacent, UnknownDynamicLabel
from .labels import (
    DYNAMIC_LABELS,
    FIRST_PARTY,
    PARTIES,
    PERFORMED,
    PII_LABELS,
    PII_LABEL_SET,
    THIRD_PARTY,
)
from .policy_text import normalize_segment
from .static_analysis import OwnershipMap, StaticLeak

PROVENANCE_STATIC = "Static"
PROVENANCE_DYNAMIC = "Dynamic"
PROVENANCE_BOTH = "Both"


def _data_path(name: str) -> Path:
    return Path(str(resources.files("privaudit").joinpath("data", name)))


def registrable_domain(host: str) -> str:
    """Last two labels of a hostname ("ads.flurry.com" -> "flurry.com").

    IP addresses and single-label hosts are returned unchanged. Multi-part
    public suffixes (co.uk) are not special-cased; that imprecision is a
    known limitation of the two-component convention.
    """
    labels = host.lower().strip(".").split(".")
    if len(labels) < 2 or all(l.isdigit() for l in labels):
        return host.lower()
    return ".".join(labels[-2:])


def app_domain(app_package: str) -> str:
    """Registrable domain implied by a reversed-domain package name."""
    return ".".join(reversed(app_package.split(".")[:2]))


def attribute_flow_party(dst_host: str, app_package: str) -> tuple[str, str]:
    """(party, registrable domain) for a flow destination.

    First-party iff the destination's registrable domain equals the domain
    implied by the app's package name.
    """
    domain = registrable_domain(dst_host)
    party = FIRST_PARTY if domain == app_domain(app_package) else THIRD_PARTY
    return party, domain


class MappingTable:
    """Dynamic-label -> PII-label conversion plus derived equivalence groups.

    Groups are derived at load time by uniting all PII labels that share a
    mapping row; labels untouched by any row stay singletons. Construction
    refuses tables whose rows reference unknown labels or whose derived
    groups fail to partition the PII label set.
    """

    def __init__(self, mapping: dict[str, list[str]]):
        for dyn, targets in mapping.items():
            if dyn not in DYNAMIC_LABELS:
                raise MappingTableError(f"unknown dynamic label: {dyn}")
            if not targets:
                raise MappingTableError(f"dynamic label {dyn} maps to nothing")
            for target in targets:
                if target not in PII_LABEL_SET:
                    raise MappingTableError(f"unknown PII label: {target}")
        missing = set(DYNAMIC_LABELS) - set(mapping)
        if missing:
            raise MappingTableError(f"mapping table misses dynamic labels: {sorted(missing)}")
        self._map = {dyn: frozenset(targets) for dyn, targets in mapping.items()}

        parent = {label: label for label in PII_LABELS}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for targets in self._map.values():
            targets = sorted(targets)
            for other in targets[1:]:
                ra, rb = find(targets[0]), find(other)
                if ra != rb:
                    parent[rb] = ra

        members: dict[str, set[str]] = {}
        for label in PII_LABELS:
            members.setdefault(find(label), set()).add(label)
        self._group_of: dict[str, frozenset[str]] = {}
        groups = []
        for group in members.values():
            frozen = frozenset(group)
            groups.append(frozen)
            for label in group:
                self._group_of[label] = frozen
        self.groups: tuple[frozenset[str], ...] = tuple(
            sorted(groups, key=lambda g: min(PII_LABELS.index(l) for l in g))
        )

        covered = set()
        for group in self.groups:
            if covered & group:
                raise MappingTableError("derived groups overlap; not a partition")
            covered |= group
        if covered != PII_LABEL_SET:
            raise MappingTableError("derived groups do not cover all PII labels")

    def map_label(self, dynamic_label: str) -> frozenset[str]:
        try:
            return self._map[dynamic_label]
        except KeyError:
            raise UnknownDynamicLabel(dynamic_label) from None

    def group_of(self, pii_label: str) -> frozenset[str]:
        return self._group_of[pii_label]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "MappingTable":
        p = Path(path) if path else _data_path("label_mapping.json")
        return cls(json.loads(p.read_text(encoding="utf-8")))


def map_dynamic(
    leaks: Iterable[tuple[str, str]], table: MappingTable
) -> set[tuple[str, str]]:
    """Expand (dynamic label, party) pairs to (PII label, party) pairs."""
    out = set()
    for dynamic_label, party in leaks:
        for pii in table.map_label(dynamic_label):
            out.add((pii, party))
    return out


@dataclass
class CombinedLeakSet:
    """Per-party union of static and dynamic leak labels with provenance."""

    app_id: str
    version_code: int
    by_party: dict[str, dict[str, str]]  # party -> pii -> provenance
    third_party_domains: frozenset[str]

    def labels(self, party: str) -> set[str]:
        return set(self.by_party.get(party, {}))

    def count(self, party: str) -> int:
        return len(self.by_party.get(party, {}))


def union_leaks(
    static_leaks: Iterable[StaticLeak],
    dynamic_mapped: Iterable[tuple[str, str]],
    app_id: str = "",
    version_code: int = 0,
    dynamic_domains: Iterable[str] = (),
) -> CombinedLeakSet:
    """Union the static and dynamic leak views with provenance bookkeeping.

    `dynamic_domains` carries the registrable destination domains of
    third-party leaking flows; static third-party domains join them.
    """
    by_party: dict[str, dict[str, str]] = {FIRST_PARTY: {}, THIRD_PARTY: {}}
    domains = set(dynamic_domains)
    for leak in static_leaks:
        by_party[leak.party][leak.pii] = PROVENANCE_STATIC
        if leak.party == THIRD_PARTY and leak.domain:
            domains.add(leak.domain)
    for pii, party in dynamic_mapped:
        previous = by_party[party].get(pii)
        by_party[party][pii] = (
            PROVENANCE_BOTH
            if previous in (PROVENANCE_STATIC, PROVENANCE_BOTH)
            else PROVENANCE_DYNAMIC
        )
    return CombinedLeakSet(app_id, version_code, by_party, frozenset(domains))


@dataclass(frozen=True)
class ViolationRecord:
    """One undisclosed (equivalence group, party) leak."""

    pii: str               # group representative (canonical order)
    group: tuple[str, ...]  # full group, canonical order
    party: str
    provenance: str


def check_compliance(
    leaks: CombinedLeakSet,
    profile: PolicyDisclosureProfile,
    table: MappingTable,
) -> list[ViolationRecord]:
    """Violations: leaked groups with no Performed disclosure for the party.

    The profile must have at least one valid segment (policies without one
    are excluded upstream). Multiple leaked members of one group collapse
    into a single record; NotPerformed disclosures never satisfy a leak.
    """
    if profile.valid_segment_count < 1:
        raise ValueError("profile has no valid segments; exclude the release upstream")
    performed = {
        (d.pii, d.party) for d in profile.disclosed if d.procedure == PERFORMED
    }
    violations = []
    for party in PARTIES:
        leaked_groups: dict[frozenset[str], list[str]] = {}
        for pii, provenance in sorted(leaks.by_party.get(party, {}).items()):
            leaked_groups.setdefault(table.group_of(pii), []).append(provenance)
        for group, provenances in leaked_groups.items():
            if any((member, party) in performed for member in group):
                continue
            if PROVENANCE_BOTH in provenances or {
                PROVENANCE_STATIC,
                PROVENANCE_DYNAMIC,
            } <= set(provenances):
                provenance = PROVENANCE_BOTH
            else:
                provenance = provenances[0]
            ordered = tuple(l for l in PII_LABELS if l in group)
            violations.append(ViolationRecord(ordered[0], ordered, party, provenance))
    return sorted(violations, key=lambda v: (v.party, v.pii))


@dataclass
class DomainDisclosureReport:
    """ALL / NONE / PARTIAL classification of third-party domain disclosure."""

    classification: str
    undisclosed: tuple[str, ...]
    matched_terms: dict[str, list[str]]

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "undisclosed": list(self.undisclosed),
            "matched_terms": self.matched_terms,
        }


def _term_present(term: str, policy_text: str, whole_word: bool) -> bool:
    normalized = normalize_segment(term)
    if not normalized:
        return False
    if whole_word:
        return re.search(rf"\b{re.escape(normalized)}\b", policy_text) is not None
    return normalized in policy_text


def check_domain_disclosure(
    domains: Iterable[str],
    policy_text: str,
    ownership: OwnershipMap,
    whole_word: bool = False,
) -> DomainDisclosureReport:
    """Check every contacted domain's ownership terms against the policy.

    `policy_text` must already be normalized. A domain counts as disclosed
    when any term of its ownership chain occurs in the text (substring by
    default; `whole_word` trades recall for fewer short-name false hits).
    Zero contacted domains classify as ALL.
    """
    undisclosed = []
    matched: dict[str, list[str]] = {}
    for domain in sorted(set(domains)):
        hits = [
            term
            for term in ownership.terms(domain)
            if _term_present(term, policy_text, whole_word)
        ]
        if hits:
            matched[domain] = hits
        else:
            undisclosed.append(domain)
    if not undisclosed:
        classification = "ALL"
    elif not matched:
        classification = "NONE"
    else:
        classification = "PARTIAL"
    return DomainDisclosureReport(classification, tuple(undisclosed), matched)


def violation_counts(violations: Iterable[ViolationRecord]) -> dict[str, int]:
    counts = {party: 0 for party in PARTIES}
    for v in violations:
        counts[v.party] += 1
    return counts


def compare_versions(
    prev: Iterable[ViolationRecord],
    nxt: Iterable[ViolationRecord],
    ordering: tuple[tuple[str, object], tuple[str, object]] | None = None,
) -> dict[str, str]:
    """Per-party Increase/Decrease/Equal between two adjacent versions.

    `ordering`, when given, is ((app_id, release_date), (app_id,
    release_date)) for the two versions and must agree on the app and be
    strictly increasing, else NotAdjacent.
    """
    if ordering is not None:
        (prev_app, prev_date), (next_app, next_date) = ordering
        if prev_app != next_app:
            raise NotAdjacent(f"different apps: {prev_app} vs {next_app}")
        if not prev_date < next_date:
            raise NotAdjacent(f"releases out of order: {prev_date} !< {next_date}")
    before = violation_counts(prev)
    after = violation_counts(nxt)
    deltas = {}
    for party in PARTIES:
        if after[party] > before[party]:
            deltas[party] = "Increase"
        elif after[party] < before[party]:
            deltas[party] = "Decrease"
        else:
            deltas[party] = "Equal"
    return deltas
