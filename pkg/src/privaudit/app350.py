"""Converter for the public APP-350 annotated-policy layout.

Best-effort: reads every .yml policy file in a directory, turning each
segment's practice annotations (e.g. "Contact_E_Mail_Address_1stParty"
with modality PERFORMED) into the toolkit's (pii, procedure, party)
triples. Unrecognized annotations are skipped and reported.
"""

from __future__ import annotations

from pathlib import Path

from .classifier import AnnotatedSegment, write_annotated_jsonl
from .labels import PII_LABEL_SET

_MODALITIES = {"PERFORMED": "Performed", "NOT_PERFORMED": "Not_Performed"}
_PARTY_SUFFIXES = {"_1stParty": "1stParty", "_3rdParty": "3rdParty"}


def _parse_practice(practice: str) -> tuple[str, str] | None:
    for suffix, party in _PARTY_SUFFIXES.items():
        if practice.endswith(suffix):
            pii = practice[: -len(suffix)]
            if pii in PII_LABEL_SET:
                return pii, party
    return None


def load_app350_dir(
    corpus_dir: str | Path,
) -> tuple[list[AnnotatedSegment], list[str]]:
    """Segments grouped per policy file order, plus skip warnings.

    Returns one AnnotatedSegment per policy segment; segments of one policy
    stay contiguous so an index split by policy remains possible.
    """
    import yaml

    segments: list[AnnotatedSegment] = []
    warnings: list[str] = []
    paths = sorted(Path(corpus_dir).glob("*.yml")) + sorted(Path(corpus_dir).glob("*.yaml"))
    if not paths:
        raise FileNotFoundError(f"no .yml policies under {corpus_dir}")
    for path in paths:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        for seg in doc.get("segments", []):
            text = seg.get("segment_text", "")
            triples = set()
            for ann in seg.get("annotations", []) or []:
                practice = ann.get("practice", "")
                modality = _MODALITIES.get(ann.get("modality", ""))
                parsed = _parse_practice(practice)
                if parsed is None or modality is None:
                    warnings.append(f"{path.name}: skipped annotation {practice!r}")
                    continue
                pii, party = parsed
                triples.add((pii, modality, party))
            segments.append(AnnotatedSegment(text, frozenset(triples)))
    return segments, warnings


def convert_app350_dir(corpus_dir: str | Path, out_path: str | Path) -> int:
    """Write the directory as annotated JSONL; returns the segment count."""
    segments, _ = load_app350_dir(corpus_dir)
    write_annotated_jsonl(segments, out_path)
    return len(segments)
