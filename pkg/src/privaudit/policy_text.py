"""Privacy-policy page cleanup: visible-text extraction, paragraph
segmentation, and token normalization.

Archived captures are sometimes wrapped in a plain-text envelope that
begins with "success" and ends with "TIMESTAMPS"; extraction strips it
before anything else sees the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser

from .errors import EmptyPolicy, MalformedDocument

# A non-final segment shorter than this is treated as a heading and folded
# into the paragraph that follows it.
MIN_SEGMENT_CHARS = 50
# Two adjacent segments whose combined length is below this merge once.
COMBINE_CHAR_CAP = 250

_ARCHIVE_PREFIX_START = "success"
_ARCHIVE_PREFIX_END = "TIMESTAMPS"

# Elements whose open/close boundaries end a visible line of text.
_BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre",
    "section", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
})
# Content nested inside these never reaches the extracted text.
_SKIP_TAGS = frozenset({"script", "style", "noscript"})


class _BodyTextParser(HTMLParser):
    """Collects visible text inside <body>; block boundaries emit newlines."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.saw_body = False
        self._in_body = False
        self._skip_depth = 0

    def _emit_break(self) -> None:
        if self._in_body:
            self.parts.append("\n")

    def handle_starttag(self, tag, attrs):
        if tag == "body":
            self.saw_body = True
            self._in_body = True
        elif tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS or tag == "br":
            self._emit_break()

    def handle_endtag(self, tag):
        if tag == "body":
            self._in_body = False
        elif tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._emit_break()

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS or tag == "br":
            self._emit_break()

    def handle_data(self, data):
        if self._in_body and not self._skip_depth and data:
            # Source whitespace carries no structure; paragraph breaks come
            # only from block boundaries.
            self.parts.append(re.sub(r"\s+", " ", data))


def _strip_archive_prefix(text: str) -> str:
    lead = text.lstrip()
    if lead.startswith(_ARCHIVE_PREFIX_START):
        end = lead.find(_ARCHIVE_PREFIX_END)
        if end != -1:
            return lead[end + len(_ARCHIVE_PREFIX_END):].lstrip()
    return text


def extract_text(html: str | bytes) -> str:
    """Visible body text with block boundaries preserved as newlines.

    Content nested in script/style/noscript is dropped, entity references
    are decoded, and any archive envelope prefix is removed.

    Raises MalformedDocument when no <body> element exists and EmptyPolicy
    when extraction yields only whitespace.
    """
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    parser = _BodyTextParser()
    parser.feed(html)
    parser.close()
    if not parser.saw_body:
        raise MalformedDocument("no <body> element found")
    lines = [ln.strip() for ln in "".join(parser.parts).split("\n")]
    text = re.sub(r"\n{3,}", "\n\n", "\n".join(lines)).strip()
    text = _strip_archive_prefix(text)
    if not text.strip():
        raise EmptyPolicy("body contains no visible text")
    return text


def extract_policy_text(snapshot) -> str:
    """Extract a snapshot's policy text and record it on the snapshot."""
    text = extract_text(snapshot.raw_html)
    snapshot.extracted_text = text
    return text


@dataclass
class Segment:
    """One policy paragraph after segmentation.

    `char_len` is the length at segmentation time; it stays meaningful
    after `text` has been normalized downstream.
    """

    policy_id: str
    index: int
    text: str
    char_len: int


def segment_policy(text: str, policy_id: str = "") -> list[Segment]:
    """Split policy text into paragraphs and apply the two merge rules.

    Candidates are blank-line-delimited paragraphs. In order: (a) a
    non-final candidate under MIN_SEGMENT_CHARS folds forward into the
    next one (heading rule); (b) two adjacent results whose combined
    length is under COMBINE_CHAR_CAP merge once, without cascading.
    Only the final segment may end up shorter than MIN_SEGMENT_CHARS.
    """
    candidates = [c.strip() for c in re.split(r"\n\s*\n", text)]
    candidates = [c for c in candidates if c]
    if not candidates:
        return []

    headed: list[str] = []
    carry = ""
    last = len(candidates) - 1
    for i, cand in enumerate(candidates):
        if carry:
            cand = carry + " " + cand
            carry = ""
        if len(cand) < MIN_SEGMENT_CHARS and i != last:
            carry = cand
        else:
            headed.append(cand)

    merged: list[str] = []
    i = 0
    while i < len(headed):
        nxt = i + 1
        if nxt < len(headed) and len(headed[i]) + len(headed[nxt]) < COMBINE_CHAR_CAP:
            merged.append(headed[i] + " " + headed[nxt])
            i += 2
        else:
            merged.append(headed[i])
            i += 1

    return [Segment(policy_id, idx, t, len(t)) for idx, t in enumerate(merged)]


# Only the n't family expands; other apostrophes are dropped later with the
# rest of the non-letter characters.
_CONTRACTIONS = {
    "don't": "do not",
    "doesn't": "does not",
    "didn't": "did not",
    "haven't": "have not",
    "hasn't": "has not",
    "hadn't": "had not",
    "won't": "will not",
    "can't": "can not",
    "isn't": "is not",
    "aren't": "are not",
    "wasn't": "was not",
    "weren't": "were not",
    "shouldn't": "should not",
    "wouldn't": "would not",
    "couldn't": "could not",
}
_CONTRACTION_RE = re.compile(r"\b(" + "|".join(sorted(_CONTRACTIONS)) + r")\b")


def normalize_segment(text: str) -> str:
    """Lowercase, expand n't contractions, keep only letters and spaces,
    and drop single-character tokens. Idempotent."""
    text = text.lower().replace("’", "'")
    text = re.sub(r"\s+", " ", text)
    text = _CONTRACTION_RE.sub(lambda m: _CONTRACTIONS[m.group(1)], text)
    text = re.sub(r"[^a-z ]", "", text)
    return " ".join(t for t in text.split(" ") if len(t) > 1)
