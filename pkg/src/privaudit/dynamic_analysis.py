"""PII-leak detection over pre-captured HTTP(S) flow logs.

Two stages: a gain-ratio decision tree decides whether a flow leaks at
all, then keyword/regex rules extract the concrete PII types from the
flows predicted to leak. Rules can additionally match the capture
device's known true values verbatim or as lowercase hex MD5/SHA-1/SHA-256
digests anywhere in the flow text.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

from .errors import SingleClassCorpus
from .labels import DYNAMIC_LABEL_SET

MIN_TOKEN_LEN = 2
DEFAULT_MIN_NODE = 2
DEFAULT_MAX_DEPTH = 30
TREE_FORMAT = "flow-tree/1"
HASH_FAMILIES = ("md5", "sha1", "sha256")

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _data_path(name: str) -> Path:
    return Path(str(resources.files("privaudit").joinpath("data", name)))


@dataclass(frozen=True)
class FlowRecord:
    """One captured HTTP exchange from a flow log."""

    app_id: str
    version_code: int
    timestamp: str
    dst_host: str
    method: str
    uri: str
    headers: tuple[tuple[str, str], ...] = ()
    post_body: bytes = b""
    leak: bool | None = None  # annotation, present in training corpora

    def __post_init__(self):
        if not self.dst_host:
            raise ValueError("dst_host must be non-empty")
        lowered = [k.lower() for k, _ in self.headers]
        if len(lowered) != len(set(lowered)):
            raise ValueError("header keys must be case-insensitively unique")

    def header(self, name: str) -> str | None:
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None


def flow_from_json(obj: dict) -> FlowRecord:
    body = base64.b64decode(obj["post_body_b64"]) if obj.get("post_body_b64") else b""
    return FlowRecord(
        obj.get("app_id", ""),
        int(obj.get("version_code", 0)),
        str(obj.get("ts", "")),
        obj["dst_host"],
        obj.get("method", "GET"),
        obj.get("uri", ""),
        tuple((k, v) for k, v in obj.get("headers", {}).items()),
        body,
        obj.get("leak"),
    )


def flow_to_json(flow: FlowRecord) -> dict:
    obj = {
        "app_id": flow.app_id,
        "version_code": flow.version_code,
        "ts": flow.timestamp,
        "dst_host": flow.dst_host,
        "method": flow.method,
        "uri": flow.uri,
        "headers": {k: v for k, v in flow.headers},
        "post_body_b64": base64.b64encode(flow.post_body).decode("ascii"),
    }
    if flow.leak is not None:
        obj["leak"] = flow.leak
    return obj


def read_flows(path: str | Path) -> list[FlowRecord]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(flow_from_json(json.loads(line)))
    return out


def write_flows(flows: list[FlowRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for flow in flows:
            fh.write(json.dumps(flow_to_json(flow), sort_keys=True) + "\n")


def flow_feature_text(flow: FlowRecord) -> str:
    """Single-space concatenation of URI, Referer slot, body, and headers.

    The Referer slot is always present (empty string when absent); a
    non-empty body, decoded with replacement characters, follows it; every
    other header is appended as key=value in received order.
    """
    parts = [flow.uri, flow.header("Referer") or ""]
    body = flow.post_body.decode("utf-8", errors="replace")
    if body:
        parts.append(body)
    parts.extend(f"{k}={v}" for k, v in flow.headers if k.lower() != "referer")
    return " ".join(parts)


def text_tokens(text: str) -> frozenset[str]:
    """Lowercased alphanumeric chunks of length >= 2."""
    return frozenset(
        t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= MIN_TOKEN_LEN
    )


def flow_tokens(flow: FlowRecord) -> frozenset[str]:
    return text_tokens(flow_feature_text(flow))


# --- decision tree -----------------------------------------------------------


@dataclass
class TreeNode:
    token: str | None = None       # None -> leaf
    present: "TreeNode | None" = None
    absent: "TreeNode | None" = None
    klass: bool = False            # leaf verdict


@dataclass
class DecisionTree:
    """Token-presence decision tree for leak/no-leak flow classification."""

    root: TreeNode
    min_node_size: int = DEFAULT_MIN_NODE
    max_depth: int = DEFAULT_MAX_DEPTH
    n_training: int = 0

    def predict_tokens(self, tokens: frozenset[str]) -> bool:
        node = self.root
        while node.token is not None:
            node = node.present if node.token in tokens else node.absent
        return node.klass

    def predict(self, flow: FlowRecord) -> bool:
        return self.predict_tokens(flow_tokens(flow))

    def node_count(self) -> int:
        def count(node):
            if node.token is None:
                return 1
            return 1 + count(node.present) + count(node.absent)

        return count(self.root)

    def save(self, path: str | Path) -> None:
        def encode(node):
            if node.token is None:
                return {"leaf": node.klass}
            return {
                "token": node.token,
                "present": encode(node.present),
                "absent": encode(node.absent),
            }

        payload = {
            "format": TREE_FORMAT,
            "min_node_size": self.min_node_size,
            "max_depth": self.max_depth,
            "n_training": self.n_training,
            "root": encode(self.root),
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "DecisionTree":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != TREE_FORMAT:
            raise ValueError(f"unsupported tree format: {payload.get('format')!r}")

        def decode(obj):
            if "leaf" in obj:
                return TreeNode(klass=bool(obj["leaf"]))
            return TreeNode(obj["token"], decode(obj["present"]), decode(obj["absent"]))

        return cls(
            decode(payload["root"]),
            int(payload["min_node_size"]),
            int(payload["max_depth"]),
            int(payload["n_training"]),
        )


def _entropy(pos: int, n: int) -> float:
    if n == 0 or pos == 0 or pos == n:
        return 0.0
    p = pos / n
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def _best_split(samples: list[tuple[frozenset[str], bool]]) -> str | None:
    """Token with the best gain ratio; lexicographic tie-break."""
    n = len(samples)
    pos = sum(1 for _, y in samples if y)
    base = _entropy(pos, n)
    counts: dict[str, list[int]] = {}
    for tokens, y in samples:
        for token in tokens:
            cell = counts.setdefault(token, [0, 0])
            cell[0] += 1
            if y:
                cell[1] += 1
    best_token = None
    best_ratio = 0.0
    for token in sorted(counts):
        n_with, pos_with = counts[token]
        if n_with == 0 or n_with == n:
            continue
        n_without = n - n_with
        pos_without = pos - pos_with
        gain = (
            base
            - (n_with / n) * _entropy(pos_with, n_with)
            - (n_without / n) * _entropy(pos_without, n_without)
        )
        if gain <= 1e-12:
            continue
        frac = n_with / n
        split_info = -(frac * math.log2(frac) + (1 - frac) * math.log2(1 - frac))
        ratio = gain / split_info
        if ratio > best_ratio:
            best_ratio = ratio
            best_token = token
    return best_token


def _grow(
    samples: list[tuple[frozenset[str], bool]], depth: int, min_node: int, max_depth: int
) -> TreeNode:
    n = len(samples)
    pos = sum(1 for _, y in samples if y)
    majority = pos * 2 > n  # tie resolves to non-leak
    if pos == 0 or pos == n or n < min_node or depth >= max_depth:
        return TreeNode(klass=majority)
    token = _best_split(samples)
    if token is None:
        return TreeNode(klass=majority)
    with_token = [s for s in samples if token in s[0]]
    without = [s for s in samples if token not in s[0]]
    return TreeNode(
        token,
        _grow(with_token, depth + 1, min_node, max_depth),
        _grow(without, depth + 1, min_node, max_depth),
    )


def train_leak_classifier(
    labeled_flows: list[tuple[FlowRecord, bool]],
    min_node_size: int = DEFAULT_MIN_NODE,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> DecisionTree:
    """Grow a gain-ratio tree over token-presence features.

    Growth stops at node purity, the minimum node size, or the depth cap;
    there is no post-pruning, so training is fully deterministic.
    """
    samples = [(flow_tokens(flow), bool(y)) for flow, y in labeled_flows]
    if len({y for _, y in samples}) < 2:
        raise SingleClassCorpus("training corpus contains a single class")
    root = _grow(samples, 0, min_node_size, max_depth)
    return DecisionTree(root, min_node_size, max_depth, len(samples))


def predict_leak(tree: DecisionTree, flow: FlowRecord) -> bool:
    return tree.predict(flow)


def evaluate_leak_classifier(
    tree: DecisionTree, labeled_flows: list[tuple[FlowRecord, bool]]
) -> dict[str, float]:
    tp = fp = fn = tn = 0
    for flow, y in labeled_flows:
        predicted = tree.predict(flow)
        if predicted and y:
            tp += 1
        elif predicted:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    total = tp + fp + fn + tn
    return {
        "accuracy": (tp + tn) / total if total else 0.0,
        "precision": tp / (tp + fp) if (tp + fp) else 0.0,
        "recall": tp / (tp + fn) if (tp + fn) else 0.0,
        "n": total,
    }


# --- rule-based PII extraction -------------------------------------------------

RULE_KINDS = ("Literal", "KnownDeviceValue", "Format")


@dataclass(frozen=True)
class PiiRule:
    """Extraction rule for one dynamic leak label.

    Literal and KnownDeviceValue rules match their patterns against the
    keys of key=value pairs parsed from the query string and body;
    KnownDeviceValue additionally matches the device's true value and its
    digests anywhere in the flow text. Format rules run their patterns
    over the whole flow text (structural shapes such as coordinates).
    """

    label: str
    key_patterns: tuple[str, ...]
    kind: str
    compiled: tuple[re.Pattern, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self):
        if self.label not in DYNAMIC_LABEL_SET:
            raise ValueError(f"unknown dynamic label: {self.label}")
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind: {self.kind}")
        if not self.key_patterns:
            raise ValueError(f"rule {self.label} has no patterns")
        object.__setattr__(
            self,
            "compiled",
            tuple(re.compile(p, re.IGNORECASE) for p in self.key_patterns),
        )


def load_rules(path: str | Path | None = None) -> list[PiiRule]:
    p = Path(path) if path else _data_path("pii_rules.json")
    raw = json.loads(p.read_text(encoding="utf-8"))
    return [PiiRule(item["label"], tuple(item["keys"]), item["kind"]) for item in raw]


class DeviceProfile:
    """True values used on the capture device, keyed by dynamic label."""

    def __init__(self, values: dict[str, str]):
        self.values = {k: str(v) for k, v in values.items() if str(v)}
        self._digests: dict[str, tuple[str, ...]] = {}

    @classmethod
    def load(cls, path: str | Path) -> "DeviceProfile":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def empty(cls) -> "DeviceProfile":
        return cls({})

    def value(self, label: str) -> str | None:
        return self.values.get(label)

    def digests(self, label: str) -> tuple[str, ...]:
        """Lowercase hex digests of the label's true value, one per family."""
        if label not in self._digests:
            value = self.values.get(label)
            if value is None:
                self._digests[label] = ()
            else:
                data = value.encode("utf-8")
                self._digests[label] = tuple(
                    hashlib.new(family, data).hexdigest() for family in HASH_FAMILIES
                )
        return self._digests[label]


def _flatten_json(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for key, value in obj.items():
            yield from _flatten_json(value, f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list):
        for i, value in enumerate(obj):
            yield from _flatten_json(value, f"{prefix}.{i}" if prefix else str(i))
    else:
        yield prefix, "" if obj is None else str(obj)


def flow_key_values(flow: FlowRecord) -> list[tuple[str, str]]:
    """key=value pairs from the URI query plus the body.

    Bodies are tried as JSON first (nested objects flattened to dotted
    paths) and fall back to urlencoded form parsing.
    """
    pairs = list(parse_qsl(urlsplit(flow.uri).query, keep_blank_values=True))
    body = flow.post_body.decode("utf-8", errors="replace")
    if body:
        try:
            parsed = json.loads(body)
        except ValueError:
            pairs.extend(parse_qsl(body, keep_blank_values=True))
        else:
            if isinstance(parsed, (dict, list)):
                pairs.extend(_flatten_json(parsed))
    return pairs


def extract_pii(
    flow: FlowRecord, rules: list[PiiRule], profile: DeviceProfile
) -> set[str]:
    """Union of dynamic labels whose rules fire on this flow."""
    text = flow_feature_text(flow)
    pairs = flow_key_values(flow)
    fired = set()
    for rule in rules:
        if rule.kind == "Format":
            hit = any(p.search(text) for p in rule.compiled)
        else:
            hit = any(p.search(key) for p in rule.compiled for key, _ in pairs)
            if not hit and rule.kind == "KnownDeviceValue":
                value = profile.value(rule.label)
                if value:
                    hit = value in text or any(
                        digest in text for digest in profile.digests(rule.label)
                    )
        if hit:
            fired.add(rule.label)
    return fired
